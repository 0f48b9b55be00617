"""Command-line interface for the tracking pipeline.

Subcommands: synth (generate a labeled sequence), train (fit the
affinity head), track (run the tracker over a sequence), eval (score
tracks against ground truth), losscheck (gradient and loss-identity
verification).  Exit codes: 0 success, 1 runtime failure, 2 usage
error.  stdout carries machine-parseable data only; diagnostics go to
stderr.  Every subcommand is deterministic given --seed; --threads
never changes any output byte.
"""

from __future__ import annotations

import argparse
import os
import sys

from .association import TrackerConfig, track_sequence, write_tracks_csv
from .metrics import evaluate, read_center_tracks, report_json, report_table
from .model import load_model
from .sequence_io import IngestConfig, open_sequence
from .synth import SynthConfig, generate, perturb
from .training import TrainConfig, train
from .verification import run_losscheck

THREADS_ENV = "PCDAN_THREADS"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _rate(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0.0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0.0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _leave_event(text: str) -> tuple:
    try:
        frame, obj = text.split(":")
        return ("leave", int(frame), int(obj))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected FRAME:OBJECT, got {text!r}"
        ) from None


def _enter_event(text: str) -> tuple:
    return ("enter", int(text))


def default_threads() -> int:
    """PCDAN_THREADS when set, otherwise the machine's core count."""
    env = os.environ.get(THREADS_ENV, "")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}")
        if value < 1:
            raise ValueError(f"{THREADS_ENV} must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def _add_threads_flag(sub) -> None:
    sub.add_argument(
        "--threads",
        type=_positive_int,
        default=None,
        help=f"worker threads (default: {THREADS_ENV} or all cores)",
    )


def _resolve_threads(args) -> int:
    return args.threads if args.threads is not None else default_threads()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloudtrack",
        description="tracking-by-detection for 3D point-cloud sequences",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)

    synth = subs.add_parser("synth", help="generate a synthetic labeled sequence")
    synth.add_argument("--out", required=True, help="output sequence directory")
    synth.add_argument("--objects", type=_positive_int, default=3)
    synth.add_argument("--frames", type=_positive_int, default=20)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--points-per-object", type=_positive_int, default=200)
    synth.add_argument(
        "--leave", type=_leave_event, action="append", default=[],
        metavar="FRAME:OBJECT", help="remove an object from this frame on",
    )
    synth.add_argument(
        "--enter", type=_enter_event, action="append", default=[],
        metavar="FRAME", help="introduce a new object at this frame",
    )
    synth.add_argument("--det-noise-sigma", type=_nonneg_float, default=0.0)
    synth.add_argument("--fp-rate", type=_rate, default=0.0)
    synth.add_argument("--fn-rate", type=_rate, default=0.0)
    synth.add_argument("--conf-lo", type=_rate, default=0.0)
    synth.add_argument("--conf-hi", type=_rate, default=0.4)
    synth.set_defaults(func=cmd_synth)

    trn = subs.add_parser("train", help="fit the affinity head on a labeled sequence")
    trn.add_argument("--seq", required=True, help="labeled sequence directory")
    trn.add_argument("--out", required=True, help="output weights file")
    trn.add_argument("--steps", type=_nonneg_int, default=500)
    trn.add_argument("--lr", type=_positive_float, default=1e-2)
    trn.add_argument("--batch-pairs", type=_positive_int, default=4)
    trn.add_argument("--seed", type=int, default=0)
    trn.add_argument("--log", default=None, help="optional loss log CSV path")
    _add_threads_flag(trn)
    trn.set_defaults(func=cmd_train)

    trk = subs.add_parser("track", help="track a sequence with trained weights")
    trk.add_argument("--seq", required=True, help="sequence directory")
    trk.add_argument("--weights", required=True, help="model weights file")
    trk.add_argument("--out", required=True, help="output tracks CSV")
    trk.add_argument("--birth-threshold", type=_rate, default=0.3)
    trk.add_argument("--conf-threshold", type=_rate, default=0.4)
    trk.add_argument("--seed", type=int, default=0)
    _add_threads_flag(trk)
    trk.set_defaults(func=cmd_track)

    ev = subs.add_parser("eval", help="score predicted tracks against ground truth")
    ev.add_argument("--gt", required=True, help="ground-truth tracks CSV")
    ev.add_argument("--pred", required=True, help="predicted tracks CSV")
    ev.add_argument("--radius", type=_positive_float, default=1.0)
    ev.set_defaults(func=cmd_eval)

    lc = subs.add_parser("losscheck", help="gradient and loss-identity verification")
    lc.add_argument("--trials", type=_positive_int, default=20)
    lc.add_argument("--seed", type=int, default=0)
    lc.add_argument(
        "--corrupt-gradient", action="store_true",
        help="fault-injection hook: corrupt one gradient entry; must fail",
    )
    lc.set_defaults(func=cmd_losscheck)
    return parser


def cmd_synth(args) -> int:
    events = tuple(args.leave) + tuple(args.enter)
    cfg = SynthConfig(
        n_objects=args.objects,
        n_frames=args.frames,
        seed=args.seed,
        points_per_object=args.points_per_object,
        events=events,
    )
    src = generate(cfg, args.out)
    if args.det_noise_sigma > 0.0 or args.fp_rate > 0.0 or args.fn_rate > 0.0:
        perturb(
            src,
            det_noise_sigma=args.det_noise_sigma,
            fp_rate=args.fp_rate,
            fn_rate=args.fn_rate,
            conf_model=(args.conf_lo, args.conf_hi),
            seed=args.seed,
        )
    print(f"out={args.out} frames={cfg.n_frames} objects={cfg.n_objects}")
    return 0


def cmd_train(args) -> int:
    src = open_sequence(args.seq)
    cfg = TrainConfig(
        steps=args.steps,
        learning_rate=args.lr,
        batch_pairs=args.batch_pairs,
        seed=args.seed,
    )
    _, log = train(
        src,
        cfg,
        weights_out=args.out,
        log_out=args.log,
        threads=_resolve_threads(args),
    )
    final = float(log[-1].total) if log else float("nan")
    print(f"weights={args.out} steps={cfg.steps} final_total={final!r}")
    return 0


def cmd_track(args) -> int:
    src = open_sequence(
        args.seq, IngestConfig(confidence_threshold=args.conf_threshold)
    )
    model = load_model(args.weights)
    cfg = TrackerConfig(
        birth_threshold=args.birth_threshold,
        seed=args.seed,
        threads=_resolve_threads(args),
    )
    timing: dict = {}
    ts = track_sequence(src, model, cfg, timing=timing)
    write_tracks_csv(args.out, src, ts)
    print(
        f"out={args.out} frames={src.frame_count} tracks={len(ts.tracks)} "
        f"seconds_per_frame={timing['seconds_per_frame']:.6f}"
    )
    return 0


def cmd_eval(args) -> int:
    gt = read_center_tracks(args.gt)
    pred = read_center_tracks(args.pred)
    report = evaluate(gt, pred, match_radius=args.radius)
    print(report_table(report))
    print(report_json(report))
    return 0


def cmd_losscheck(args) -> int:
    report = run_losscheck(
        args.trials, seed=args.seed, corrupt_gradient=args.corrupt_gradient
    )
    for line in report.lines:
        print(line)
    return 0 if report.ok else 1


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse has already written the usage message to stderr
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
