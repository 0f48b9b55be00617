"""Multi-object tracking metrics over center trajectories.

Ground truth and predictions are both frame-indexed maps of object id
to box center.  Matching per frame prefers continuing last frame's
pairings when they are still within the match radius, then resolves
the remainder with a minimum-distance assignment gated at the radius.
MOTA counts misses, false positives, and identity switches against the
total ground-truth object count; MOTP is the mean matched distance.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

DEFAULT_MATCH_RADIUS = 1.0
_UNMATCHABLE = 1e9

# frame index -> object id -> center (3,)
CenterTracks = dict


@dataclass(frozen=True)
class MotReport:
    mota: float
    motp: float
    id_switches: int
    false_pos: int
    false_neg: int
    gt_count: int
    matches: int
    seconds_per_frame: float

    def __post_init__(self):
        counts = (
            self.id_switches,
            self.false_pos,
            self.false_neg,
            self.gt_count,
            self.matches,
        )
        if any(c < 0 for c in counts):
            raise ValueError("negative count in report")
        if self.gt_count < 1:
            raise ValueError("gt_count must be positive")
        errors = self.false_neg + self.false_pos + self.id_switches
        if abs(self.mota - (1.0 - errors / self.gt_count)) > 1e-12:
            raise ValueError("mota does not match its error counts")
        if self.motp < 0.0 or self.seconds_per_frame < 0.0:
            raise ValueError("motp and seconds_per_frame must be non-negative")


def read_center_tracks(path) -> CenterTracks:
    """Load a tracks CSV into frame -> id -> center."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("frame,track_id,"):
        raise ValueError(f"{path}: not a tracks CSV")
    out: CenterTracks = {}
    for number, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) < 5:
            raise ValueError(f"{path}:{number}: expected at least 5 fields")
        try:
            frame = int(parts[0])
            tid = int(parts[1])
            center = np.array([float(v) for v in parts[2:5]])
        except ValueError as err:
            raise ValueError(f"{path}:{number}: {err}") from None
        if not np.isfinite(center).all():
            raise ValueError(f"{path}:{number}: non-finite center")
        per_frame = out.setdefault(frame, {})
        if tid in per_frame:
            raise ValueError(f"{path}:{number}: track {tid} repeats in frame {frame}")
        per_frame[tid] = center
    return out


def _match_frame(gt_objs, pred_objs, last_match, radius):
    """Greedy continuations first, then gated minimum-distance assignment."""
    pairs = []
    used_pred = set()
    remaining_gt = []
    for gid in sorted(gt_objs):
        pid = last_match.get(gid)
        if pid is not None and pid in pred_objs and pid not in used_pred:
            d = float(np.linalg.norm(gt_objs[gid] - pred_objs[pid]))
            if d <= radius:
                pairs.append((gid, pid, d))
                used_pred.add(pid)
                continue
        remaining_gt.append(gid)
    remaining_pred = [pid for pid in sorted(pred_objs) if pid not in used_pred]
    if remaining_gt and remaining_pred:
        cost = np.empty((len(remaining_gt), len(remaining_pred)))
        for a, gid in enumerate(remaining_gt):
            for b, pid in enumerate(remaining_pred):
                d = float(np.linalg.norm(gt_objs[gid] - pred_objs[pid]))
                cost[a, b] = d if d <= radius else _UNMATCHABLE
        rows, cols = linear_sum_assignment(cost)
        for a, b in zip(rows, cols):
            if cost[a, b] <= radius:
                pairs.append((remaining_gt[a], remaining_pred[b], cost[a, b]))
    return pairs


def evaluate(
    gt: CenterTracks,
    pred: CenterTracks,
    match_radius: float = DEFAULT_MATCH_RADIUS,
    seconds_per_frame: float = 0.0,
) -> MotReport:
    """Score predicted tracks against ground-truth tracks."""
    if match_radius <= 0.0:
        raise ValueError("match_radius must be positive")
    gt_count = sum(len(objs) for objs in gt.values())
    if gt_count == 0:
        raise ValueError("ground truth contains no objects; metrics are undefined")
    lo, hi = min(gt), max(gt)
    outside = [f for f in pred if not lo <= f <= hi]
    if outside:
        raise ValueError(
            f"prediction frames {sorted(outside)} fall outside "
            f"ground-truth range [{lo}, {hi}]"
        )
    last_match: dict = {}
    false_neg = false_pos = id_switches = matches = 0
    dist_sum = 0.0
    for frame in sorted(set(gt) | set(pred)):
        gt_objs = gt.get(frame, {})
        pred_objs = pred.get(frame, {})
        pairs = _match_frame(gt_objs, pred_objs, last_match, match_radius)
        for gid, pid, d in pairs:
            previous = last_match.get(gid)
            if previous is not None and previous != pid:
                id_switches += 1
            last_match[gid] = pid
            dist_sum += d
        matches += len(pairs)
        false_neg += len(gt_objs) - len(pairs)
        false_pos += len(pred_objs) - len(pairs)
    motp = dist_sum / matches if matches else 0.0
    # (gt - errors)/gt keeps ratios like 2/3 bit-exact; 1 - errors/gt
    # can land one ulp away
    mota = (gt_count - (false_neg + false_pos + id_switches)) / gt_count
    return MotReport(
        mota=mota,
        motp=motp,
        id_switches=id_switches,
        false_pos=false_pos,
        false_neg=false_neg,
        gt_count=gt_count,
        matches=matches,
        seconds_per_frame=seconds_per_frame,
    )


def report_table(report: MotReport) -> str:
    rows = [
        ("MOTA", f"{report.mota:.6f}"),
        ("MOTP", f"{report.motp:.6f}"),
        ("ID switches", str(report.id_switches)),
        ("False positives", str(report.false_pos)),
        ("False negatives", str(report.false_neg)),
        ("GT objects", str(report.gt_count)),
        ("Matches", str(report.matches)),
        ("Seconds/frame", f"{report.seconds_per_frame:.6f}"),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def report_json(report: MotReport) -> str:
    return json.dumps(asdict(report), indent=2, sort_keys=True)
