"""Track linking: fuse affinities into scores, assign optimally, grow tracks.

For each consecutive frame pair the trimmed forward/backward matrices
are averaged into a score matrix whose extra column holds the leave
probability.  A previous/current pair may link only when its score
beats both that leave probability and the birth threshold; among all
ways to keep such pairs, the assignment with the highest total score
wins (scores of gate-failing pairs are floored to zero, which makes the
Hungarian optimum equal to the brute-force optimum over gated partial
matchings).  Unmatched current objects open new tracks, unmatched
previous objects end theirs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .affinity import AffinityMatrices, affinity_from_features
from .cropping import DEFAULT_POINTS_PER_OBJECT, crop_frame
from .model import AffinityModel
from .pointnet import featurize_frame
from .sequence_io import SequenceSource, format_float, load_admitted_frame

DEFAULT_BIRTH_THRESHOLD = 0.3
TRACKS_HEADER = "frame,track_id,cx,cy,cz,l,w,h,yaw,conf"


@dataclass(frozen=True)
class AssignmentResult:
    """Partition of one frame pair's slots into links, births, deaths."""

    matches: frozenset
    births: frozenset
    deaths: frozenset

    def __post_init__(self):
        prev_used = [i for i, _ in self.matches]
        cur_used = [j for _, j in self.matches]
        if len(set(prev_used)) != len(prev_used) or len(set(cur_used)) != len(cur_used):
            raise ValueError("a slot appears in more than one match")
        if set(prev_used) & self.deaths or set(cur_used) & self.births:
            raise ValueError("matched slots cannot also be births/deaths")


@dataclass(frozen=True)
class TrackerConfig:
    birth_threshold: float = DEFAULT_BIRTH_THRESHOLD
    points_per_object: int = DEFAULT_POINTS_PER_OBJECT
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not 0.0 <= self.birth_threshold <= 1.0:
            raise ValueError("birth_threshold must be in [0, 1]")
        if self.points_per_object < 1:
            raise ValueError("points_per_object must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class TrackSet:
    """Identity-labeled trajectories: track_id -> ((frame, slot), ...)."""

    tracks: dict = field(default_factory=dict)
    next_id: int = 0


def score_matrix(aff: AffinityMatrices) -> np.ndarray:
    """count_prev x (count_cur + 1): fused real scores plus leave column."""
    cp, cc = aff.counts
    s = np.empty((cp, cc + 1))
    s[:, :cc] = (aff.a1_trim[:cp, :cc] + aff.a2_trim[:cp, :cc]) / 2.0
    s[:, cc] = aff.a1[:cp, aff.capacity]
    return s


def solve_assignment(
    s: np.ndarray, birth_threshold: float = DEFAULT_BIRTH_THRESHOLD
) -> AssignmentResult:
    """Best gated assignment for one score matrix.

    A pair is eligible only when its score strictly beats both the
    row's leave score and the birth threshold.  Ineligible pairs score
    zero in the benefit matrix, exactly like leaving both slots
    unmatched, so the solver's total equals the best achievable total
    over all gate-respecting partial matchings.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] < 1:
        raise ValueError(f"score matrix must be (n_prev, n_cur + 1), got {s.shape}")
    if not np.isfinite(s).all():
        raise ValueError("non-finite score")
    if not 0.0 <= birth_threshold <= 1.0:
        raise ValueError("birth_threshold must be in [0, 1]")
    cp, cc = s.shape[0], s.shape[1] - 1
    if cp == 0 or cc == 0:
        return AssignmentResult(
            frozenset(), frozenset(range(cc)), frozenset(range(cp))
        )
    real = s[:, :cc]
    gate = (real > s[:, cc:]) & (real > birth_threshold)
    benefit = np.where(gate, real, 0.0)
    rows, cols = linear_sum_assignment(benefit, maximize=True)
    matches = frozenset(
        (int(i), int(j)) for i, j in zip(rows, cols) if gate[i, j]
    )
    prev_used = {i for i, _ in matches}
    cur_used = {j for _, j in matches}
    return AssignmentResult(
        matches,
        frozenset(j for j in range(cc) if j not in cur_used),
        frozenset(i for i in range(cp) if i not in prev_used),
    )


def update_tracks(
    ts: TrackSet,
    result: AssignmentResult,
    frame_index: int,
    prev_frame_index: int | None = None,
) -> TrackSet:
    """Extend matched tracks, open tracks for births; deaths just stop."""
    if prev_frame_index is None:
        prev_frame_index = frame_index - 1
    open_slots = {}
    for tid, entries in ts.tracks.items():
        f, slot = entries[-1]
        if f == prev_frame_index:
            if slot in open_slots:
                raise ValueError(f"two tracks end on slot {slot} of frame {f}")
            open_slots[slot] = tid
    tracks = dict(ts.tracks)
    claimed = set()
    for i, j in sorted(result.matches):
        tid = open_slots.get(i)
        if tid is None:
            raise ValueError(
                f"matched previous slot {i} has no open track at frame {prev_frame_index}"
            )
        if j in claimed:
            raise ValueError(f"slot {j} claimed twice in frame {frame_index}")
        claimed.add(j)
        tracks[tid] = tracks[tid] + ((frame_index, j),)
    next_id = ts.next_id
    for j in sorted(result.births):
        if j in claimed:
            raise ValueError(f"slot {j} claimed twice in frame {frame_index}")
        claimed.add(j)
        tracks[next_id] = ((frame_index, j),)
        next_id += 1
    return TrackSet(tracks, next_id)


def track_sequence(
    src: SequenceSource,
    model: AffinityModel,
    cfg: TrackerConfig = TrackerConfig(),
    timing: dict | None = None,
) -> TrackSet:
    """Run the full pipeline over consecutive frames of a sequence.

    When a dict is passed as timing, it receives seconds_per_frame.
    """
    capacity = src.config.max_objects
    ts = TrackSet()
    prev_fs = None
    started = time.perf_counter()
    for index in range(src.frame_count):
        frame = load_admitted_frame(src, index)
        crops = crop_frame(frame, P=cfg.points_per_object, seed=cfg.seed)
        fs = featurize_frame(
            crops, model.pointnet, capacity, frame_index=index, threads=cfg.threads
        )
        if prev_fs is None:
            result = AssignmentResult(
                frozenset(), frozenset(range(fs.count)), frozenset()
            )
        else:
            aff = affinity_from_features(
                prev_fs, fs, model.compression, model.dummy_score, threads=cfg.threads
            )
            result = solve_assignment(score_matrix(aff), cfg.birth_threshold)
        ts = update_tracks(ts, result, index)
        prev_fs = fs
    if timing is not None:
        elapsed = time.perf_counter() - started
        timing["seconds_per_frame"] = (
            elapsed / src.frame_count if src.frame_count else 0.0
        )
    return ts


def write_tracks_csv(path, src: SequenceSource, ts: TrackSet) -> None:
    """Track output rows sorted by frame then track id."""
    rows = []
    for tid, entries in ts.tracks.items():
        for frame_index, slot in entries:
            rows.append((frame_index, tid, slot))
    rows.sort()
    frames = {}
    lines = [TRACKS_HEADER]
    for frame_index, tid, slot in rows:
        if frame_index not in frames:
            frames[frame_index] = load_admitted_frame(src, frame_index)
        det = frames[frame_index].detections[slot]
        b = det.box
        vals = [b.center[0], b.center[1], b.center[2],
                b.length, b.width, b.height, b.yaw, det.confidence]
        lines.append(
            f"{frame_index},{tid}," + ",".join(format_float(v) for v in vals)
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
