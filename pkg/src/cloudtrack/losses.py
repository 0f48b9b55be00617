"""Association losses and their analytic gradients.

Four terms, each normalized and averaged into the training objective:

- forward loss: cross-entropy of A1 rows against the forward ground
  truth (where did each previous object go, dummy column = left),
- backward loss: cross-entropy of A2 columns against the backward
  ground truth (where did each current object come from, dummy row =
  entered),
- consistency loss: entry-wise L1 gap between the trimmed forward and
  backward matrices,
- assemble loss: cross-entropy against the element-wise max of the two
  trimmed matrices at true-match cells.

total = (l_f + l_b + l_c + l_a) / 4.

Gradients are taken with respect to the raw augmented score matrices M1
and M2 (and the shared dummy score) through the masked softmax.  Ties
in the consistency term use the sign(0) = 0 subgradient; ties in the
assemble max route the gradient to the backward matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .affinity import AffinityMatrices, normalize_pair
from .geometry import Frame
from .pointnet import DEFAULT_CAPACITY


@dataclass(frozen=True)
class GroundTruthAssignment:
    """Zero/one association targets for one frame pair.

    g1 is (N, N+1) with the leave column last, g2 is (N+1, N) with the
    enter row last, g3 is the (N, N) real-match matrix.  Every valid g1
    row and g2 column sums to exactly one.
    """

    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    counts: tuple[int, int]

    def __post_init__(self):
        g1 = np.asarray(self.g1, dtype=np.float64)
        g2 = np.asarray(self.g2, dtype=np.float64)
        g3 = np.asarray(self.g3, dtype=np.float64)
        cap = g3.shape[0]
        cp, cc = self.counts
        if g3.shape != (cap, cap) or g1.shape != (cap, cap + 1) or g2.shape != (cap + 1, cap):
            raise ValueError("ground-truth shapes inconsistent")
        for name, g in (("g1", g1), ("g2", g2), ("g3", g3)):
            if not np.isin(g, (0.0, 1.0)).all():
                raise ValueError(f"{name} must be zero/one")
        if not np.array_equal(g1[:cp].sum(axis=1), np.ones(cp)):
            raise ValueError("each valid g1 row must sum to 1")
        if np.any(g1[cp:]):
            raise ValueError("g1 rows past count_prev must be zero")
        if not np.array_equal(g2[:, :cc].sum(axis=0), np.ones(cc)):
            raise ValueError("each valid g2 column must sum to 1")
        if np.any(g2[:, cc:]):
            raise ValueError("g2 columns past count_cur must be zero")
        if not (np.array_equal(g3, g1[:, :cap]) and np.array_equal(g3, g2[:cap, :])):
            raise ValueError("g3 must agree with g1 and g2 on real cells")
        object.__setattr__(self, "g1", g1)
        object.__setattr__(self, "g2", g2)
        object.__setattr__(self, "g3", g3)
        object.__setattr__(self, "counts", (int(cp), int(cc)))

    @property
    def capacity(self) -> int:
        return self.g3.shape[0]


@dataclass(frozen=True)
class LossBreakdown:
    l_f: float
    l_b: float
    l_c: float
    l_a: float
    total: float

    def __post_init__(self):
        parts = (self.l_f, self.l_b, self.l_c, self.l_a)
        if any(p < 0 for p in parts):
            raise ValueError("loss terms must be non-negative")
        if abs(self.total - sum(parts) / 4.0) > 1e-12:
            raise ValueError("total must be the mean of the four terms")


@dataclass(frozen=True)
class LossGradients:
    """d(total)/dM1, d(total)/dM2, d(total)/d(dummy_score)."""

    d_m1: np.ndarray
    d_m2: np.ndarray
    d_dummy: float


def build_gt(
    prev: Frame, cur: Frame, capacity: int = DEFAULT_CAPACITY
) -> GroundTruthAssignment:
    """Association targets from labeled frames; every detection needs gt_id."""

    def ids_of(frame):
        ids = []
        for slot, det in enumerate(frame.detections):
            if det.gt_id is None:
                raise ValueError(
                    f"frame {frame.index}: detection {slot} has no gt_id"
                )
            ids.append(det.gt_id)
        if len(set(ids)) != len(ids):
            raise ValueError(f"frame {frame.index}: duplicate gt_id")
        return ids

    prev_ids, cur_ids = ids_of(prev), ids_of(cur)
    cp, cc = len(prev_ids), len(cur_ids)
    if cp > capacity or cc > capacity:
        raise ValueError("more detections than capacity")

    g1 = np.zeros((capacity, capacity + 1))
    g2 = np.zeros((capacity + 1, capacity))
    g3 = np.zeros((capacity, capacity))
    cur_slot = {gid: j for j, gid in enumerate(cur_ids)}
    for i, gid in enumerate(prev_ids):
        j = cur_slot.get(gid)
        if j is None:
            g1[i, capacity] = 1.0
        else:
            g1[i, j] = 1.0
            g2[i, j] = 1.0
            g3[i, j] = 1.0
    prev_set = set(prev_ids)
    for j, gid in enumerate(cur_ids):
        if gid not in prev_set:
            g2[capacity, j] = 1.0
    return GroundTruthAssignment(g1, g2, g3, (cp, cc))


def _gated_cross_entropy(g: np.ndarray, p: np.ndarray) -> float:
    mask = g > 0.5
    total = float(mask.sum())
    if total == 0.0:
        return 0.0
    # a zero probability at a true cell honestly yields an infinite loss
    with np.errstate(divide="ignore"):
        return float(-np.log(p[mask]).sum() / total)


def loss_forward(g1: np.ndarray, a1: np.ndarray) -> float:
    """Cross-entropy of forward associations at ground-truth cells."""
    return _gated_cross_entropy(np.asarray(g1), np.asarray(a1))


def loss_backward(g2: np.ndarray, a2: np.ndarray) -> float:
    """Cross-entropy of backward associations at ground-truth cells."""
    return _gated_cross_entropy(np.asarray(g2), np.asarray(a2))


def loss_consistency(a1_trim: np.ndarray, a2_trim: np.ndarray) -> float:
    """Entry-wise L1 gap between forward and backward association."""
    return float(np.abs(np.asarray(a1_trim) - np.asarray(a2_trim)).sum())


def loss_assemble(g3: np.ndarray, a1_trim: np.ndarray, a2_trim: np.ndarray) -> float:
    """Cross-entropy of the stronger direction at true-match cells."""
    best = np.maximum(np.asarray(a2_trim), np.asarray(a1_trim))
    return _gated_cross_entropy(np.asarray(g3), best)


def loss_total(l_f: float, l_b: float, l_c: float, l_a: float) -> LossBreakdown:
    return LossBreakdown(l_f, l_b, l_c, l_a, (l_f + l_b + l_c + l_a) / 4.0)


def loss_breakdown(aff: AffinityMatrices, gt: GroundTruthAssignment) -> LossBreakdown:
    """All four terms for one frame pair's affinity output."""
    if aff.counts != gt.counts:
        raise ValueError(f"counts mismatch: {aff.counts} vs {gt.counts}")
    return loss_total(
        loss_forward(gt.g1, aff.a1),
        loss_backward(gt.g2, aff.a2),
        loss_consistency(aff.a1_trim, aff.a2_trim),
        loss_assemble(gt.g3, aff.a1_trim, aff.a2_trim),
    )


def loss_from_raw(
    m1: np.ndarray, m2: np.ndarray, gt: GroundTruthAssignment
) -> LossBreakdown:
    """Losses straight from raw augmented score matrices (gradient-check path)."""
    a1, a2 = normalize_pair(np.asarray(m1, float), np.asarray(m2, float), gt.counts)
    cap = gt.capacity
    return loss_total(
        loss_forward(gt.g1, a1),
        loss_backward(gt.g2, a2),
        loss_consistency(a1[:, :cap], a2[:cap, :]),
        loss_assemble(gt.g3, a1[:, :cap], a2[:cap, :]),
    )


def loss_gradients(
    m1: np.ndarray,
    m2: np.ndarray,
    gt: GroundTruthAssignment,
    dummy_score: float | None = None,
) -> LossGradients:
    """Analytic d(total)/dM1, d(total)/dM2 and the dummy-score gradient.

    When dummy_score is given, the augmented entries of m1/m2 must equal
    it; the dummy gradient is then the sum over all those tied slots.
    """
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    cap = gt.capacity
    cp, cc = gt.counts
    if dummy_score is not None:
        if np.any(m1[:, cap] != dummy_score) or np.any(m2[cap, :] != dummy_score):
            raise ValueError("dummy slots of m1/m2 disagree with dummy_score")
    a1, a2 = normalize_pair(m1, m2, gt.counts)
    a1t, a2t = a1[:, :cap], a2[:cap, :]

    d_a1 = np.zeros_like(a1)
    d_a2 = np.zeros_like(a2)

    # forward and backward cross-entropy terms
    s1 = gt.g1.sum()
    if s1 > 0:
        mask = gt.g1 > 0.5
        d_a1[mask] += -1.0 / (4.0 * s1 * a1[mask])
    s2 = gt.g2.sum()
    if s2 > 0:
        mask = gt.g2 > 0.5
        d_a2[mask] += -1.0 / (4.0 * s2 * a2[mask])

    # consistency term, sign(0) = 0 at ties
    sgn = np.sign(a1t - a2t)
    d_a1[:, :cap] += sgn / 4.0
    d_a2[:cap, :] += -sgn / 4.0

    # assemble term; at ties the backward matrix carries the gradient
    s3 = gt.g3.sum()
    if s3 > 0:
        mask = gt.g3 > 0.5
        best = np.maximum(a2t, a1t)
        coef = np.zeros_like(a1t)
        coef[mask] = -1.0 / (4.0 * s3 * best[mask])
        forward_wins = mask & (a1t > a2t)
        d_a1[:, :cap][forward_wins] += coef[forward_wins]
        backward_wins = mask & ~(a1t > a2t)
        d_a2[:cap, :][backward_wins] += coef[backward_wins]

    # softmax backward; zero rows/columns of a kill masked and padding slots
    d_m1 = np.zeros_like(m1)
    if cp:
        rows_a = a1[:cp]
        rows_g = d_a1[:cp]
        inner = (rows_a * rows_g).sum(axis=1, keepdims=True)
        d_m1[:cp] = rows_a * (rows_g - inner)
    d_m2 = np.zeros_like(m2)
    if cc:
        cols_a = a2[:, :cc].T
        cols_g = d_a2[:, :cc].T
        inner = (cols_a * cols_g).sum(axis=1, keepdims=True)
        d_m2[:, :cc] = (cols_a * (cols_g - inner)).T

    d_dummy = float(d_m1[:, cap].sum() + d_m2[cap, :].sum())
    return LossGradients(d_m1, d_m2, d_dummy)
