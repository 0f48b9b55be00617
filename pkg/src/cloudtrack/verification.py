"""Finite-difference verification of the analytic loss gradients.

The loss is a closed-form function of the raw augmented score matrices,
so every claimed derivative can be checked against central differences.
The checker builds random frame-pair instances (random scores, random
partial identity overlap), compares loss_gradients against finite
differences entry by entry, and reports the worst relative error.

The relative error uses a small floor in the denominator: near-zero
entries are dominated by cancellation noise in the differences (about
1e-10 at h=1e-5), so they are held to a tight absolute bound instead of
a meaningless ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import GroundTruthAssignment, LossGradients, loss_from_raw, loss_gradients

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4
_REL_FLOOR = 1e-3


@dataclass(frozen=True)
class LosscheckReport:
    lines: tuple[str, ...]
    trials: int
    failures: int
    max_rel_err: float

    @property
    def ok(self) -> bool:
        return self.failures == 0 and self.trials > 0


def random_gt(rng: np.random.Generator, capacity: int, n_prev: int, n_cur: int) -> GroundTruthAssignment:
    """Random partial bijection: some ids persist, the rest churn."""
    matched = int(rng.integers(0, min(n_prev, n_cur) + 1))
    prev_ids = list(range(matched)) + [100 + k for k in range(n_prev - matched)]
    cur_ids = list(range(matched)) + [200 + k for k in range(n_cur - matched)]
    rng.shuffle(prev_ids)
    rng.shuffle(cur_ids)

    g1 = np.zeros((capacity, capacity + 1))
    g2 = np.zeros((capacity + 1, capacity))
    g3 = np.zeros((capacity, capacity))
    cur_slot = {gid: j for j, gid in enumerate(cur_ids)}
    for i, gid in enumerate(prev_ids):
        j = cur_slot.get(gid)
        if j is None:
            g1[i, capacity] = 1.0
        else:
            g1[i, j] = g2[i, j] = g3[i, j] = 1.0
    for j, gid in enumerate(cur_ids):
        if gid not in set(prev_ids):
            g2[capacity, j] = 1.0
    return GroundTruthAssignment(g1, g2, g3, (n_prev, n_cur))


def random_instance(rng: np.random.Generator, capacity: int = 8):
    """Random raw score matrices plus a consistent ground truth."""
    n_prev = int(rng.integers(1, capacity + 1))
    n_cur = int(rng.integers(1, capacity + 1))
    gt = random_gt(rng, capacity, n_prev, n_cur)
    dummy = float(rng.normal())
    m = rng.normal(size=(capacity, capacity))
    m1 = np.empty((capacity, capacity + 1))
    m1[:, :capacity] = m
    m1[:, capacity] = dummy
    m2 = np.empty((capacity + 1, capacity))
    m2[:capacity, :] = m + rng.normal(size=m.shape) * 0.5
    m2[capacity, :] = dummy
    return m1, m2, gt, dummy


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), _REL_FLOOR)


def identity_errors(gt: GroundTruthAssignment) -> tuple[float, float]:
    """Loss identities for one ground truth: sharp and uniform errors.

    Sharp scores (one decisive logit at every true cell) must drive the
    total loss to zero; all-equal scores must pin the forward term to
    ln(count_cur + 1) and the backward term to ln(count_prev + 1).
    """
    cap = gt.capacity
    cp, cc = gt.counts
    sharp1 = np.where(gt.g1 > 0.5, 80.0, 0.0)
    sharp2 = np.where(gt.g2 > 0.5, 80.0, 0.0)
    sharp_err = abs(loss_from_raw(sharp1, sharp2, gt).total)
    flat = loss_from_raw(np.zeros((cap, cap + 1)), np.zeros((cap + 1, cap)), gt)
    uniform_err = max(
        abs(flat.l_f - (np.log(cc + 1.0) if cp else 0.0)),
        abs(flat.l_b - (np.log(cp + 1.0) if cc else 0.0)),
    )
    return float(sharp_err), float(uniform_err)


def fd_gradient_check(
    m1: np.ndarray,
    m2: np.ndarray,
    gt: GroundTruthAssignment,
    step: float = DEFAULT_STEP,
    grads: LossGradients | None = None,
) -> float:
    """Worst relative error of the analytic gradient over every entry.

    Checks each m1 and m2 entry independently, then the dummy score
    (which moves the last column of m1 and last row of m2 together).
    """
    if grads is None:
        grads = loss_gradients(m1, m2, gt)
    cap = gt.capacity

    def total(a, b):
        return loss_from_raw(a, b, gt).total

    worst = 0.0
    for mat, d_mat, other, first in ((m1, grads.d_m1, m2, True), (m2, grads.d_m2, m1, False)):
        it = np.nditer(mat, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            bumped = mat.copy()
            bumped[idx] = mat[idx] + step
            hi = total(bumped, other) if first else total(other, bumped)
            bumped[idx] = mat[idx] - step
            lo = total(bumped, other) if first else total(other, bumped)
            fd = (hi - lo) / (2.0 * step)
            worst = max(worst, relative_error(float(d_mat[idx]), fd))

    def with_dummy(value):
        a, b = m1.copy(), m2.copy()
        a[:, cap] = value
        b[cap, :] = value
        return total(a, b)

    base = float(m1[0, cap])
    fd = (with_dummy(base + step) - with_dummy(base - step)) / (2.0 * step)
    worst = max(worst, relative_error(grads.d_dummy, fd))
    return worst


def run_losscheck(
    trials: int,
    seed: int = 0,
    capacity: int = 8,
    tolerance: float = DEFAULT_TOLERANCE,
    corrupt_gradient: bool = False,
) -> LosscheckReport:
    """Run the randomized gradient check; corrupt_gradient injects a fault
    into the analytic gradient to prove the checker can fail."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    lines = []
    failures = 0
    worst_overall = 0.0
    for trial in range(trials):
        m1, m2, gt, _ = random_instance(rng, capacity)
        grads = loss_gradients(m1, m2, gt)
        if corrupt_gradient:
            bad = grads.d_m1.copy()
            bad[0, 0] += 0.05 * (1.0 + np.abs(bad).max())
            grads = LossGradients(bad, grads.d_m2, grads.d_dummy)
        worst = fd_gradient_check(m1, m2, gt, grads=grads)
        sharp_err, uniform_err = identity_errors(gt)
        ok = worst < tolerance and sharp_err < 1e-12 and uniform_err < 1e-9
        failures += 0 if ok else 1
        worst_overall = max(worst_overall, worst)
        lines.append(
            f"trial {trial}: counts={gt.counts} max_rel_err={worst:.3e} "
            f"sharp_err={sharp_err:.1e} uniform_err={uniform_err:.1e} "
            f"{'ok' if ok else 'FAIL'}"
        )
    lines.append(
        f"losscheck: {trials - failures}/{trials} trials passed "
        f"(worst rel err {worst_overall:.3e}, step {DEFAULT_STEP:g})"
    )
    return LosscheckReport(tuple(lines), trials, failures, worst_overall)
