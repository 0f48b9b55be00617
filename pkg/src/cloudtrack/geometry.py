"""Value types for points, oriented boxes, detections, and frames.

All types are immutable values built on numpy arrays; every operation here
is pure, so instances are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


def yaw_normalize(theta: float) -> float:
    """Reduce an angle to the canonical heading range [-pi, pi)."""
    if not math.isfinite(theta):
        raise ValueError(f"yaw must be finite, got {theta}")
    r = theta - TWO_PI * math.floor((theta + math.pi) / TWO_PI)
    # floor rounding can land exactly on +pi; fold it to the lower bound
    if r >= math.pi:
        r -= TWO_PI
    if r < -math.pi:
        r += TWO_PI
    return r


def _as_finite_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return pts.reshape(0, 3)
    if pts.ndim == 1:
        pts = pts.reshape(1, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (n, 3) point array, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError("point coordinates must be finite")
    return pts


@dataclass(frozen=True)
class PointCloud:
    """One sensor sweep: an (n, 3) array of xyz points plus its frame index.

    Point order carries no meaning; consumers must be permutation invariant.
    """

    points: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "points", _as_finite_points(self.points))
        if self.frame_index < 0:
            raise ValueError("frame_index must be non-negative")

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class OrientedBox3:
    """Gravity-aligned 3D box: center, extents, and yaw about the z axis."""

    center: np.ndarray
    length: float
    width: float
    height: float
    yaw: float = 0.0

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64).reshape(3)
        if not np.isfinite(center).all():
            raise ValueError("box center must be finite")
        object.__setattr__(self, "center", center)
        for name in ("length", "width", "height"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"box {name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "yaw", yaw_normalize(float(self.yaw)))

    @property
    def half_extents(self) -> np.ndarray:
        return np.array([self.length / 2.0, self.width / 2.0, self.height / 2.0])

    def diagonal(self) -> float:
        return float(np.linalg.norm([self.length, self.width, self.height]))


def to_box_frame(box: OrientedBox3, points) -> np.ndarray:
    """Map world points into the box frame (center at origin, yaw removed)."""
    pts = _as_finite_points(points)
    d = pts - box.center
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    local = np.empty_like(d)
    local[:, 0] = d[:, 0] * c + d[:, 1] * s
    local[:, 1] = -d[:, 0] * s + d[:, 1] * c
    local[:, 2] = d[:, 2]
    return local


def from_box_frame(box: OrientedBox3, points) -> np.ndarray:
    """Inverse of to_box_frame: box-local points back to world coordinates."""
    pts = _as_finite_points(points)
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    world = np.empty_like(pts)
    world[:, 0] = pts[:, 0] * c - pts[:, 1] * s
    world[:, 1] = pts[:, 0] * s + pts[:, 1] * c
    world[:, 2] = pts[:, 2]
    return world + box.center


def box_contains(box: OrientedBox3, p) -> np.ndarray | bool:
    """Closed-box containment test; boundary points count as inside.

    Accepts a single xyz triple or an (n, 3) array; returns a bool or a
    boolean mask accordingly.
    """
    arr = np.asarray(p, dtype=np.float64)
    single = arr.ndim == 1
    local = to_box_frame(box, arr)
    half = box.half_extents
    inside = (np.abs(local) <= half).all(axis=1)
    return bool(inside[0]) if single else inside


@dataclass(frozen=True)
class Detection:
    """One detected object: oriented box, confidence, optional true identity."""

    box: OrientedBox3
    confidence: float
    gt_id: int | None = None

    def __post_init__(self):
        conf = float(self.confidence)
        if not (math.isfinite(conf) and 0.0 <= conf <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {conf}")
        object.__setattr__(self, "confidence", conf)
        if self.gt_id is not None:
            gid = int(self.gt_id)
            if gid < 0:
                raise ValueError("gt_id must be non-negative")
            object.__setattr__(self, "gt_id", gid)


@dataclass(frozen=True)
class Frame:
    """Point cloud plus detections for one time step."""

    index: int
    cloud: PointCloud
    detections: tuple[Detection, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("frame index must be non-negative")
        object.__setattr__(self, "detections", tuple(self.detections))
