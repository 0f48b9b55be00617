"""Point-set featurizer: shared per-point MLP followed by a masked max-pool.

Each object's valid points run through the same small MLP (default
widths 3-64-128-512, ReLU between layers) and the feature is the
element-wise maximum over valid points only, so zero padding never
leaks into the feature.  Valid points are canonically ordered before
the matrix products, which makes the output bitwise identical under
any permutation or re-padding of the input points.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cropping import ObjectPoints
from .nets import Layers, layer_widths, mlp_forward, validate_layers

DEFAULT_POINTNET_WIDTHS = (3, 64, 128, 512)
DEFAULT_FEATURE_DIM = 512
DEFAULT_CAPACITY = 100


@dataclass(frozen=True)
class PointNetWeights:
    """Per-point MLP weights; input width is always 3 (xyz)."""

    layers: Layers

    def __post_init__(self):
        object.__setattr__(self, "layers", validate_layers(self.layers, in_dim=3))

    @property
    def widths(self) -> tuple[int, ...]:
        return layer_widths(self.layers)

    @property
    def feature_dim(self) -> int:
        return self.widths[-1]


@dataclass(frozen=True)
class FeatureSet:
    """Per-object feature rows for one frame; rows past count are zero."""

    features: np.ndarray
    count: int
    frame_index: int = 0

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {feats.shape}")
        if not 0 <= self.count <= len(feats):
            raise ValueError("count outside 0..capacity")
        if not np.isfinite(feats).all():
            raise ValueError("non-finite feature value")
        if np.any(feats[self.count :]):
            raise ValueError("rows past count must be zero")
        object.__setattr__(self, "features", feats)

    @property
    def capacity(self) -> int:
        return len(self.features)

    @property
    def dim(self) -> int:
        return self.features.shape[1]


def _canonical_order(pts: np.ndarray) -> np.ndarray:
    # sort by x, then y, then z so the gemm input is order-independent
    return pts[np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))]


def pointnet_forward(obj: ObjectPoints, w: PointNetWeights) -> np.ndarray:
    """Feature vector for one object; the zero vector when it has no points."""
    if obj.valid_count == 0:
        return np.zeros(w.feature_dim)
    pts = _canonical_order(obj.points[: obj.valid_count])
    return mlp_forward(pts, w.layers).max(axis=0)


def featurize_frame(
    objs,
    w: PointNetWeights,
    capacity: int = DEFAULT_CAPACITY,
    frame_index: int = 0,
    threads: int = 1,
) -> FeatureSet:
    """Featurize each object into its slot; slots past len(objs) stay zero.

    Each slot is one work unit, so results never depend on threads.
    """
    objs = tuple(objs)
    if len(objs) > capacity:
        raise ValueError(f"{len(objs)} objects exceed capacity {capacity}")
    feats = np.zeros((capacity, w.feature_dim))

    def fill(slot: int) -> None:
        feats[slot] = pointnet_forward(objs[slot], w)

    if threads > 1 and len(objs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(len(objs))))
    else:
        for slot in range(len(objs)):
            fill(slot)
    return FeatureSet(feats, len(objs), frame_index)
