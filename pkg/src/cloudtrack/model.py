"""Model container and the on-disk weights format.

One file holds up to two sections back to back: the point-feature MLP
(magic ``PNW1``) and, for a full model, the compression net (magic
``CMP1``) followed by a single f32 dummy score.  Sections use the layer
codec from nets.py; everything is little-endian f32, so a save/load
cycle of a freshly initialized model is bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .affinity import DEFAULT_COMPRESSION_WIDTHS, CompressionNet
from .nets import init_layers, pack_layers, unpack_layers
from .pointnet import DEFAULT_POINTNET_WIDTHS, PointNetWeights

MAGIC_POINTNET = b"PNW1"
MAGIC_COMPRESSION = b"CMP1"


@dataclass(frozen=True)
class AffinityModel:
    """Frozen point featurizer, trainable compression net, dummy score."""

    pointnet: PointNetWeights
    compression: CompressionNet
    dummy_score: float = 0.0

    def __post_init__(self):
        if 2 * self.pointnet.feature_dim != self.compression.in_dim:
            raise ValueError(
                f"pair width {2 * self.pointnet.feature_dim} != "
                f"compression input {self.compression.in_dim}"
            )
        if not np.isfinite(self.dummy_score):
            raise ValueError("dummy_score must be finite")

    def with_compression(self, net: CompressionNet, dummy_score: float) -> "AffinityModel":
        return replace(self, compression=net, dummy_score=dummy_score)


def init_model(
    seed: int = 0,
    pointnet_widths=DEFAULT_POINTNET_WIDTHS,
    compression_widths=DEFAULT_COMPRESSION_WIDTHS,
) -> AffinityModel:
    """Fresh model; weights land on the f32 grid so files round-trip exactly."""
    rng = np.random.default_rng(seed)
    return AffinityModel(
        pointnet=PointNetWeights(init_layers(pointnet_widths, rng)),
        compression=CompressionNet(init_layers(compression_widths, rng)),
        dummy_score=0.0,
    )


def save_weights(w: PointNetWeights, path) -> None:
    """Write just the point-feature section."""
    Path(path).write_bytes(pack_layers(MAGIC_POINTNET, w.layers))


def load_weights(path) -> PointNetWeights:
    """Read the point-feature section; trailing sections are ignored."""
    buf = Path(path).read_bytes()
    layers, _ = unpack_layers(buf, 0, MAGIC_POINTNET, str(path))
    return PointNetWeights(layers)


def save_model(model: AffinityModel, path) -> None:
    """Write featurizer and compression sections plus the dummy score."""
    blob = pack_layers(MAGIC_POINTNET, model.pointnet.layers)
    blob += pack_layers(MAGIC_COMPRESSION, model.compression.layers)
    blob += struct.pack("<f", np.float32(model.dummy_score))
    Path(path).write_bytes(blob)


def load_model(path) -> AffinityModel:
    """Read a full model file (both sections required)."""
    buf = Path(path).read_bytes()
    origin = str(path)
    pn_layers, offset = unpack_layers(buf, 0, MAGIC_POINTNET, origin)
    cmp_layers, offset = unpack_layers(buf, offset, MAGIC_COMPRESSION, origin)
    if offset + 4 > len(buf):
        raise ValueError(f"{origin}: truncated at byte {offset}")
    (dummy,) = struct.unpack_from("<f", buf, offset)
    return AffinityModel(
        pointnet=PointNetWeights(pn_layers),
        compression=CompressionNet(cmp_layers),
        dummy_score=float(dummy),
    )
