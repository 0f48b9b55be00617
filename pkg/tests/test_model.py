"""Model container and the two-section weights file."""

import numpy as np
import pytest

from cloudtrack.affinity import CompressionNet
from cloudtrack.model import (
    AffinityModel,
    init_model,
    load_model,
    load_weights,
    save_model,
)
from cloudtrack.nets import init_layers
from cloudtrack.pointnet import PointNetWeights


def layers_equal(a, b):
    return len(a) == len(b) and all(
        W1.tobytes() == W2.tobytes() and b1.tobytes() == b2.tobytes()
        for (W1, b1), (W2, b2) in zip(a, b)
    )


class TestInitModel:
    def test_default_widths(self):
        model = init_model(seed=3)
        assert model.pointnet.widths == (3, 64, 128, 512)
        assert model.compression.widths == (1024, 512, 256, 128, 64, 1)
        assert model.dummy_score == 0.0

    def test_seed_determinism(self):
        a = init_model(seed=7)
        b = init_model(seed=7)
        assert layers_equal(a.pointnet.layers, b.pointnet.layers)
        assert layers_equal(a.compression.layers, b.compression.layers)
        c = init_model(seed=8)
        assert not layers_equal(a.pointnet.layers, c.pointnet.layers)

    def test_width_consistency_enforced(self):
        rng = np.random.default_rng(401)
        pn = PointNetWeights(init_layers((3, 8), rng))
        cmp_net = CompressionNet(init_layers((10, 4, 4, 2, 2, 1), rng))
        with pytest.raises(ValueError):
            AffinityModel(pn, cmp_net, 0.0)


class TestModelFile:
    def test_round_trip_bitwise(self, tmp_path):
        model = init_model(seed=11, pointnet_widths=(3, 8, 16),
                           compression_widths=(32, 8, 4, 4, 2, 1))
        path = tmp_path / "model.bin"
        save_model(model, path)
        loaded = load_model(path)
        assert layers_equal(model.pointnet.layers, loaded.pointnet.layers)
        assert layers_equal(model.compression.layers, loaded.compression.layers)
        assert loaded.dummy_score == model.dummy_score

    def test_trained_dummy_round_trips_through_f32(self, tmp_path):
        model = init_model(seed=12, pointnet_widths=(3, 4),
                           compression_widths=(8, 4, 4, 2, 2, 1))
        moved = model.with_compression(model.compression, 0.3712)
        path = tmp_path / "model.bin"
        save_model(moved, path)
        first = load_model(path)
        save_model(first, path)
        second = load_model(path)
        assert first.dummy_score == second.dummy_score
        assert abs(first.dummy_score - 0.3712) < 1e-6

    def test_load_weights_reads_first_section_only(self, tmp_path):
        model = init_model(seed=13, pointnet_widths=(3, 8, 16),
                           compression_widths=(32, 8, 4, 4, 2, 1))
        path = tmp_path / "model.bin"
        save_model(model, path)
        pn = load_weights(path)
        assert layers_equal(pn.layers, model.pointnet.layers)

    def test_missing_second_section(self, tmp_path):
        from cloudtrack.model import save_weights

        model = init_model(seed=14, pointnet_widths=(3, 4),
                           compression_widths=(8, 4, 4, 2, 2, 1))
        path = tmp_path / "only_pn.bin"
        save_weights(model.pointnet, path)
        with pytest.raises(ValueError):
            load_model(path)

    def test_truncated_dummy(self, tmp_path):
        model = init_model(seed=15, pointnet_widths=(3, 4),
                           compression_widths=(8, 4, 4, 2, 2, 1))
        path = tmp_path / "model.bin"
        save_model(model, path)
        path.write_bytes(path.read_bytes()[:-2])
        with pytest.raises(ValueError, match="truncated"):
            load_model(path)
