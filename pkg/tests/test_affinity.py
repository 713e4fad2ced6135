import numpy as np
import pytest

from svtopo.affinity import (
    AffinityField,
    affinity_channel_losses,
    affinity_loss,
    axis_offsets,
    decode_affinities,
    encode_affinities,
)
from svtopo.grid import Connectivity, LabeledGrid, connected_components
from svtopo.loss import LossParams

from helpers import drop_singletons, grid_from_rows, partition_of




class TestEncode:
    def test_uniform_grid_interior_affinities(self):
        grid = LabeledGrid(np.ones((3, 3), dtype=np.int64))
        aff = encode_affinities(grid, Connectivity.C4)
        down, right = aff.channels
        assert (down[:2, :] == 1).all() and (down[2, :] == 0).all()
        assert (right[:, :2] == 1).all() and (right[:, 2] == 0).all()

    def test_row_with_label_change(self):
        grid = grid_from_rows([[1, 1, 0, 2]])
        aff = encode_affinities(grid, Connectivity.C4)
        horizontal = aff.channels[1]
        assert horizontal.tolist() == [[1, 0, 0, 0]]

    def test_all_background(self):
        grid = LabeledGrid(np.zeros((3, 4), dtype=np.int64))
        aff = encode_affinities(grid, Connectivity.C4)
        assert not aff.channels.any()

    def test_label_permutation_invariance(self):
        rng = np.random.default_rng(101)
        labels = rng.integers(0, 4, size=(5, 5))
        perm = np.concatenate(([0], rng.permutation([3, 6, 9])))
        a = encode_affinities(LabeledGrid(labels), Connectivity.C4)
        b = encode_affinities(LabeledGrid(perm[labels]), Connectivity.C4)
        assert np.array_equal(a.channels, b.channels)

    def test_bad_offset_rejected(self):
        grid = LabeledGrid(np.ones((2, 2), dtype=np.int64))
        with pytest.raises(ValueError):
            encode_affinities(grid, Connectivity.C4, offsets=((1, 1),))


class TestDecode:
    def test_all_zero_channels(self):
        aff = AffinityField(
            channels=np.zeros((2, 3, 3)), offsets=axis_offsets(2)
        )
        assert decode_affinities(aff, 0.5).count == 0

    def test_single_edge(self):
        channels = np.zeros((2, 2, 2))
        channels[1, 0, 0] = 0.9  # edge (0,0)-(0,1)
        aff = AffinityField(channels=channels, offsets=axis_offsets(2))
        cc = decode_affinities(aff, 0.5)
        assert cc.count == 1
        assert cc.component_ids.tolist() == [[1, 1], [0, 0]]

    def test_out_of_bounds_evidence_makes_singleton(self):
        channels = np.zeros((2, 2, 2))
        channels[1, 0, 1] = 0.9  # partner (0,2) out of bounds
        aff = AffinityField(channels=channels, offsets=axis_offsets(2))
        cc = decode_affinities(aff, 0.5)
        assert cc.count == 1
        assert cc.component_ids.tolist() == [[0, 1], [0, 0]]

    def test_roundtrip_2d(self):
        rng = np.random.default_rng(103)
        for _ in range(40):
            labels = rng.integers(0, 3, size=(6, 6))
            grid = drop_singletons(labels, Connectivity.C4)
            aff = encode_affinities(grid, Connectivity.C4)
            decoded = decode_affinities(aff, 0.5)
            want = connected_components(grid, Connectivity.C4)
            assert partition_of(decoded.component_ids) == partition_of(
                want.component_ids
            )

    def test_roundtrip_3d(self):
        rng = np.random.default_rng(107)
        for _ in range(15):
            labels = rng.integers(0, 3, size=(4, 4, 4))
            grid = drop_singletons(labels, Connectivity.C6)
            aff = encode_affinities(grid, Connectivity.C6)
            decoded = decode_affinities(aff, 0.5)
            want = connected_components(grid, Connectivity.C6)
            assert partition_of(decoded.component_ids) == partition_of(
                want.component_ids
            )


class TestAffinityLoss:
    def test_perfect_prediction_near_zero(self):
        grid = grid_from_rows([[1, 1, 1], [0, 0, 0], [2, 2, 2]])
        gt_aff = encode_affinities(grid, Connectivity.C4)
        pred = AffinityField(
            channels=gt_aff.channels.astype(np.float64), offsets=gt_aff.offsets
        )
        value = affinity_loss(gt_aff, pred, LossParams(alpha=0.0))
        assert value == pytest.approx(0.0, abs=1e-5)

    def test_alpha_zero_is_sum_of_base_losses(self):
        rng = np.random.default_rng(109)
        grid = LabeledGrid(rng.integers(0, 2, size=(4, 4)))
        gt_aff = encode_affinities(grid, Connectivity.C4)
        pred = AffinityField(
            channels=rng.random((2, 4, 4)), offsets=gt_aff.offsets
        )
        losses = affinity_channel_losses(gt_aff, pred, LossParams(alpha=0.0))
        assert affinity_loss(gt_aff, pred, LossParams(alpha=0.0)) == pytest.approx(
            sum(losses)
        )
        assert len(losses) == 2

    def test_single_channel_matches_voxel_loss_fixture(self):
        # The 5-voxel row fixture embedded as one channel reproduces the
        # voxel-module value 0.8480489888.
        gt_aff = AffinityField(
            channels=np.array([[[1, 1, 1, 1, 1]]], dtype=np.uint8),
            offsets=((0, 1),),
        )
        pred = AffinityField(
            channels=np.array([[[0.9, 0.9, 0.1, 0.9, 0.9]]]),
            offsets=((0, 1),),
        )
        value = affinity_loss(gt_aff, pred, LossParams(alpha=0.5, beta=0.5))
        assert value == pytest.approx(0.8480489888, abs=1e-9)

    def test_offset_mismatch_rejected(self):
        a = AffinityField(channels=np.zeros((2, 3, 3)), offsets=axis_offsets(2))
        b = AffinityField(
            channels=np.zeros((2, 3, 3)), offsets=((0, 1), (1, 0))
        )
        with pytest.raises(ValueError):
            affinity_loss(a, b, LossParams())

    def test_nonbinary_gt_rejected(self):
        a = AffinityField(channels=np.full((2, 3, 3), 0.5), offsets=axis_offsets(2))
        b = AffinityField(channels=np.zeros((2, 3, 3)), offsets=axis_offsets(2))
        with pytest.raises(ValueError):
            affinity_loss(a, b, LossParams())
