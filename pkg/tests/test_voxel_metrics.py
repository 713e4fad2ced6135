import numpy as np
import pytest

from svtopo.grid import Connectivity, LabeledGrid, connected_components
from svtopo.voxel_metrics import (
    adjusted_rand,
    betti0_error,
    variation_of_information,
    voxel_metrics,
    voxel_overlap_metrics,
)

from helpers import grid_from_rows, partition_of


def row(values):
    return grid_from_rows([values])


class TestOverlap:
    def test_identical(self):
        y = grid_from_rows([[1, 0], [2, 2]])
        assert voxel_overlap_metrics(y, y) == (1.0, 1.0)

    def test_half_agreement(self):
        y = row([1, 1, 0, 0])
        pred = row([1, 0, 1, 0])
        accuracy, dice = voxel_overlap_metrics(y, pred)
        assert accuracy == 0.5
        assert dice == 0.5

    def test_both_empty_dice_convention(self):
        y = row([0, 0, 0])
        assert voxel_overlap_metrics(y, y) == (1.0, 1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            voxel_overlap_metrics(row([1]), row([1, 1]))


class TestAdjustedRand:
    def test_identical(self):
        y = grid_from_rows([[1, 1, 0], [0, 2, 2]])
        assert adjusted_rand(y, y, Connectivity.C4) == 1.0

    def test_two_components_merged_is_zero(self):
        # Two 2-voxel objects vs one 4-voxel object: index=2, expected=2,
        # max=4, so ARI = 0 exactly.
        y = row([1, 1, 0, 2, 2])
        pred = row([1, 1, 1, 1, 1])
        got = adjusted_rand(y, pred, Connectivity.C4)
        assert got == pytest.approx(0.0, abs=1e-12)

    def test_label_permutation_is_perfect(self):
        y = row([1, 1, 1])
        pred = row([7, 7, 7])
        assert adjusted_rand(y, pred, Connectivity.C4) == 1.0

    def test_matches_sklearn_on_random_pairs(self):
        sklearn_metrics = pytest.importorskip("sklearn.metrics")
        rng = np.random.default_rng(113)
        for _ in range(25):
            y = LabeledGrid(rng.integers(0, 3, size=(7, 7)))
            pred = LabeledGrid(rng.integers(0, 3, size=(7, 7)))
            both = (y.labels != 0) & (pred.labels != 0)
            if both.sum() < 2:
                continue
            a = connected_components(y, Connectivity.C4).component_ids[both]
            b = connected_components(pred, Connectivity.C4).component_ids[both]
            want = sklearn_metrics.adjusted_rand_score(a, b)
            got = adjusted_rand(y, pred, Connectivity.C4)
            assert got == pytest.approx(want, abs=1e-10)


class TestVariationOfInformation:
    def test_identical(self):
        y = grid_from_rows([[1, 0], [2, 2]])
        assert variation_of_information(y, y, Connectivity.C4) == 0.0

    def test_two_equal_halves_merged_is_one_bit(self):
        y = row([1, 1, 0, 2, 2])
        pred = row([1, 1, 1, 1, 1])
        got = variation_of_information(y, pred, Connectivity.C4)
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(127)
        for _ in range(20):
            y = LabeledGrid(rng.integers(0, 3, size=(6, 6)))
            pred = LabeledGrid(rng.integers(0, 3, size=(6, 6)))
            ab = variation_of_information(y, pred, Connectivity.C4)
            ba = variation_of_information(pred, y, Connectivity.C4)
            assert ab == pytest.approx(ba, abs=1e-12)

    def test_triangle_inequality_on_mutual_foreground(self):
        # Metric property over a common voxel set: restrict all three
        # labelings to their joint foreground so the compared partitions
        # cover identical elements.
        rng = np.random.default_rng(131)
        for _ in range(25):
            base = (rng.random((6, 6)) < 0.8).astype(np.int64)
            grids = []
            for _ in range(3):
                noise = rng.integers(1, 4, size=(6, 6))
                grids.append(LabeledGrid(base * noise))
            a, b, c = grids
            d_ab = variation_of_information(a, b, Connectivity.C4)
            d_bc = variation_of_information(b, c, Connectivity.C4)
            d_ac = variation_of_information(a, c, Connectivity.C4)
            assert d_ac <= d_ab + d_bc + 1e-9


class TestPerfectScoreIffIdentical:
    def test_ari_one_and_voi_zero_characterize_identical_partitions(self):
        rng = np.random.default_rng(251)
        seen_identical = seen_different = 0
        for _ in range(80):
            y = LabeledGrid(rng.integers(0, 3, size=(5, 5)))
            if rng.random() < 0.4:
                pred = LabeledGrid(np.where(y.labels != 0, y.labels * 2, 0))
            else:
                pred = LabeledGrid(rng.integers(0, 3, size=(5, 5)))
            both = (y.labels != 0) & (pred.labels != 0)
            a = connected_components(y, Connectivity.C4).component_ids.copy()
            b = connected_components(pred, Connectivity.C4).component_ids.copy()
            a[~both] = 0
            b[~both] = 0
            identical = partition_of(a) == partition_of(b)
            seen_identical += identical
            seen_different += not identical
            ari = adjusted_rand(y, pred, Connectivity.C4)
            voi = variation_of_information(y, pred, Connectivity.C4)
            assert (abs(ari - 1.0) < 1e-12) == identical
            assert (voi < 1e-12) == identical
        assert seen_identical and seen_different  # both branches exercised


class TestBetti0:
    def test_identical(self):
        y = grid_from_rows([[1, 0, 2]])
        assert betti0_error(y, y, Connectivity.C4) == 0

    def test_merge_of_two(self):
        y = row([1, 0, 1])
        pred = row([1, 1, 1])
        assert betti0_error(y, pred, Connectivity.C4) == 1

    def test_matches_recount(self):
        rng = np.random.default_rng(137)
        for _ in range(20):
            y = LabeledGrid(rng.integers(0, 3, size=(6, 6)))
            pred = LabeledGrid(rng.integers(0, 3, size=(6, 6)))
            want = abs(
                connected_components(y, Connectivity.C4).count
                - connected_components(pred, Connectivity.C4).count
            )
            assert betti0_error(y, pred, Connectivity.C4) == want


class TestReport:
    def test_identical_inputs_are_perfect(self):
        rng = np.random.default_rng(139)
        y = LabeledGrid(rng.integers(0, 3, size=(6, 6)))
        report = voxel_metrics(y, y, Connectivity.C4)
        assert report.accuracy == 1.0
        assert report.dice == 1.0
        assert report.ari == 1.0
        assert report.voi == 0.0
        assert report.betti0_error == 0

    def test_instance_permutation_invariance(self):
        rng = np.random.default_rng(149)
        labels = rng.integers(0, 4, size=(6, 6))
        pred = LabeledGrid(rng.integers(0, 4, size=(6, 6)))
        perm = np.concatenate(([0], rng.permutation([2, 5, 8])))
        a = voxel_metrics(LabeledGrid(labels), pred, Connectivity.C4)
        b = voxel_metrics(LabeledGrid(perm[labels]), pred, Connectivity.C4)
        assert a.ari == pytest.approx(b.ari, abs=1e-12)
        assert a.voi == pytest.approx(b.voi, abs=1e-12)
        assert a.betti0_error == b.betti0_error
