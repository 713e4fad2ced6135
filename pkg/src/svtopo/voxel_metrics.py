"""Voxel-based evaluation: overlap scores and partition-comparison metrics.

Accuracy and Dice compare foreground membership only. The adjusted Rand
index and variation of information compare the *component partitions* of
the two labelings, restricted to voxels that are foreground in both, so
background never dilutes the comparison and instance IDs are irrelevant.
The Betti-0 error is the absolute difference of component counts.
"""

from dataclasses import dataclass

import numpy as np

from svtopo.grid import check_connectivity, connected_components


@dataclass(frozen=True)
class VoxelMetricsReport:
    accuracy: float
    dice: float
    ari: float
    voi: float
    betti0_error: int


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"grids have mismatched shapes: {a.shape} vs {b.shape}")


def voxel_overlap_metrics(gt, pred):
    """(accuracy, dice) of the predicted foreground against the truth."""
    _check_same_shape(gt, pred)
    gt_fg = gt.labels != 0
    pred_fg = pred.labels != 0
    accuracy = float((gt_fg == pred_fg).mean())
    denom = int(gt_fg.sum()) + int(pred_fg.sum())
    if denom == 0:
        return accuracy, 1.0
    dice = 2.0 * int((gt_fg & pred_fg).sum()) / denom
    return accuracy, dice


def _restricted_partitions(gt, pred, conn):
    conn = check_connectivity(conn, gt.ndim)
    both = (gt.labels != 0) & (pred.labels != 0)
    a = connected_components(gt, conn).component_ids[both]
    b = connected_components(pred, conn).component_ids[both]
    return a, b


def adjusted_rand(gt, pred, conn):
    """Adjusted Rand index between the two component partitions.

    Computed over voxels foreground in both inputs; returns 1.0 for the
    degenerate empty/identical cases.
    """
    _check_same_shape(gt, pred)
    a, b = _restricted_partitions(gt, pred, conn)
    n = a.size
    if n <= 1:
        return 1.0

    def comb2(x):
        return x * (x - 1.0) / 2.0

    _, a_counts = np.unique(a, return_counts=True)
    _, b_counts = np.unique(b, return_counts=True)
    pairs = a.astype(np.int64) * (int(b.max()) + 1) + b
    _, joint_counts = np.unique(pairs, return_counts=True)

    index = comb2(joint_counts.astype(np.float64)).sum()
    sum_a = comb2(a_counts.astype(np.float64)).sum()
    sum_b = comb2(b_counts.astype(np.float64)).sum()
    expected = sum_a * sum_b / comb2(float(n))
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))


def variation_of_information(gt, pred, conn):
    """Variation of information between the component partitions, in bits.

    H(A|B) + H(B|A) over the joint membership distribution of voxels
    foreground in both inputs; 0.0 when that set is empty.
    """
    _check_same_shape(gt, pred)
    a, b = _restricted_partitions(gt, pred, conn)
    n = a.size
    if n == 0:
        return 0.0
    pairs = a.astype(np.int64) * (int(b.max()) + 1) + b
    _, joint = np.unique(pairs, return_counts=True)
    _, a_counts = np.unique(a, return_counts=True)
    _, b_counts = np.unique(b, return_counts=True)

    def entropy(counts):
        p = counts / n
        return float(-(p * np.log2(p)).sum())

    h_a = entropy(a_counts.astype(np.float64))
    h_b = entropy(b_counts.astype(np.float64))
    h_ab = entropy(joint.astype(np.float64))
    # H(A|B) + H(B|A) = 2 H(A,B) - H(A) - H(B)
    return max(2.0 * h_ab - h_a - h_b, 0.0)


def betti0_error(gt, pred, conn):
    """Absolute difference in the number of connected components."""
    _check_same_shape(gt, pred)
    conn = check_connectivity(conn, gt.ndim)
    return abs(
        connected_components(gt, conn).count
        - connected_components(pred, conn).count
    )


def voxel_metrics(gt, pred, conn):
    """All voxel-based metrics in one report."""
    accuracy, dice = voxel_overlap_metrics(gt, pred)
    return VoxelMetricsReport(
        accuracy=accuracy,
        dice=dice,
        ari=adjusted_rand(gt, pred, conn),
        voi=variation_of_information(gt, pred, conn),
        betti0_error=betti0_error(gt, pred, conn),
    )
