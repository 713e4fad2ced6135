"""Thin array-in/array-out boundary over svtopo.

Training loops hand in caller-owned dense numpy arrays and get plain
arrays, floats, and a small summary record back; no svtopo types cross the
boundary. Inputs are borrowed read-only (validated, never mutated) and
outputs are freshly allocated here. There is no hidden state, so calls are
reentrant and thread-safe.

Gradient flow in a training framework comes from consuming the weight map
inside the framework's own loss expression; nothing here hooks into any
autograd system.
"""

from dataclasses import dataclass

import numpy as np

from svtopo import (
    Connectivity,
    LabeledGrid,
    LossParams,
    ProbabilityField,
    detect_criticals,
    loss_gradient,
    supervoxel_loss,
    weight_map,
)

__version__ = "0.1.0"

__all__ = [
    "BindingError",
    "CriticalSummary",
    "py_detect_criticals",
    "py_loss_gradient",
    "py_supervoxel_loss",
    "py_weight_map",
]


class BindingError(ValueError):
    """Invalid array handed across the boundary."""


@dataclass(frozen=True)
class CriticalSummary:
    """Critical-component counts by polarity and condition."""

    negative_total: int
    negative_condition_1: int
    negative_condition_2: int
    positive_total: int
    positive_condition_1: int
    positive_condition_2: int


def _require_contiguous(arr, name):
    if not arr.flags["C_CONTIGUOUS"]:
        raise BindingError(f"{name} must be C-contiguous")
    return arr


def _as_labels(arr, name="gt"):
    arr = np.asarray(arr)
    if not np.issubdtype(arr.dtype, np.integer):
        raise BindingError(f"{name} must have an integer dtype, got {arr.dtype}")
    if arr.ndim not in (2, 3):
        raise BindingError(f"{name} must be 2-d or 3-d, got ndim={arr.ndim}")
    _require_contiguous(arr, name)
    try:
        return LabeledGrid(arr)
    except ValueError as exc:
        raise BindingError(str(exc)) from exc


def _as_probs(arr, shape, name="probs"):
    arr = np.asarray(arr)
    if not np.issubdtype(arr.dtype, np.floating):
        raise BindingError(f"{name} must have a float dtype, got {arr.dtype}")
    if arr.shape != shape:
        raise BindingError(f"{name} shape {arr.shape} does not match gt {shape}")
    _require_contiguous(arr, name)
    try:
        return ProbabilityField(arr)
    except ValueError as exc:
        raise BindingError(str(exc)) from exc


def _connectivity(value, ndim):
    try:
        conn = Connectivity(int(value))
    except ValueError as exc:
        raise BindingError(f"unknown connectivity {value}") from exc
    if conn.ndim != ndim:
        raise BindingError(
            f"connectivity {int(conn)} is not admissible for {ndim}-d arrays"
        )
    return conn


def _params(alpha, beta, threshold, base):
    try:
        return LossParams(
            alpha=float(alpha),
            beta=float(beta),
            threshold=float(threshold),
            base=base,
        )
    except ValueError as exc:
        raise BindingError(str(exc)) from exc


def _summary(report):
    counts = report.counts()
    return CriticalSummary(
        negative_total=counts["negative"]["total"],
        negative_condition_1=counts["negative"]["condition_1"],
        negative_condition_2=counts["negative"]["condition_2"],
        positive_total=counts["positive"]["total"],
        positive_condition_1=counts["positive"]["condition_1"],
        positive_condition_2=counts["positive"]["condition_2"],
    )


def py_detect_criticals(gt, pred, connectivity=4):
    """Critical components of a hard prediction against the ground truth.

    Returns (summary, negative_mask, positive_mask) where the masks are
    freshly allocated uint8 arrays of the input shape marking the voxels
    of negatively/positively critical components.
    """
    gt_grid = _as_labels(gt, "gt")
    pred_grid = _as_labels(pred, "pred")
    if pred_grid.shape != gt_grid.shape:
        raise BindingError(
            f"pred shape {pred_grid.shape} does not match gt {gt_grid.shape}"
        )
    conn = _connectivity(connectivity, gt_grid.ndim)
    report = detect_criticals(gt_grid, pred_grid, conn)
    return (
        _summary(report),
        report.negative_mask.bits.astype(np.uint8),
        report.positive_mask.bits.astype(np.uint8),
    )


def py_weight_map(gt, probs, alpha=0.5, beta=0.5, threshold=0.5, connectivity=4):
    """Per-voxel loss weights for the thresholded prediction.

    Returns a float64 array of the input shape with value (1-alpha)
    everywhere, plus alpha*beta on positively critical voxels and
    alpha*(1-beta) on negatively critical ones.
    """
    gt_grid = _as_labels(gt, "gt")
    field = _as_probs(probs, gt_grid.shape)
    conn = _connectivity(connectivity, gt_grid.ndim)
    params = _params(alpha, beta, threshold, "cross_entropy")
    binary = LabeledGrid((field.probs >= params.threshold).astype(np.int64))
    report = detect_criticals(gt_grid, binary, conn)
    return weight_map(report, params, gt_grid.shape).weights.copy()


def py_supervoxel_loss(
    gt, probs, alpha=0.5, beta=0.5, threshold=0.5, base="cross_entropy",
    connectivity=4,
):
    """Scalar topological loss plus a critical-component summary."""
    gt_grid = _as_labels(gt, "gt")
    field = _as_probs(probs, gt_grid.shape)
    conn = _connectivity(connectivity, gt_grid.ndim)
    params = _params(alpha, beta, threshold, base)
    value, report = supervoxel_loss(gt_grid, field, params, conn)
    return float(value), _summary(report)


def py_loss_gradient(
    gt, probs, alpha=0.5, beta=0.5, threshold=0.5, base="cross_entropy",
    connectivity=4,
):
    """d(loss)/d(probability) as a float64 array of the input shape."""
    gt_grid = _as_labels(gt, "gt")
    field = _as_probs(probs, gt_grid.shape)
    conn = _connectivity(connectivity, gt_grid.ndim)
    params = _params(alpha, beta, threshold, base)
    return np.array(loss_gradient(gt_grid, field, params, conn))
