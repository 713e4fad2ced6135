"""Topology-weighted segmentation loss over critical components.

The loss blends a base voxel loss with extra penalty terms, one per
critical component of the thresholded prediction:

    total = (1 - alpha) * base(all voxels)
          + alpha * beta       * sum over positive components of base(C)
          + alpha * (1 - beta) * sum over negative components of base(C)

``alpha`` trades voxel-level against structure-level mistakes and ``beta``
trades split against merge penalties. Each term is a mean over its own
voxel domain: the whole image for the base term, the component's voxels
for a component term. The critical report is a function of the binarized
prediction and is treated as locally constant by the gradient, exactly as
a training step would use it.
"""

from dataclasses import dataclass

import numpy as np

from svtopo.criticals import detect_criticals
from svtopo.grid import check_connectivity
from svtopo.masks import BinaryMask

CROSS_ENTROPY = "cross_entropy"
SOFT_DICE = "soft_dice"

_CLAMP = 1e-7
_DICE_SMOOTH = 1.0


@dataclass(frozen=True)
class LossParams:
    """Hyperparameters of the topological loss."""

    alpha: float = 0.5
    beta: float = 0.5
    threshold: float = 0.5
    base: str = CROSS_ENTROPY

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.base not in (CROSS_ENTROPY, SOFT_DICE):
            raise ValueError(f"unknown base loss {self.base!r}")


@dataclass(frozen=True)
class ProbabilityField:
    """Per-voxel foreground probabilities in [0, 1]."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim not in (2, 3):
            raise ValueError(f"field must be 2-d or 3-d, got ndim={arr.ndim}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", arr)

    @property
    def shape(self):
        return self.probs.shape


@dataclass(frozen=True)
class WeightMap:
    """Per-voxel penalty weights; at most three distinct levels."""

    weights: np.ndarray

    @property
    def shape(self):
        return self.weights.shape


def weight_map(report, params, shape):
    """Pointwise weights: (1-a) everywhere, +a*b on positive-critical voxels,
    +a*(1-b) on negative-critical voxels."""
    if tuple(report.shape) != tuple(shape):
        raise ValueError(
            f"report shape {report.shape} does not match requested {shape}"
        )
    w = np.full(shape, 1.0 - params.alpha, dtype=np.float64)
    w[report.positive_mask.bits] += params.alpha * params.beta
    w[report.negative_mask.bits] += params.alpha * (1.0 - params.beta)
    return WeightMap(w)


def binarize(probs, threshold):
    """Foreground mask of a probability field (>= threshold)."""
    from svtopo.grid import LabeledGrid

    return LabeledGrid((probs.probs >= threshold).astype(np.int64))


def _check_loss_inputs(gt, probs):
    if gt.shape != probs.shape:
        raise ValueError(
            f"grid and probabilities have mismatched shapes: "
            f"{gt.shape} vs {probs.shape}"
        )


def _cross_entropy_terms(gt, probs):
    p = np.clip(probs.probs.ravel(), _CLAMP, 1.0 - _CLAMP)
    target = (gt.labels.ravel() != 0)
    return np.where(target, -np.log(p), -np.log(1.0 - p))


def _soft_dice(p, t):
    overlap = 2.0 * float(np.dot(p, t)) + _DICE_SMOOTH
    total = float(p.sum()) + float(t.sum()) + _DICE_SMOOTH
    return 1.0 - overlap / total


def _soft_dice_grad(p, t):
    overlap = 2.0 * float(np.dot(p, t)) + _DICE_SMOOTH
    total = float(p.sum()) + float(t.sum()) + _DICE_SMOOTH
    return -(2.0 * t * total - overlap) / total**2


def loss_given_report(gt, probs, params, report):
    """Evaluate the loss for a fixed critical report.

    This is the piecewise-smooth function whose gradient ``loss_gradient``
    returns; ``supervoxel_loss`` recomputes the report from the thresholded
    probabilities and then calls this.
    """
    _check_loss_inputs(gt, probs)
    if params.base == CROSS_ENTROPY:
        terms = _cross_entropy_terms(gt, probs)
        total = (1.0 - params.alpha) * float(terms.mean())
        for comp in report.positive:
            total += params.alpha * params.beta * float(terms[comp.voxels].mean())
        for comp in report.negative:
            total += (
                params.alpha * (1.0 - params.beta) * float(terms[comp.voxels].mean())
            )
        return total

    p = probs.probs.ravel()
    t = (gt.labels.ravel() != 0).astype(np.float64)
    total = (1.0 - params.alpha) * _soft_dice(p, t)
    for comp in report.positive:
        total += params.alpha * params.beta * _soft_dice(p[comp.voxels], t[comp.voxels])
    for comp in report.negative:
        total += (
            params.alpha
            * (1.0 - params.beta)
            * _soft_dice(p[comp.voxels], t[comp.voxels])
        )
    return total


def supervoxel_loss(gt, probs, params, conn):
    """Topological loss of a probability field against a labeled ground truth.

    Thresholds the probabilities, detects critical components of the
    binarized prediction, and evaluates the weighted sum of base-loss
    terms. Returns the scalar loss together with the critical report it
    was computed from.
    """
    _check_loss_inputs(gt, probs)
    conn = check_connectivity(conn, gt.ndim)
    report = detect_criticals(gt, binarize(probs, params.threshold), conn)
    return loss_given_report(gt, probs, params, report), report


def gradient_given_report(gt, probs, params, report):
    """Analytic d(loss)/d(probability) with the report held fixed."""
    _check_loss_inputs(gt, probs)
    n = probs.probs.size
    coeff = np.full(n, (1.0 - params.alpha) / n, dtype=np.float64)
    for comp in report.positive:
        coeff[comp.voxels] += params.alpha * params.beta / comp.voxels.size
    for comp in report.negative:
        coeff[comp.voxels] += (
            params.alpha * (1.0 - params.beta) / comp.voxels.size
        )

    if params.base == CROSS_ENTROPY:
        p = np.clip(probs.probs.ravel(), _CLAMP, 1.0 - _CLAMP)
        target = (gt.labels.ravel() != 0)
        dterm = np.where(target, -1.0 / p, 1.0 / (1.0 - p))
        return (coeff * dterm).reshape(probs.shape)

    p = probs.probs.ravel()
    t = (gt.labels.ravel() != 0).astype(np.float64)
    grad = (1.0 - params.alpha) * _soft_dice_grad(p, t)
    for comp in report.positive:
        grad[comp.voxels] += (
            params.alpha
            * params.beta
            * _soft_dice_grad(p[comp.voxels], t[comp.voxels])
        )
    for comp in report.negative:
        grad[comp.voxels] += (
            params.alpha
            * (1.0 - params.beta)
            * _soft_dice_grad(p[comp.voxels], t[comp.voxels])
        )
    return grad.reshape(probs.shape)


def loss_gradient(gt, probs, params, conn):
    """Gradient of ``supervoxel_loss`` w.r.t. the probabilities.

    The critical report is recomputed from the thresholded prediction and
    treated as piecewise-constant, so this is the exact gradient of
    ``loss_given_report`` at the current report.
    """
    _check_loss_inputs(gt, probs)
    conn = check_connectivity(conn, gt.ndim)
    report = detect_criticals(gt, binarize(probs, params.threshold), conn)
    return gradient_given_report(gt, probs, params, report)
