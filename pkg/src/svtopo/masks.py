"""False-negative/false-positive masks and mask components w.r.t. a reference.

Masks only consult foreground membership: a voxel is a false negative when
the ground truth marks it foreground but the prediction does not, and vice
versa for false positives. Removing a mask from a grid zeroes the masked
voxels and leaves everything else untouched.
"""

from dataclasses import dataclass

import numpy as np

from svtopo.grid import ComponentLabeling, LabeledGrid, connected_components


@dataclass(frozen=True)
class BinaryMask:
    """Per-voxel {0,1} mask with the same shape as the grids it pairs with."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.dtype != bool:
            if arr.size and not np.isin(arr, (0, 1)).all():
                raise ValueError("mask entries must be 0 or 1")
            arr = arr.astype(bool)
        if arr.ndim not in (2, 3):
            raise ValueError(f"mask must be 2-d or 3-d, got ndim={arr.ndim}")
        object.__setattr__(self, "bits", arr)

    @property
    def shape(self):
        return self.bits.shape

    def any(self):
        return bool(self.bits.any())


def _check_same_shape(a, b, what="grids"):
    if a.shape != b.shape:
        raise ValueError(f"{what} have mismatched shapes: {a.shape} vs {b.shape}")


def false_negative_mask(gt, pred):
    """Voxels foreground in the ground truth but background in the prediction."""
    _check_same_shape(gt, pred)
    return BinaryMask((gt.labels != 0) & (pred.labels == 0))


def false_positive_mask(gt, pred):
    """Voxels foreground in the prediction but background in the ground truth."""
    _check_same_shape(gt, pred)
    return BinaryMask((pred.labels != 0) & (gt.labels == 0))


def remove(base, mask):
    """Zero out the masked voxels of a grid; everything else is unchanged."""
    _check_same_shape(base, mask)
    return LabeledGrid(np.where(mask.bits, 0, base.labels))


def components_wrt(reference, mask, conn):
    """Connected components of a mask with respect to a reference labeling.

    Two mask voxels share a component iff they are joined by a mask-internal
    path whose voxels all carry the same (nonzero) reference label. With a
    binary reference this coincides with plain connected components of the
    mask.

    Raises if some mask voxel sits on reference background: masks are
    expected to be subsets of the reference foreground.
    """
    _check_same_shape(reference, mask, "reference and mask")
    if bool((mask.bits & (reference.labels == 0)).any()):
        raise ValueError("mask voxel with reference label 0")
    masked = LabeledGrid(np.where(mask.bits, reference.labels, 0))
    return connected_components(masked, conn)
