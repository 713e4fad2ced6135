"""Labeled grids, k-connectivity neighborhoods, and connected-component labeling.

Every other module builds on the three types defined here. A ``LabeledGrid``
is a dense 2-d or 3-d field of non-negative integer labels where 0 is
background and any positive value names an object (instance) the voxel
belongs to. Two foreground voxels are in the same connected component iff
they carry the same label and are joined by a path of same-label voxels
under the chosen connectivity.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from itertools import product

import numpy as np
from scipy import ndimage


class Connectivity(IntEnum):
    """Neighborhood convention defining the grid-graph edges.

    4/8 are valid for 2-d grids, 6/18/26 for 3-d grids.
    """

    C4 = 4
    C6 = 6
    C8 = 8
    C18 = 18
    C26 = 26

    @property
    def ndim(self):
        """Grid dimensionality this connectivity applies to."""
        return 2 if self in (Connectivity.C4, Connectivity.C8) else 3

    def offsets(self):
        """Neighbor offsets in lexicographic order."""
        return _OFFSETS[self]

    def structure(self):
        """Boolean structuring element (center included) for scipy.ndimage."""
        struct = np.zeros((3,) * self.ndim, dtype=bool)
        struct[(1,) * self.ndim] = True
        for off in self.offsets():
            struct[tuple(o + 1 for o in off)] = True
        return struct


def _build_offsets(ndim, kind):
    offs = []
    for off in product((-1, 0, 1), repeat=ndim):
        if all(o == 0 for o in off):
            continue
        nonzero = sum(1 for o in off if o != 0)
        if kind == "axis" and nonzero != 1:
            continue
        if kind == "no_corner" and nonzero == ndim:
            continue
        offs.append(off)
    return tuple(sorted(offs))


_OFFSETS = {
    Connectivity.C4: _build_offsets(2, "axis"),
    Connectivity.C8: _build_offsets(2, "full"),
    Connectivity.C6: _build_offsets(3, "axis"),
    Connectivity.C18: _build_offsets(3, "no_corner"),
    Connectivity.C26: _build_offsets(3, "full"),
}


@dataclass(frozen=True)
class LabeledGrid:
    """Dense 2-d/3-d field of non-negative integer labels (0 = background)."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if not np.issubdtype(arr.dtype, np.integer):
            arr = arr.astype(np.int64)
        if arr.ndim not in (2, 3):
            raise ValueError(f"grid must be 2-d or 3-d, got ndim={arr.ndim}")
        if any(s < 1 for s in arr.shape):
            raise ValueError(f"every shape entry must be >= 1, got {arr.shape}")
        if arr.size and arr.min() < 0:
            raise ValueError("labels must be non-negative")
        object.__setattr__(self, "labels", arr)

    @property
    def shape(self):
        return self.labels.shape

    @property
    def ndim(self):
        return self.labels.ndim

    def foreground(self):
        """Boolean mask of voxels with nonzero label."""
        return self.labels != 0


@dataclass(frozen=True)
class ComponentLabeling:
    """Per-voxel component IDs (0 = no component) plus the component count.

    IDs are consecutive 1..count in first-encounter scan order, so the
    labeling is bit-reproducible for a given input.
    """

    component_ids: np.ndarray
    count: int = field(default=None)

    def __post_init__(self):
        ids = np.asarray(self.component_ids)
        count = self.count
        if count is None:
            nz = ids[ids != 0]
            count = int(np.unique(nz).size)
        object.__setattr__(self, "component_ids", ids)
        object.__setattr__(self, "count", int(count))

    @property
    def shape(self):
        return self.component_ids.shape


def check_connectivity(conn, ndim):
    """Raise if ``conn`` is not admissible for an ``ndim``-dimensional grid."""
    conn = Connectivity(conn)
    if conn.ndim != ndim:
        raise ValueError(
            f"connectivity {int(conn)} is not admissible for {ndim}-d grids"
        )
    return conn


def neighbors(index, grid_shape, conn):
    """In-bounds neighbors of a voxel under the given connectivity.

    Parameters
    ----------
    index : tuple of int
        Voxel coordinate; must be within bounds.
    grid_shape : tuple of int
        Grid dimensions (2 or 3 entries).
    conn : Connectivity
        Neighborhood convention; must match ``len(grid_shape)``.

    Returns
    -------
    list of tuple
        Neighbor coordinates, ordered lexicographically by offset.
    """
    conn = check_connectivity(conn, len(grid_shape))
    if len(index) != len(grid_shape):
        raise ValueError("index dimensionality does not match grid shape")
    if any(i < 0 or i >= s for i, s in zip(index, grid_shape)):
        raise ValueError(f"index {index} out of bounds for shape {grid_shape}")
    out = []
    for off in conn.offsets():
        nb = tuple(i + o for i, o in zip(index, off))
        if all(0 <= c < s for c, s in zip(nb, grid_shape)):
            out.append(nb)
    return out


def _renumber_first_encounter(raw):
    """Relabel nonzero ids to consecutive 1..count in row-major scan order."""
    flat = raw.ravel()
    uniq, first = np.unique(flat, return_index=True)
    nz = uniq != 0
    count = int(nz.sum())
    if count == 0:
        return np.zeros(raw.shape, dtype=np.int64), 0
    order = np.argsort(first[nz], kind="stable")
    lut = np.zeros(int(uniq.max()) + 1, dtype=np.int64)
    lut[uniq[nz][order]] = np.arange(1, count + 1)
    return lut[raw], count


def connected_components(grid, conn):
    """Connected components of a labeled grid.

    Background voxels get component ID 0. Two foreground voxels share an ID
    iff they have the same label and are joined by a path of voxels with
    that label. IDs are assigned in first-encounter scan order starting
    at 1.
    """
    conn = check_connectivity(conn, grid.ndim)
    labels = grid.labels
    fg = labels != 0
    if not fg.any():
        return ComponentLabeling(np.zeros(grid.shape, dtype=np.int64), 0)
    struct = conn.structure()
    fcomp, n_fore = ndimage.label(fg, structure=struct)

    # Components of the plain foreground merge touching objects with
    # different labels; split only the impure ones, label by label.
    label_span = int(labels.max()) + 1
    keys = fcomp[fg].astype(np.int64) * label_span + labels[fg].astype(np.int64)
    uniq_keys = np.unique(keys)
    if uniq_keys.size == n_fore:
        return ComponentLabeling(*_renumber_first_encounter(fcomp))

    fcomp_of_key, counts = np.unique(uniq_keys // label_span, return_counts=True)
    impure = fcomp_of_key[counts > 1]
    impure_region = np.isin(fcomp, impure)
    combined = np.where(impure_region, 0, fcomp).astype(np.int64)
    next_id = int(n_fore) + 1
    for value in np.unique(labels[impure_region]):
        sub, n_sub = ndimage.label((labels == value) & impure_region, structure=struct)
        combined += np.where(sub > 0, sub + (next_id - 1), 0)
        next_id += int(n_sub)
    return ComponentLabeling(*_renumber_first_encounter(combined))
