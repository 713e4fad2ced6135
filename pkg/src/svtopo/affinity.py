"""Directional affinity channels: encode, decode, and the per-channel loss.

An affinity field stores one channel per axis offset; the value at voxel
``i`` of channel ``c`` says whether ``i`` and ``i + offset_c`` belong to
the same object (1/0 for an encoded labeling, a probability for a
prediction). Positions whose partner voxel falls outside the grid carry 0
in encoded fields.

Note that an isolated single-voxel object has no incident edge, so it is
invisible to the affinity representation: decode(encode(y)) reproduces the
component partition of y exactly when every component spans at least two
voxels under the axis connectivity.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as sparse_components

from svtopo.grid import (
    ComponentLabeling,
    Connectivity,
    LabeledGrid,
    connected_components,
)
from svtopo.loss import ProbabilityField, supervoxel_loss


def axis_offsets(ndim):
    """Default offsets: one positive unit vector per axis."""
    eye = np.eye(ndim, dtype=int)
    return tuple(tuple(int(v) for v in row) for row in eye)


def axis_connectivity(ndim):
    return Connectivity.C4 if ndim == 2 else Connectivity.C6


def _check_offsets(offsets, ndim):
    offsets = tuple(tuple(int(v) for v in off) for off in offsets)
    for off in offsets:
        if len(off) != ndim:
            raise ValueError(f"offset {off} does not match {ndim}-d grids")
        if sum(abs(v) for v in off) != 1:
            raise ValueError(f"offset {off} is not a unit axis displacement")
    return offsets


@dataclass(frozen=True)
class AffinityField:
    """Stack of per-offset channels over a common grid shape."""

    channels: np.ndarray  # (k, *grid_shape)
    offsets: tuple

    def __post_init__(self):
        arr = np.asarray(self.channels)
        if arr.ndim not in (3, 4):
            raise ValueError("channels must be stacked as (k, *grid_shape)")
        offsets = _check_offsets(self.offsets, arr.ndim - 1)
        if len(offsets) != arr.shape[0]:
            raise ValueError(
                f"{arr.shape[0]} channels but {len(offsets)} offsets"
            )
        object.__setattr__(self, "channels", arr)
        object.__setattr__(self, "offsets", offsets)

    @property
    def grid_shape(self):
        return self.channels.shape[1:]

    @property
    def n_channels(self):
        return self.channels.shape[0]

    def is_binary(self):
        return bool(np.isin(self.channels, (0, 1)).all())


def _partner_slices(offset, shape):
    src = tuple(
        slice(max(0, -o), s - max(0, o)) for o, s in zip(offset, shape)
    )
    dst = tuple(
        slice(max(0, o), s - max(0, -o)) for o, s in zip(offset, shape)
    )
    return src, dst


def encode_affinities(grid, conn, offsets=None):
    """Binary affinity channels of a labeled grid.

    A channel entry is 1 iff both edge endpoints are foreground and share
    a connected component of the grid under ``conn``.
    """
    offsets = _check_offsets(
        offsets if offsets is not None else axis_offsets(grid.ndim), grid.ndim
    )
    comp = connected_components(grid, conn).component_ids
    channels = np.zeros((len(offsets),) + grid.shape, dtype=np.uint8)
    for c, off in enumerate(offsets):
        src, dst = _partner_slices(off, grid.shape)
        hit = (comp[src] == comp[dst]) & (comp[src] != 0)
        channels[c][src] = hit
    return AffinityField(channels=channels, offsets=offsets)


def decode_affinities(aff, threshold=0.5):
    """Component labeling of the voxel graph induced by strong affinities.

    Edges are channel values >= threshold between in-bounds partners. A
    voxel is foreground iff some incident channel value passes the
    threshold; voxels whose only evidence is a channel entry with an
    out-of-bounds partner become singletons.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    shape = aff.grid_shape
    n = int(np.prod(shape))
    flat_index = np.arange(n, dtype=np.int64).reshape(shape)

    rows, cols = [], []
    fg = np.zeros(shape, dtype=bool)
    for c, off in enumerate(aff.offsets):
        strong = aff.channels[c] >= threshold
        fg |= strong  # source voxel has evidence, partner may be out of bounds
        src, dst = _partner_slices(off, shape)
        hit = strong[src]
        if hit.any():
            rows.append(flat_index[src][hit])
            cols.append(flat_index[dst][hit])
            fg[dst] |= hit

    if not fg.any():
        return ComponentLabeling(np.zeros(shape, dtype=np.int64), 0)
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = c = np.empty(0, dtype=np.int64)
    graph = coo_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(n, n))
    _, raw = sparse_components(graph, directed=False)

    ids = np.where(fg.ravel(), raw + 1, 0).reshape(shape)
    from svtopo.grid import _renumber_first_encounter

    return ComponentLabeling(*_renumber_first_encounter(ids))


def _channel_pair(gt_aff, pred_aff):
    if gt_aff.offsets != pred_aff.offsets:
        raise ValueError(
            f"offset mismatch: {gt_aff.offsets} vs {pred_aff.offsets}"
        )
    if gt_aff.channels.shape != pred_aff.channels.shape:
        raise ValueError(
            f"channel shapes differ: {gt_aff.channels.shape} vs "
            f"{pred_aff.channels.shape}"
        )
    if not gt_aff.is_binary():
        raise ValueError("ground-truth affinity channels must be binary")


def affinity_channel_losses(gt_aff, pred_aff, params):
    """Per-channel topological losses.

    Each channel is treated as an independent binary image over the grid
    shape (edge values sit at the lower-index endpoint), so the voxel-space
    loss applies unchanged channel by channel.
    """
    _channel_pair(gt_aff, pred_aff)
    conn = axis_connectivity(len(gt_aff.grid_shape))
    losses = []
    for c in range(gt_aff.n_channels):
        gt_grid = LabeledGrid(gt_aff.channels[c].astype(np.int64))
        pred_probs = ProbabilityField(pred_aff.channels[c].astype(np.float64))
        value, _ = supervoxel_loss(gt_grid, pred_probs, params, conn)
        losses.append(value)
    return losses


def affinity_loss(gt_aff, pred_aff, params):
    """Sum of the per-channel topological losses."""
    return float(sum(affinity_channel_losses(gt_aff, pred_aff, params)))
