"""Shared test utilities: independent oracles and instance generators."""

import numpy as np

from svtopo.grid import Connectivity, LabeledGrid, neighbors


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def union_find_partition(labels, conn):
    """Partition of foreground voxels into components, by plain union-find.

    Independent of the package's scipy-based labeling: walks every voxel
    and unions same-label foreground neighbors. Returns a set of
    frozensets of flat indices.
    """
    labels = np.asarray(labels)
    shape = labels.shape
    flat = labels.ravel()
    uf = UnionFind(flat.size)
    for idx in range(flat.size):
        if flat[idx] == 0:
            continue
        coord = np.unravel_index(idx, shape)
        for nb in neighbors(tuple(coord), shape, conn):
            j = int(np.ravel_multi_index(nb, shape))
            if flat[j] == flat[idx]:
                uf.union(idx, j)
    groups = {}
    for idx in range(flat.size):
        if flat[idx] == 0:
            continue
        groups.setdefault(uf.find(idx), []).append(idx)
    return {frozenset(v) for v in groups.values()}


def partition_of(component_ids):
    """Set-of-frozensets view of a component labeling."""
    ids = np.asarray(component_ids).ravel()
    groups = {}
    for idx in np.flatnonzero(ids):
        groups.setdefault(int(ids[idx]), []).append(int(idx))
    return {frozenset(v) for v in groups.values()}


def random_binary_grid(rng, shape, density=0.5):
    return LabeledGrid((rng.random(shape) < density).astype(np.int64))


def random_instance_grid(rng, shape, conn, density=0.5):
    """Random instance labeling: components of random noise, renamed randomly."""
    from svtopo.grid import connected_components

    binary = random_binary_grid(rng, shape, density)
    comps = connected_components(binary, conn)
    if comps.count == 0:
        return binary
    new_names = rng.permutation(np.arange(1, comps.count + 1)) * rng.integers(1, 4)
    lut = np.concatenate(([0], new_names))
    return LabeledGrid(lut[comps.component_ids])


def perturb_binary(rng, grid, flip_prob=0.1):
    """Random prediction: flip each voxel's foreground bit independently."""
    flips = rng.random(grid.shape) < flip_prob
    fg = grid.labels != 0
    return LabeledGrid(np.where(flips, ~fg, fg).astype(np.int64))


def random_pair(rng, shape, conn, density=0.5, flip_prob=0.1):
    gt = random_binary_grid(rng, shape, density)
    pred = perturb_binary(rng, gt, flip_prob)
    return gt, pred


def _maze_tree_2d(rng, cells_shape):
    """Random spanning tree of a 2-d cell lattice, rasterized onto a grid.

    Cells sit at even coordinates; carving a passage between two cells
    fills the voxel between them. The foreground's induced graph under
    4-connectivity is exactly the spanning tree, so it contains no cycles.
    """
    ch, cw = cells_shape
    grid = np.zeros((2 * ch - 1, 2 * cw - 1), dtype=np.int64)
    visited = np.zeros((ch, cw), dtype=bool)
    start = (int(rng.integers(ch)), int(rng.integers(cw)))
    stack = [start]
    visited[start] = True
    grid[2 * start[0], 2 * start[1]] = 1
    while stack:
        r, c = stack[-1]
        options = []
        for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < ch and 0 <= nc < cw and not visited[nr, nc]:
                options.append((nr, nc))
        if not options:
            stack.pop()
            continue
        nr, nc = options[rng.integers(len(options))]
        visited[nr, nc] = True
        grid[2 * nr, 2 * nc] = 1
        grid[r + nr, c + nc] = 1
        stack.append((nr, nc))
    return grid


def _maze_tree_3d(rng, cells_shape):
    cd, ch, cw = cells_shape
    grid = np.zeros((2 * cd - 1, 2 * ch - 1, 2 * cw - 1), dtype=np.int64)
    visited = np.zeros(cells_shape, dtype=bool)
    start = tuple(int(rng.integers(s)) for s in cells_shape)
    stack = [start]
    visited[start] = True
    grid[tuple(2 * c for c in start)] = 1
    moves = [
        (-1, 0, 0), (0, -1, 0), (0, 0, -1),
        (0, 0, 1), (0, 1, 0), (1, 0, 0),
    ]
    while stack:
        cur = stack[-1]
        options = []
        for mv in moves:
            nxt = tuple(c + m for c, m in zip(cur, mv))
            if all(0 <= c < s for c, s in zip(nxt, cells_shape)) and not visited[nxt]:
                options.append(nxt)
        if not options:
            stack.pop()
            continue
        nxt = options[rng.integers(len(options))]
        visited[nxt] = True
        grid[tuple(2 * c for c in nxt)] = 1
        grid[tuple(c + m for c, m in zip(cur, nxt))] = 1
        stack.append(nxt)
    return grid


def tree_structured_pair(rng, cells_shape, drop_prob=0.15):
    """(gt, pred) whose foregrounds are both forests under axis connectivity.

    Rasterizes a random spanning tree, then derives the second grid by
    deleting random voxels (subgraphs of forests stay forests). Half the
    time the deletion-side plays the prediction (exercising false
    negatives), half the time the ground truth (exercising false
    positives).
    """
    if len(cells_shape) == 2:
        full = _maze_tree_2d(rng, cells_shape)
    else:
        full = _maze_tree_3d(rng, cells_shape)
    keep = rng.random(full.shape) >= drop_prob
    thinned = np.where(keep, full, 0)
    if rng.random() < 0.5:
        return LabeledGrid(full), LabeledGrid(thinned)
    return LabeledGrid(thinned), LabeledGrid(full)


def grid_from_rows(rows):
    """2-d LabeledGrid from nested lists, for terse fixtures."""
    return LabeledGrid(np.array(rows, dtype=np.int64))


def drop_singletons(labels, conn):
    """Clear single-voxel components (invisible to affinity channels)."""
    from svtopo.grid import connected_components

    grid = LabeledGrid(np.asarray(labels))
    cc = connected_components(grid, conn)
    ids, counts = np.unique(
        cc.component_ids[cc.component_ids != 0], return_counts=True
    )
    small = ids[counts < 2]
    keep = ~np.isin(cc.component_ids, small)
    return LabeledGrid(np.where(keep, grid.labels, 0))


def conn_for(ndim, diagonal=False):
    if ndim == 2:
        return Connectivity.C8 if diagonal else Connectivity.C4
    return Connectivity.C26 if diagonal else Connectivity.C6
