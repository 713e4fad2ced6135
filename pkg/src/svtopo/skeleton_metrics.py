"""Skeleton-based evaluation of a predicted segmentation.

Ground-truth neurites arrive as SWC skeletons: tree graphs whose nodes
carry voxel coordinates. Each node reads its label out of the predicted
segmentation; a short misalignment-correction pass then fills runs of
zero-labeled nodes whose two flanking nodes agree on a nonzero label.
From the corrected node labels the module derives splits per neuron,
omitted and merged edge percentages, edge accuracy, and the expected run
length (ERL) of the correctly segmented pieces.
"""

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np


@dataclass(frozen=True)
class Skeleton:
    """Tree (or forest) graph with one voxel coordinate per node."""

    graph: nx.Graph
    name: str = "skeleton"

    def __post_init__(self):
        if self.graph.number_of_nodes() == 0:
            raise ValueError(f"{self.name}: skeleton has no nodes")
        if not nx.is_forest(self.graph):
            raise ValueError(f"{self.name}: cycle detected, skeleton must be a forest")
        for node, data in self.graph.nodes(data=True):
            if "voxel" not in data:
                raise ValueError(f"{self.name}: node {node} has no voxel coordinate")

    @property
    def n_edges(self):
        return self.graph.number_of_edges()

    def voxel(self, node):
        return self.graph.nodes[node]["voxel"]


@dataclass(frozen=True)
class SkeletonScore:
    """Per-skeleton tallies feeding the aggregate report."""

    name: str
    n_edges: int
    splits: int
    omit_edges: int
    merged_edges: int
    erl: float
    normalized_erl: float


@dataclass(frozen=True)
class SkeletonEval:
    """Aggregate skeleton metrics; percentages are on a 0-100 scale."""

    splits_per_neuron: float
    pct_omit: float
    pct_merged: float
    edge_accuracy: float
    normalized_erl: float
    per_skeleton: list = field(default_factory=list)


def _round_half_away(value):
    return int(math.floor(value + 0.5)) if value >= 0 else int(math.ceil(value - 0.5))


def load_swc(text, voxel_size=(1.0, 1.0, 1.0), name="skeleton"):
    """Parse SWC text into a skeleton.

    Rows are ``id type x y z radius parent`` with ``#`` comments; a parent
    of -1 marks a root. Coordinates are divided by the per-axis voxel size
    and rounded to the nearest voxel (halves away from zero).

    Raises on malformed rows, unknown parent IDs, duplicate node IDs,
    cycles, and node-less input.
    """
    if np.isscalar(voxel_size):
        voxel_size = (float(voxel_size),) * 3
    if len(voxel_size) != 3 or any(v <= 0 for v in voxel_size):
        raise ValueError(f"voxel_size must be 3 positive scales, got {voxel_size}")

    graph = nx.Graph()
    parents = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 7:
            raise ValueError(
                f"{name}: malformed SWC row at line {line_no}: {raw_line!r}"
            )
        try:
            node_id = int(fields[0])
            xyz = tuple(float(v) for v in fields[2:5])
            parent = int(fields[6])
        except ValueError as exc:
            raise ValueError(
                f"{name}: malformed SWC row at line {line_no}: {raw_line!r}"
            ) from exc
        if node_id in graph:
            raise ValueError(f"{name}: duplicate node id {node_id} at line {line_no}")
        voxel = tuple(
            _round_half_away(coord / scale) for coord, scale in zip(xyz, voxel_size)
        )
        graph.add_node(node_id, voxel=voxel)
        parents[node_id] = parent

    if graph.number_of_nodes() == 0:
        raise ValueError(f"{name}: no nodes found")
    for node_id, parent in parents.items():
        if parent == -1:
            continue
        if parent not in graph:
            raise ValueError(f"{name}: node {node_id} references unknown parent {parent}")
        graph.add_edge(node_id, parent)
    return Skeleton(graph=graph, name=name)


def _grid_label(seg, voxel, ndim, name, node):
    if ndim == 2:
        if voxel[2] != 0:
            raise ValueError(
                f"{name}: node {node} has nonzero z={voxel[2]} on a 2-d grid"
            )
        coord = voxel[:2]
    else:
        coord = voxel
    if any(c < 0 or c >= s for c, s in zip(coord, seg.shape)):
        raise ValueError(
            f"{name}: node {node} coordinate {coord} outside grid {seg.shape}"
        )
    return int(seg.labels[coord])


def align_correct(skeleton, seg):
    """Per-node predicted labels with misalignment gaps filled.

    A maximal run of zero-labeled degree-2 nodes whose two flanking nodes
    carry the same nonzero label is assigned that label. The correction
    only touches this node-label view, never the grid; runs through
    branching nodes are left alone.
    """
    graph = skeleton.graph
    ndim = seg.labels.ndim
    labels = {
        node: _grid_label(seg, skeleton.voxel(node), ndim, skeleton.name, node)
        for node in graph.nodes
    }

    fills = {}
    seen_runs = set()
    for start in graph.nodes:
        if labels[start] == 0:
            continue
        for first in graph.neighbors(start):
            if labels[first] != 0:
                continue
            run = [first]
            prev, cur = start, first
            while labels[cur] == 0 and graph.degree[cur] == 2:
                nxt = next(n for n in graph.neighbors(cur) if n != prev)
                if labels[nxt] == 0:
                    run.append(nxt)
                prev, cur = cur, nxt
            if labels[cur] == 0:
                continue  # dead end or branch point, no matching endpoint
            if labels[cur] != labels[start]:
                continue
            run_key = frozenset(run)
            if run_key in seen_runs:
                continue
            seen_runs.add(run_key)
            for node in run:
                fills[node] = labels[start]

    corrected = dict(labels)
    corrected.update(fills)
    return corrected


def _edge_components(graph, edges):
    """Connected components of the subgraph spanned by the given edges."""
    sub = nx.Graph()
    sub.add_edges_from(edges)
    return [sub.subgraph(c) for c in nx.connected_components(sub)]


def evaluate_skeletons(skeletons, seg):
    """Skeleton metrics of a predicted segmentation.

    Applies the misalignment correction, then derives per-skeleton split,
    omit, and merge tallies and aggregates them with weights proportional
    to each skeleton's edge count. Edge accuracy is exactly
    ``100 - (pct_omit + pct_merged)``; the expected run length counts
    component sizes of the correctly segmented edge subgraph.
    """
    if not skeletons:
        raise ValueError("no skeletons to evaluate")
    total_edges = sum(s.n_edges for s in skeletons)
    if total_edges == 0:
        raise ValueError("skeletons carry no edges")

    labeled = []
    for skel in skeletons:
        node_labels = align_correct(skel, seg)
        kept = [n for n in skel.graph.nodes if node_labels[n] != 0]
        sub = skel.graph.subgraph(kept)
        components = [frozenset(c) for c in nx.connected_components(sub)]
        labeled.append((skel, node_labels, sub, components))

    # A component is merged when some predicted label appears in components
    # of two different skeletons.
    label_sites = {}
    for idx, (_, node_labels, _, components) in enumerate(labeled):
        for comp_idx, comp in enumerate(components):
            for value in {node_labels[n] for n in comp}:
                label_sites.setdefault(value, set()).add((idx, comp_idx))
    merged_sites = set()
    for sites in label_sites.values():
        if len({idx for idx, _ in sites}) > 1:
            merged_sites.update(sites)

    per_skeleton = []
    weighted_splits = 0.0
    weighted_nerl = 0.0
    omit_total = 0
    merged_total = 0
    for idx, (skel, node_labels, sub, components) in enumerate(labeled):
        n_edges = skel.n_edges
        splits = max(len(components) - 1, 0)
        omit_edges = n_edges - sub.number_of_edges()

        merged_edges = 0
        merged_edge_set = set()
        for comp_idx, comp in enumerate(components):
            if (idx, comp_idx) in merged_sites:
                comp_graph = sub.subgraph(comp)
                merged_edges += comp_graph.number_of_edges()
                merged_edge_set.update(
                    frozenset(e) for e in comp_graph.edges
                )

        correct_edges = [
            e for e in sub.edges if frozenset(e) not in merged_edge_set
        ]
        erl = 0.0
        for comp_graph in _edge_components(sub, correct_edges):
            size = comp_graph.number_of_edges()
            erl += size * size / n_edges
        nerl = erl / n_edges

        weight = n_edges / total_edges
        weighted_splits += weight * splits
        weighted_nerl += weight * nerl
        omit_total += omit_edges
        merged_total += merged_edges
        per_skeleton.append(
            SkeletonScore(
                name=skel.name,
                n_edges=n_edges,
                splits=splits,
                omit_edges=omit_edges,
                merged_edges=merged_edges,
                erl=erl,
                normalized_erl=nerl,
            )
        )

    pct_omit = 100.0 * omit_total / total_edges
    pct_merged = 100.0 * merged_total / total_edges
    return SkeletonEval(
        splits_per_neuron=weighted_splits,
        pct_omit=pct_omit,
        pct_merged=pct_merged,
        edge_accuracy=100.0 - (pct_omit + pct_merged),
        normalized_erl=weighted_nerl,
        per_skeleton=per_skeleton,
    )
