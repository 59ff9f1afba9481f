"""Substructure-graph construction and capped instance distances.

Nodes are detected instances; an edge joins two instances whose expanded
boxes intersect.  The distance between two instances is the number of
*intermediate* instances on a shortest path, so directly linked
instances are at distance 0 and unreachable pairs have no distance
(``None``).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .detection import DetectionSet, expansion_margin, REFERENCE_EXPANSION

__all__ = [
    "SubstructureGraph",
    "DistanceTable",
    "build_graph",
    "graph_from_edges",
    "instance_distance",
    "all_pairs_distances_capped",
    "REFERENCE_CAP",
]

REFERENCE_CAP = 4


@dataclass(frozen=True)
class SubstructureGraph:
    nodes: tuple[tuple[int, int], ...]
    adjacency: Mapping[int, frozenset[int]]
    image_key: str = ""

    def __post_init__(self):
        ids = [i for i, _ in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate instance ids in graph nodes")
        known = set(ids)
        for a, nbrs in self.adjacency.items():
            if a not in known:
                raise ValueError(f"adjacency references unknown instance {a}")
            if a in nbrs:
                raise ValueError(f"self-loop on instance {a}")
            for b in nbrs:
                if b not in known or a not in self.adjacency.get(b, ()):
                    raise ValueError(f"edge ({a}, {b}) is not symmetric or has an unknown endpoint")

    @property
    def class_of(self) -> dict[int, int]:
        return dict(self.nodes)

    def neighbors(self, instance_id: int) -> frozenset[int]:
        return self.adjacency.get(instance_id, frozenset())

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as sorted ``(a, b)`` pairs with ``a < b``."""
        return sorted((a, b) for a, nbrs in self.adjacency.items() for b in nbrs if a < b)

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        start = self.nodes[0][0]
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in self.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == len(self.nodes)

    def to_json(self) -> dict:
        return {
            "nodes": sorted([list(n) for n in self.nodes]),
            "edges": [list(e) for e in self.edges],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


def graph_from_edges(
    nodes: Iterable[tuple[int, int]], edges: Iterable[tuple[int, int]], image_key: str = ""
) -> SubstructureGraph:
    nodes = tuple((int(i), int(c)) for i, c in nodes)
    adj: dict[int, set[int]] = {i: set() for i, _ in nodes}
    for a, b in edges:
        if a == b:
            continue
        adj[a].add(b)
        adj[b].add(a)
    return SubstructureGraph(nodes, {k: frozenset(v) for k, v in adj.items()}, image_key)


def build_graph(dset: DetectionSet, factor: float = REFERENCE_EXPANSION) -> SubstructureGraph:
    """Link every pair of instances whose expanded boxes intersect."""
    nodes = tuple((inst.instance_id, inst.class_id) for inst in dset.instances)
    if len(nodes) < 2:
        return graph_from_edges(nodes, (), dset.image_key)
    margin = expansion_margin(dset, factor)
    coords = np.array([inst.box.as_list() for inst in dset.instances], dtype=np.float64)
    lo_x, lo_y = coords[:, 0] - margin, coords[:, 1] - margin
    hi_x, hi_y = coords[:, 2] + margin, coords[:, 3] + margin
    nonempty = (lo_x <= hi_x) & (lo_y <= hi_y)
    hit = (
        (lo_x[:, None] <= hi_x[None, :])
        & (lo_x[None, :] <= hi_x[:, None])
        & (lo_y[:, None] <= hi_y[None, :])
        & (lo_y[None, :] <= hi_y[:, None])
        & nonempty[:, None]
        & nonempty[None, :]
    )
    rows, cols = np.nonzero(np.triu(hit, k=1))
    ids = [i for i, _ in nodes]
    return graph_from_edges(nodes, ((ids[r], ids[c]) for r, c in zip(rows, cols)), dset.image_key)


def _bfs_hops(g: SubstructureGraph, source: int, max_hops: int | None = None) -> dict[int, int]:
    hops = {source: 0}
    frontier = [source]
    level = 0
    while frontier and (max_hops is None or level < max_hops):
        level += 1
        nxt = []
        for v in frontier:
            for w in g.neighbors(v):
                if w not in hops:
                    hops[w] = level
                    nxt.append(w)
        frontier = nxt
    return hops


def instance_distance(g: SubstructureGraph, a: int, b: int) -> int | None:
    """Intermediate-instance count on a shortest path from ``a`` to ``b``.

    Returns ``None`` when ``b`` is unreachable from ``a``.
    """
    known = g.class_of
    for x in (a, b):
        if x not in known:
            raise KeyError(f"instance {x} not in graph")
    if a == b:
        raise ValueError("distance is undefined for an instance and itself")
    hops = _bfs_hops(g, a).get(b)
    return None if hops is None else hops - 1


@dataclass(frozen=True)
class DistanceTable:
    cap: int
    pairs: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def get(self, a: int, b: int) -> int | None:
        """Stored distance for the unordered pair, or ``None`` if beyond cap / unreachable."""
        return self.pairs.get((a, b) if a < b else (b, a))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs.items())


def all_pairs_distances_capped(g: SubstructureGraph, cap: int = REFERENCE_CAP) -> DistanceTable:
    """Distances ``<= cap`` for every unordered instance pair.

    Each BFS stops after ``cap + 1`` edges, which is the longest path whose
    distance can still be stored.
    """
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    pairs: dict[tuple[int, int], int] = {}
    for a, _ in g.nodes:
        for b, hops in _bfs_hops(g, a, cap + 1).items():
            if a < b:
                pairs[(a, b)] = hops - 1
    return DistanceTable(cap, pairs)
