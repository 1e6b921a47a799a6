"""Undirected graph container, reference-graph generators, BFS metrics.

The generators regenerate the three calibration families natively:
random recursive trees, preferential-attachment (scale-free) graphs and
Erdos-Renyi random graphs.  All of them are deterministic per seed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

TREE = "tree"
SCALE_FREE = "scale_free"
RANDOM = "random"
GRAPH_KINDS = (TREE, SCALE_FREE, RANDOM)


@dataclass
class Graph:
    """Simple undirected graph on vertices 0..n-1."""

    n: int
    adj: list[set[int]] = field(default_factory=list)

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError("vertex count must be nonnegative")
        if not self.adj:
            self.adj = [set() for _ in range(self.n)]
        if len(self.adj) != self.n:
            raise ValidationError("adjacency size does not match vertex count")

    def add_edge(self, u: int, v: int):
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValidationError(f"edge ({u}, {v}) out of range for n={self.n}")
        if u == v:
            return
        self.adj[u].add(v)
        self.adj[v].add(u)

    def edges(self):
        for u in range(self.n):
            for v in self.adj[u]:
                if u < v:
                    yield u, v

    def num_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2


def largest_component(g: Graph) -> Graph:
    """The induced subgraph on the largest connected component,
    relabelled 0..m-1 in ascending original order (isolated nodes drop out)."""
    if g.n == 0:
        raise ValidationError("empty graph")
    seen = [False] * g.n
    best: list[int] = []
    for start in range(g.n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in g.adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        if len(comp) > len(best):
            best = comp
    remap = {old: new for new, old in enumerate(sorted(best))}
    out = Graph(len(best))
    for old, new in remap.items():
        for v in g.adj[old]:
            if v in remap:
                out.add_edge(new, remap[v])
    return out


def bfs_distances(g: Graph) -> np.ndarray:
    """All-pairs unweighted shortest-path lengths; -1 marks unreachable."""
    dist = np.full((g.n, g.n), -1, dtype=np.int64)
    for s in range(g.n):
        dist[s, s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            du = dist[s, u]
            for v in g.adj[u]:
                if dist[s, v] < 0:
                    dist[s, v] = du + 1
                    queue.append(v)
    return dist


def random_recursive_tree(size: int, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    g = Graph(size)
    for v in range(1, size):
        g.add_edge(v, int(rng.integers(v)))
    return g


def preferential_attachment(size: int, m: int, seed: int) -> Graph:
    """Scale-free graph: each new vertex attaches to m existing vertices
    chosen with probability proportional to their degree."""
    if not 1 <= m < size:
        raise ValidationError(f"attachment count m={m} must satisfy 1 <= m < size={size}")
    rng = np.random.default_rng(seed)
    g = Graph(size)
    # One slot per unit of degree; the first new vertex links to all seeds.
    repeated: list[int] = []
    targets = list(range(m))
    for v in range(m, size):
        for t in targets:
            g.add_edge(v, t)
        repeated.extend(targets)
        repeated.extend([v] * m)
        chosen: set[int] = set()
        while len(chosen) < m:
            chosen.add(repeated[int(rng.integers(len(repeated)))])
        targets = sorted(chosen)
    return g


def erdos_renyi(size: int, p: float, seed: int) -> Graph:
    if not 0.0 < p <= 1.0:
        raise ValidationError(f"edge probability must lie in (0, 1], got {p}")
    rng = np.random.default_rng(seed)
    g = Graph(size)
    iu, iv = np.triu_indices(size, k=1)
    mask = rng.random(iu.shape[0]) < p
    for u, v in zip(iu[mask], iv[mask]):
        g.add_edge(int(u), int(v))
    return g


def generate_reference_graph(kind: str, size: int, params: dict | None, seed: int) -> Graph:
    """Seeded generator for the calibration families.

    ``tree`` takes no parameters, ``scale_free`` takes ``m`` (edges per
    new vertex, default 2), ``random`` takes ``p`` (edge probability,
    default 0.02).
    """
    if size < 4:
        raise ValidationError("reference graphs need size >= 4")
    params = params or {}
    if kind == TREE:
        return random_recursive_tree(size, seed)
    if kind == SCALE_FREE:
        return preferential_attachment(size, int(params.get("m", 2)), seed)
    if kind == RANDOM:
        return erdos_renyi(size, float(params.get("p", 0.02)), seed)
    raise ValidationError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
