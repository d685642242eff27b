"""Graph representation, loaders, random generators and the filtering pipeline."""

from __future__ import annotations

import random
import warnings
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphFormatError(ValueError):
    """Raised when a graph file cannot be parsed."""


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Edges are stored as ``(u, v)`` with ``u < v``, sorted, without duplicates.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < v < self.n):
                raise ValueError(f"edge ({u}, {v}) not normalized or out of range")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], name: str = "") -> "Graph":
        norm = sorted({(min(u, v), max(u, v)) for u, v in edges})
        return cls(n, tuple(norm), name)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_array(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def incident_edges(self) -> tuple[np.ndarray, ...]:
        """Per vertex, the indices of its incident edges."""
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for i, (u, v) in enumerate(self.edges):
            inc[u].append(i)
            inc[v].append(i)
        return tuple(np.asarray(a, dtype=np.int64) for a in inc)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @cached_property
    def adjacent_edge_mask(self) -> np.ndarray:
        """``mask[i, j]`` is True iff edges i and j share an endpoint (or i == j)."""
        e = self.edge_array
        a, b = e[:, 0], e[:, 1]
        return (
            (a[:, None] == a[None, :])
            | (a[:, None] == b[None, :])
            | (b[:, None] == a[None, :])
            | (b[:, None] == b[None, :])
        )

    def bfs_distances(self, source: int) -> np.ndarray:
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[source] = 0
        queue = deque([source])
        adj = self.adjacency
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs hop distances by n BFS runs; -1 marks unreachable pairs."""
        return np.stack([self.bfs_distances(s) for s in range(self.n)]) if self.n else np.zeros((0, 0), int)

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        return bool((self.bfs_distances(0) >= 0).all())

    def induced_subgraph(self, keep: Sequence[int]) -> "Graph":
        """Subgraph on ``keep`` with ids compacted in the order given."""
        remap = {v: i for i, v in enumerate(keep)}
        edges = [(remap[u], remap[v]) for u, v in self.edges if u in remap and v in remap]
        return Graph.from_edges(len(keep), edges, self.name)

    def relabeled(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        return Graph.from_edges(self.n, [(perm[u], perm[v]) for u, v in self.edges], self.name)


def _compact(pairs: list[tuple[str, str]], declared: Sequence[str] | None, name: str) -> Graph:
    ids: dict[str, int] = {}
    if declared is not None:
        for d in declared:
            ids.setdefault(d, len(ids))
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for a, b in pairs:
        for x in (a, b):
            if x not in ids:
                if declared is not None:
                    raise GraphFormatError(f"edge references undeclared node {x!r}")
                ids[x] = len(ids)
        u, v = ids[a], ids[b]
        if u == v:
            raise GraphFormatError(f"self-loop at node {a!r}")
        key = (min(u, v), max(u, v))
        if key in seen:
            warnings.warn(f"duplicate edge ({a}, {b}) ignored", stacklevel=3)
            continue
        seen.add(key)
        edges.append(key)
    return Graph.from_edges(len(ids), edges, name)


def load_edgelist(path: str | Path) -> Graph:
    """Read a whitespace separated ``u v`` edge list; ``#`` starts a comment line."""
    path = Path(path)
    pairs = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise GraphFormatError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        pairs.append((parts[0], parts[1]))
    return _compact(pairs, None, path.stem)


def load_graphml(path: str | Path) -> Graph:
    """Read node ids and edge endpoints from a GraphML file, ignoring attributes."""
    path = Path(path)
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise GraphFormatError(f"{path}: {exc}") from exc

    def local(tag: str) -> str:
        return tag.rsplit("}", 1)[-1]

    graphs = [el for el in root.iter() if local(el.tag) == "graph"]
    if len(graphs) != 1:
        raise GraphFormatError(f"{path}: expected exactly one <graph>, found {len(graphs)}")
    nodes, pairs = [], []
    for el in graphs[0]:
        tag = local(el.tag)
        if tag == "node":
            nodes.append(el.attrib["id"])
        elif tag == "edge":
            try:
                pairs.append((el.attrib["source"], el.attrib["target"]))
            except KeyError as exc:
                raise GraphFormatError(f"{path}: edge without {exc.args[0]}") from exc
    return _compact(pairs, nodes, path.name.split(".graphml")[0])


def save_edgelist(g: Graph, path: str | Path) -> None:
    lines = [f"# {g.name} n={g.n} m={g.m}"] + [f"{u} {v}" for u, v in g.edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- random generation ------------------------------------------------------


@dataclass(frozen=True)
class BAParams:
    n: int
    m_attach: int
    p: float = 0.0
    q: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m_attach < 1 or self.n < self.m_attach + 1:
            raise ValueError(f"need 1 <= m_attach < n, got m_attach={self.m_attach}, n={self.n}")
        if self.p < 0 or self.q < 0 or self.p + self.q >= 1:
            raise ValueError(f"need p, q >= 0 and p + q < 1, got p={self.p}, q={self.q}")


def generate_extended_ba(params: BAParams) -> Graph:
    """Grow a graph by the extended preferential-attachment process.

    Starts from a clique on ``m_attach + 1`` vertices. Each step, with
    probability ``p`` add ``m_attach`` edges between existing vertices, with
    probability ``q`` rewire ``m_attach`` edges, otherwise attach a new vertex
    with ``m_attach`` edges. Endpoints are chosen with probability
    proportional to ``degree + 1``.
    """
    rng = random.Random(params.seed)
    m = params.m_attach
    k0 = m + 1
    adj: list[set[int]] = [set() for _ in range(k0)]
    for u in range(k0):
        for v in range(u + 1, k0):
            adj[u].add(v)
            adj[v].add(u)

    def pick(exclude: set[int], pool: Sequence[int]) -> int | None:
        cand = [v for v in pool if v not in exclude]
        if not cand:
            return None
        weights = [len(adj[v]) + 1 for v in cand]
        return rng.choices(cand, weights)[0]

    while len(adj) < params.n:
        r = rng.random()
        nv = len(adj)
        if r < params.p:
            # new edges between existing vertices
            for _ in range(m):
                u = rng.randrange(nv)
                v = pick(adj[u] | {u}, range(nv))
                if v is not None:
                    adj[u].add(v)
                    adj[v].add(u)
        elif r < params.p + params.q:
            # rewire: move one endpoint of an existing edge to a preferential target
            for _ in range(m):
                cand = [u for u in range(nv) if 0 < len(adj[u]) < nv - 1]
                if not cand:
                    break
                u = rng.choice(cand)
                old = rng.choice(sorted(adj[u]))
                new = pick(adj[u] | {u}, range(nv))
                if new is None:
                    continue
                adj[u].discard(old)
                adj[old].discard(u)
                adj[u].add(new)
                adj[new].add(u)
        else:
            targets: set[int] = set()
            while len(targets) < m:
                t = pick(targets, range(nv))
                targets.add(t)
            adj.append(set())
            for t in targets:
                adj[nv].add(t)
                adj[t].add(nv)
    edges = [(u, v) for u in range(len(adj)) for v in adj[u] if u < v]
    name = f"ba_n{params.n}_m{m}_p{params.p:.3f}_q{params.q:.3f}_s{params.seed}"
    return Graph.from_edges(len(adj), edges, name)


def generate_rome_like(n: int, seed: int, max_edges: int = 158) -> Graph:
    """Sparse random graph shaped like the Rome collection.

    A random recursive tree on ``n`` vertices plus a number of chords
    between vertices at short hop distance, which keeps the graph sparse
    and mostly locally connected.
    """
    rng = random.Random(seed)
    edges: set[tuple[int, int]] = set()
    for v in range(1, n):
        u = rng.randrange(max(0, v - 8), v) if rng.random() < 0.7 else rng.randrange(v)
        edges.add((u, v))
    extra = rng.randint(max(1, n // 4), max(2, (3 * n) // 5))
    extra = min(extra, max_edges - len(edges))
    tries = 0
    while extra > 0 and tries < 50 * n:
        tries += 1
        u = rng.randrange(n)
        v = rng.randrange(n)
        if u == v:
            continue
        e = (min(u, v), max(u, v))
        if e in edges:
            continue
        edges.add(e)
        extra -= 1
    return Graph.from_edges(n, edges, f"romelike_n{n}_s{seed}")


# -- preprocessing ----------------------------------------------------------


class Rejected(Exception):
    """A graph was filtered out by :func:`preprocess`."""

    REASONS = ("disconnected", "planar", "empty_after_stripping")

    def __init__(self, reason: str):
        if reason not in self.REASONS:
            raise ValueError(reason)
        super().__init__(reason)
        self.reason = reason


def strip_leaves(g: Graph) -> Graph:
    """Remove degree-1 vertices until none are left."""
    deg = [len(a) for a in g.adjacency]
    alive = [True] * g.n
    stack = [v for v in range(g.n) if deg[v] <= 1]
    while stack:
        v = stack.pop()
        if not alive[v]:
            continue
        alive[v] = False
        for w in g.adjacency[v]:
            if alive[w]:
                deg[w] -= 1
                if deg[w] <= 1:
                    stack.append(w)
    return g.induced_subgraph([v for v in range(g.n) if alive[v]])


def looks_planar(g: Graph, budget: int = 3, seed: int = 0) -> bool:
    """Heuristic planarity: True only if a crossing-free drawing was found.

    Graphs beating the Euler bound ``m > 3n - 6`` are nonplanar outright.
    Otherwise a stress layout is refined by sampled vertex movement for
    ``budget`` sweeps. A False answer may be wrong; a True answer never is.
    """
    if g.n >= 3 and g.m > 3 * g.n - 6:
        return False
    if g.m <= 2 or g.n <= 4 and g.m <= 5:
        return True
    from .geometry import build_index
    from .layouts import layout_kamada_kawai, sampled_vertex_movement

    d = layout_kamada_kawai(g, seed=seed)
    idx = build_index(d)
    if idx.total == 0:
        return True
    d = sampled_vertex_movement(d, idx, samples_per_vertex=50, sweeps=budget, seed=seed, stop_at_zero=True)
    return build_index(d).total == 0


def preprocess(g: Graph, initial_layout_budget: int = 3, seed: int = 0) -> Graph:
    """Filter and clean one benchmark graph.

    Raises :class:`Rejected` with the first reason found, checked in the
    order disconnected, empty_after_stripping, planar.
    """
    if not g.is_connected():
        raise Rejected("disconnected")
    core = strip_leaves(g)
    if core.n == 0:
        raise Rejected("empty_after_stripping")
    if looks_planar(core, budget=initial_layout_budget, seed=seed):
        raise Rejected("planar")
    return core


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    test: tuple[str, ...]
    seed: int

    def __post_init__(self) -> None:
        if set(self.train) & set(self.test):
            raise ValueError("train and test overlap")


def split_dataset(ids: Sequence[str], seed: int, *, test_fraction: float = 0.2,
                  n_train: int | None = None, n_test: int | None = None) -> DatasetSplit:
    """Seeded shuffle split.

    With absolute sizes, takes ``n_train`` then ``n_test`` ids from the
    shuffled order. Otherwise the test set gets ``floor(test_fraction * N)``
    ids and the training set the rest (8252 graphs -> 6602 / 1650).
    """
    order = list(ids)
    random.Random(seed).shuffle(order)
    if n_train is not None or n_test is not None:
        a = len(order) if n_train is None else n_train
        b = len(order) - a if n_test is None else n_test
        if a + b > len(order):
            raise ValueError(f"requested {a}+{b} graphs but only {len(order)} available")
        return DatasetSplit(tuple(order[:a]), tuple(order[a:a + b]), seed)
    k = int(np.floor(test_fraction * len(order) + 1e-9))
    return DatasetSplit(tuple(order[k:]), tuple(order[:k]), seed)
