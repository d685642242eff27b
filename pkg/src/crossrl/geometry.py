"""Straight-line drawings and crossing bookkeeping.

Crossings are kept in a dense boolean edge-by-edge matrix. Moving one
vertex only retests the rows of its incident edges, which keeps every RL
step at O(deg(v) * m) instead of O(m^2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph

ORIENT_EPS = 1e-12
DEGENERACY_TOL = 1e-9
PERTURB_SCALE = 1e-6
RAY_MIN_T = 1e-9


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_cross(p1, p2, q1, q2) -> bool:
    """True iff the segments p1p2 and q1q2 cross at one interior point.

    Touching, shared endpoints and collinear overlap all count as no crossing.
    """
    d1 = _orient(*p1, *p2, *q1)
    d2 = _orient(*p1, *p2, *q2)
    d3 = _orient(*q1, *q2, *p1)
    d4 = _orient(*q1, *q2, *p2)
    return bool(
        ((d1 > ORIENT_EPS and d2 < -ORIENT_EPS) or (d1 < -ORIENT_EPS and d2 > ORIENT_EPS))
        and ((d3 > ORIENT_EPS and d4 < -ORIENT_EPS) or (d3 < -ORIENT_EPS and d4 > ORIENT_EPS))
    )


def _cross_block(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Vectorized strict crossing test of segments ``a[i]b[i]`` against ``c[j]d[j]``.

    Arrays are (k, 2) and (m, 2); returns a (k, m) boolean matrix. Computes the
    same four orientation values as :func:`segments_cross`, so the result is
    exactly symmetric in swapping the two segment sets.
    """
    ax, ay = a[:, 0:1], a[:, 1:2]
    bx, by = b[:, 0:1], b[:, 1:2]
    cx, cy = c[None, :, 0], c[None, :, 1]
    dx, dy = d[None, :, 0], d[None, :, 1]
    d1 = _orient(ax, ay, bx, by, cx, cy)
    d2 = _orient(ax, ay, bx, by, dx, dy)
    d3 = _orient(cx, cy, dx, dy, ax, ay)
    d4 = _orient(cx, cy, dx, dy, bx, by)
    s1 = ((d1 > ORIENT_EPS) & (d2 < -ORIENT_EPS)) | ((d1 < -ORIENT_EPS) & (d2 > ORIENT_EPS))
    s2 = ((d3 > ORIENT_EPS) & (d4 < -ORIENT_EPS)) | ((d3 < -ORIENT_EPS) & (d4 > ORIENT_EPS))
    return s1 & s2


def _point_segment_dist(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from points ``p`` (k, 2) to segments ``a``-``b`` (m, 2), shape (k, m)."""
    ab = b - a
    ap = p[:, None, :] - a[None, :, :]
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("kmj,mj->km", ap, ab) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * ab[None, :, :]
    return np.hypot(*(p[:, None, :] - closest).transpose(2, 0, 1))


class Drawing:
    """Straight-line drawing: one 2D position per vertex of ``graph``.

    Holds its own RNG for the degeneracy perturbation so that a drawing
    evolves deterministically given its seed.
    """

    def __init__(self, graph: Graph, positions, seed: int = 0):
        pos = np.array(positions, dtype=np.float64).reshape(graph.n, 2)
        if not np.isfinite(pos).all():
            raise ValueError("positions must be finite")
        self.graph = graph
        self.positions = pos
        self.rng = np.random.default_rng(seed)

    def copy(self) -> "Drawing":
        d = Drawing.__new__(Drawing)
        d.graph = self.graph
        d.positions = self.positions.copy()
        d.rng = np.random.default_rng()
        d.rng.bit_generator.state = self.rng.bit_generator.state
        return d

    def segment_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        e = self.graph.edge_array
        return self.positions[e[:, 0]], self.positions[e[:, 1]]

    def edge_lengths(self) -> np.ndarray:
        a, b = self.segment_endpoints()
        return np.hypot(*(b - a).T)

    def normalize_scale(self) -> "Drawing":
        """Center and rescale in place so the mean edge length is 1."""
        self.positions -= self.positions.mean(axis=0)
        if self.graph.m:
            mean = self.edge_lengths().mean()
            if mean > 0:
                self.positions /= mean
        return self

    def is_degenerate_at(self, v: int, p=None) -> bool:
        """Whether vertex ``v`` (at ``p`` if given) violates general position.

        Checks v against other vertices and non-incident segments, and every
        other vertex against the segments incident to v.
        """
        g = self.graph
        pos = self.positions if p is None else self._with(v, p)
        pv = pos[v]
        gap = np.hypot(*(pos - pv).T)
        gap[v] = np.inf
        if gap.min() < DEGENERACY_TOL:
            return True
        if not g.m:
            return False
        e = g.edge_array
        inc = g.incident_edges[v]
        dist = _point_segment_dist(pv[None, :], pos[e[:, 0]], pos[e[:, 1]])[0]
        dist[inc] = np.inf
        if dist.min() < DEGENERACY_TOL:
            return True
        if len(inc):
            nb = e[inc].sum(axis=1) - v
            far = np.ones(g.n, dtype=bool)
            far[v] = False
            far[nb] = False
            if far.any():
                a = np.repeat(pv[None, :], len(inc), axis=0)
                if _point_segment_dist(pos[far], a, pos[nb]).min() < DEGENERACY_TOL:
                    return True
        return False

    def _with(self, v: int, p) -> np.ndarray:
        pos = self.positions.copy()
        pos[v] = p
        return pos

    def general_position_point(self, v: int, p) -> np.ndarray:
        """Return ``p`` or a slightly perturbed copy that keeps general position."""
        p = np.asarray(p, dtype=np.float64)
        base = p.copy()
        for attempt in range(80):
            if not self.is_degenerate_at(v, p):
                return p
            # escalate when nearby vertices are packed tighter than the jitter
            p = base + self.rng.normal(size=2) * PERTURB_SCALE * 10.0 ** (attempt // 10)
        raise RuntimeError(f"could not place vertex {v} in general position")

    def ensure_general_position(self) -> "Drawing":
        for v in range(self.graph.n):
            self.positions[v] = self.general_position_point(v, self.positions[v])
        return self

    def to_json(self) -> str:
        return json.dumps({str(v): [float(x), float(y)] for v, (x, y) in enumerate(self.positions)})

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, graph: Graph, text: str, seed: int = 0) -> "Drawing":
        data = json.loads(text)
        pos = np.zeros((graph.n, 2))
        for k, xy in data.items():
            pos[int(k)] = xy
        if len(data) != graph.n:
            raise ValueError(f"drawing has {len(data)} vertices, graph has {graph.n}")
        return cls(graph, pos, seed)

    @classmethod
    def load(cls, graph: Graph, path: str | Path, seed: int = 0) -> "Drawing":
        return cls.from_json(graph, Path(path).read_text(encoding="utf-8"), seed)


@dataclass
class CrossingIndex:
    """Pairwise crossing matrix plus per-edge counts and the global total."""

    matrix: np.ndarray
    per_edge: np.ndarray
    total: int

    @property
    def lcr(self) -> int:
        return int(self.per_edge.max()) if len(self.per_edge) else 0

    @property
    def mstar(self) -> int:
        """Number of edges carrying exactly lcr crossings (0 for planar drawings)."""
        k = self.lcr
        return int((self.per_edge == k).sum()) if k > 0 else 0

    def partners(self, e: int) -> np.ndarray:
        return np.flatnonzero(self.matrix[e])

    def copy(self) -> "CrossingIndex":
        return CrossingIndex(self.matrix.copy(), self.per_edge.copy(), self.total)

    def same_as(self, other: "CrossingIndex") -> bool:
        return (
            self.total == other.total
            and np.array_equal(self.per_edge, other.per_edge)
            and np.array_equal(self.matrix, other.matrix)
        )


def build_index(d: Drawing) -> CrossingIndex:
    """Exhaustive O(m^2) crossing count."""
    g = d.graph
    a, b = d.segment_endpoints()
    x = _cross_block(a, b, a, b)
    x &= ~g.adjacent_edge_mask
    per_edge = x.sum(axis=1).astype(np.int64)
    return CrossingIndex(x, per_edge, int(per_edge.sum()) // 2)


def local_crossing_number(idx: CrossingIndex) -> int:
    return idx.lcr


def incident_crossings(d: Drawing, v: int, points: np.ndarray) -> np.ndarray:
    """Crossings that v's edges would have with all other edges, for each candidate point.

    ``points`` is (s, 2); returns an (s,) integer array. Used by local search
    to price many candidate positions at once.
    """
    g = d.graph
    inc = g.incident_edges[v]
    if not len(inc):
        return np.zeros(len(points), dtype=np.int64)
    e = g.edge_array
    nb = e[inc].sum(axis=1) - v
    a, b = d.segment_endpoints()
    s, k = len(points), len(inc)
    starts = np.repeat(points, k, axis=0)
    ends = np.tile(d.positions[nb], (s, 1))
    hits = _cross_block(starts, ends, a, b).reshape(s, k, g.m)
    hits &= ~g.adjacent_edge_mask[inc][None, :, :]
    return hits.reshape(s, -1).sum(axis=1)


def move_vertex(d: Drawing, idx: CrossingIndex, v: int, new_pos) -> CrossingIndex:
    """Move ``v`` and update ``idx`` in place by retesting only v's edges.

    The target is perturbed first if it would break general position.
    """
    new_pos = np.asarray(new_pos, dtype=np.float64)
    if not np.isfinite(new_pos).all():
        raise ValueError("new position must be finite")
    d.positions[v] = d.general_position_point(v, new_pos)
    g = d.graph
    inc = g.incident_edges[v]
    if not len(inc):
        return idx
    a, b = d.segment_endpoints()
    new = _cross_block(a[inc], b[inc], a, b)
    new &= ~g.adjacent_edge_mask[inc]
    old = idx.matrix[inc]
    delta = new.sum(axis=0).astype(np.int64) - old.sum(axis=0)
    idx.matrix[inc, :] = new
    idx.matrix[:, inc] = new.T
    idx.per_edge += delta
    idx.per_edge[inc] = new.sum(axis=1)
    idx.total += int(delta.sum())
    return idx


def ray_hits(d: Drawing, v: int, angle: float) -> np.ndarray:
    """Ray parameters ``t`` where the ray from v hits each non-incident edge (inf if none)."""
    g = d.graph
    p = d.positions[v]
    r = np.array([math.cos(angle), math.sin(angle)])
    a, b = d.segment_endpoints()
    s = b - a
    denom = r[0] * s[:, 1] - r[1] * s[:, 0]
    ap = a - p
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ap[:, 0] * s[:, 1] - ap[:, 1] * s[:, 0]) / denom
        u = (ap[:, 0] * r[1] - ap[:, 1] * r[0]) / denom
    ok = (np.abs(denom) > ORIENT_EPS) & (t > RAY_MIN_T) & (u >= 0.0) & (u <= 1.0)
    ok[g.incident_edges[v]] = False
    return np.where(ok, t, np.inf)


def first_ray_hit(d: Drawing, v: int, angle: float) -> float | None:
    """Distance along the ray from v at ``angle`` (radians, math convention) to the first edge hit."""
    if not d.graph.m:
        return None
    t = ray_hits(d, v, angle).min()
    return None if math.isinf(t) else float(t)
