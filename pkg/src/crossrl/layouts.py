"""Initial and baseline layouts: stress (Kamada-Kawai model), Fruchterman-Reingold, sampled vertex movement."""

from __future__ import annotations

import numpy as np

from .geometry import CrossingIndex, Drawing, build_index, incident_crossings, move_vertex
from .graph import Graph


def stress(positions: np.ndarray, dist: np.ndarray) -> float:
    """Sum over pairs u<v of (|p_u - p_v| - d_uv)^2 / d_uv^2."""
    iu = np.triu_indices(len(positions), 1)
    d = dist[iu].astype(np.float64)
    diff = positions[:, None, :] - positions[None, :, :]
    eu = np.sqrt((diff ** 2).sum(-1))[iu]
    return float((((eu - d) / d) ** 2).sum())


def layout_kamada_kawai(
    g: Graph,
    seed: int = 0,
    *,
    tol: float = 1e-6,
    max_sweeps: int = 500,
    return_trace: bool = False,
):
    """Stress-minimizing layout by majorization (SMACOF with weights 1/d^2).

    Starts from a seeded random placement; every sweep is a guaranteed
    non-increase of stress. Stops when the relative improvement falls
    below ``tol`` or after ``max_sweeps`` sweeps.
    """
    if not g.is_connected():
        raise ValueError("stress layout needs a connected graph")
    n = g.n
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n, 2)) * max(1.0, np.sqrt(n))
    trace = []
    if n >= 2:
        dist = g.distance_matrix.astype(np.float64)
        with np.errstate(divide="ignore"):
            w = np.where(dist > 0, 1.0 / dist ** 2, 0.0)
        lap = -w.copy()
        lap[np.diag_indices(n)] = w.sum(axis=1)
        # lap is singular (constant vector); pin the solution to zero mean
        lap_pinv = np.linalg.pinv(lap)
        wd = w * dist
        s = stress(x, dist)
        trace.append(s)
        for _ in range(max_sweeps):
            diff = x[:, None, :] - x[None, :, :]
            eu = np.sqrt((diff ** 2).sum(-1))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(eu > 1e-12, wd / eu, 0.0)
            b = -ratio
            b[np.diag_indices(n)] = ratio.sum(axis=1)
            x_new = lap_pinv @ (b @ x)
            s_new = stress(x_new, dist)
            if s_new > s:
                break
            x, s_prev, s = x_new, s, s_new
            trace.append(s)
            if s_prev - s <= tol * max(s_prev, 1e-300):
                break
    d = Drawing(g, x, seed=seed).normalize_scale().ensure_general_position()
    return (d, trace) if return_trace else d


def layout_fruchterman_reingold(g: Graph, seed: int = 0, iterations: int = 50) -> Drawing:
    """Spring-electrical layout with linearly cooling temperature."""
    if not g.is_connected():
        raise ValueError("force layout needs a connected graph")
    n = g.n
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, 2))
    k = np.sqrt(1.0 / n)
    e = g.edge_array
    temp = 0.1
    cool = temp / (iterations + 1)
    for _ in range(iterations):
        delta = x[:, None, :] - x[None, :, :]
        dist = np.sqrt((delta ** 2).sum(-1))
        np.clip(dist, 0.01, None, out=dist)
        rep = (k * k / dist ** 2)[..., None] * delta
        rep[np.diag_indices(n)] = 0.0
        disp = rep.sum(axis=1)
        if len(e):
            de = x[e[:, 0]] - x[e[:, 1]]
            le = np.clip(np.sqrt((de ** 2).sum(-1)), 0.01, None)
            att = (le / k)[:, None] * de
            np.add.at(disp, e[:, 0], -att)
            np.add.at(disp, e[:, 1], att)
        length = np.clip(np.sqrt((disp ** 2).sum(-1)), 0.01, None)
        x += disp * (np.minimum(length, temp) / length)[:, None]
        temp -= cool
    return Drawing(g, x, seed=seed).normalize_scale().ensure_general_position()


def sampled_vertex_movement(
    d: Drawing,
    idx: CrossingIndex | None = None,
    samples_per_vertex: int = 100,
    sweeps: int = 2,
    seed: int = 0,
    *,
    stop_at_zero: bool = False,
    deadline=None,
) -> Drawing:
    """Local search moving each vertex to the best of a set of sampled positions.

    Vertices are visited in random order each sweep. Candidates are drawn
    uniformly from the current bounding box; a vertex only moves when a
    candidate strictly lowers the global crossing count. Works on a copy.
    ``deadline`` is an optional zero-argument callable returning True to stop.
    """
    d = d.copy()
    idx = build_index(d) if idx is None else idx.copy()
    rng = np.random.default_rng(seed)
    g = d.graph
    for _ in range(sweeps):
        for v in rng.permutation(g.n):
            if stop_at_zero and idx.total == 0:
                return d
            if deadline is not None and deadline():
                return d
            lo, hi = d.positions.min(axis=0), d.positions.max(axis=0)
            cand = rng.uniform(lo, hi, size=(samples_per_vertex, 2))
            here = incident_crossings(d, v, d.positions[v][None, :])[0]
            costs = incident_crossings(d, v, cand)
            best = int(np.argmin(costs))
            if costs[best] < here:
                old_pos = d.positions[v].copy()
                before = idx.total
                move_vertex(d, idx, v, cand[best])
                if idx.total >= before:
                    # perturbation undid the gain
                    move_vertex(d, idx, v, old_pos)
    return d
