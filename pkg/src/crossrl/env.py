"""Episodic environment in which one agent moves one vertex at a time.

Conventions used throughout:

* bearings are measured clockwise from north, in degrees;
* octant ``k`` (0-based, octant I is 0) covers bearings ``(45k, 45(k+1)]``,
  so every boundary ray belongs to the clockwise predecessor octant;
* action ``a`` moves toward bearing ``22.5 * a`` in the normalized frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .embedding import structural_embedding
from .geometry import CrossingIndex, Drawing, build_index, first_ray_hit, move_vertex
from .graph import Graph

N_ACTIONS = 16
OBS_DIM = 54
OCTANT_BLOCKS = ("neighbors", "vertices", "closest_neighbor", "closest_vertex", "crossings", "local_cr")
CROSS_ROW = 4


def octants(center, points) -> np.ndarray:
    """Octant index 0..7 of each point as seen from ``center``."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2) - np.asarray(center, dtype=np.float64)
    dx, dy = p[:, 0], p[:, 1]
    ax, ay = np.abs(dx), np.abs(dy)
    conds = [
        (dx > 0) & (dy > 0) & (ax <= ay),
        (dx > 0) & (dy >= 0) & (ay < ax),
        (dx > 0) & (dy < 0) & (ay <= ax),
        (dx >= 0) & (dy < 0) & (ax < ay),
        (dx < 0) & (dy < 0) & (ax <= ay),
        (dx < 0) & (dy <= 0) & (ay < ax),
        (dx < 0) & (dy > 0) & (ay <= ax),
        (dx <= 0) & (dy > 0) & (ax < ay),
    ]
    out = np.select(conds, range(8), default=-1)
    if (out < 0).any():
        raise ValueError("point coincides with the center")
    return out


def octant_of(v_pos, other) -> int:
    return int(octants(v_pos, [other])[0])


def bearing_to_angle(bearing_deg: float) -> float:
    """Compass bearing (clockwise from north) to a math angle in radians."""
    return math.radians(90.0 - bearing_deg)


@dataclass(frozen=True)
class FrameTransform:
    """Dihedral relabeling of octants: normalized octant i shows world octant ``source(i)``."""

    rotation: int = 0
    mirrored: bool = False

    def source(self, i: int) -> int:
        return (self.rotation - i) % 8 if self.mirrored else (self.rotation + i) % 8

    @property
    def permutation(self) -> np.ndarray:
        return np.array([self.source(i) for i in range(8)])

    def apply(self, blocks: np.ndarray) -> np.ndarray:
        return blocks[..., self.permutation]

    def action_to_world(self, a: int) -> int:
        return (2 * self.rotation + 2 - a) % 16 if self.mirrored else (a + 2 * self.rotation) % 16

    def action_from_world(self, w: int) -> int:
        return (2 * self.rotation + 2 - w) % 16 if self.mirrored else (w - 2 * self.rotation) % 16


ALL_TRANSFORMS = tuple(FrameTransform(r, mir) for mir in (False, True) for r in range(8))


def normalize_frame(blocks: np.ndarray) -> tuple[np.ndarray, FrameTransform]:
    """Rotate/mirror the six octant blocks into the canonical frame.

    The most-crossed octant becomes octant I; among those placements the
    one putting the second-most-crossed octant at the smallest index wins.
    Remaining ties go to the lexicographically largest block sequence
    (crossings, local cr, neighbors, vertices, distances), so the result
    is the same for every drawing in a symmetry orbit. All-equal input
    keeps the identity.
    """
    blocks = np.asarray(blocks)
    cross = blocks[CROSS_ROW]
    top = cross.max()
    second = np.sort(cross)[-2]
    order = [CROSS_ROW, 5, 0, 1, 2, 3]
    best = None
    for t in ALL_TRANSFORMS:
        c = cross[t.permutation]
        if c[0] != top:
            continue
        pos = int(np.flatnonzero(c[1:] == second)[0]) + 1
        key = (-pos, tuple(t.apply(blocks)[order].ravel().tolist()))
        if best is None or key > best[0]:
            best = (key, t)
    t = best[1]
    return t.apply(blocks), t


@dataclass
class EnvConfig:
    objective: str = "gc"
    step_cap: int = 2000
    patience: int = 400
    eps_low: float = 0.01
    eps_high: float = 0.1
    unit_step: float = 1.0

    def __post_init__(self) -> None:
        if self.objective not in ("gc", "lc"):
            raise ValueError(f"objective must be 'gc' or 'lc', got {self.objective!r}")
        if not 0 <= self.eps_low <= self.eps_high:
            raise ValueError("need 0 <= eps_low <= eps_high")


def reward_gc(cr_before: int, cr_after: int) -> float:
    if cr_before != cr_after:
        return float(cr_before - cr_after)
    return -0.001


def reward_lc(lcr_b: int, lcr_a: int, cr_b: int, cr_a: int, mstar_b: int, mstar_a: int, m: int) -> float:
    if m < 1:
        raise ValueError("m must be positive")
    if lcr_b != lcr_a:
        return 10.0 * (lcr_b - lcr_a) + (cr_b - cr_a) / m
    if mstar_b != mstar_a or cr_b != cr_a:
        return 0.1 * (mstar_b - mstar_a) + (cr_b - cr_a) / m
    return -0.001


def weights_gc(g: Graph, idx: CrossingIndex) -> np.ndarray:
    """Per-vertex sum of incident edge crossings divided by degree."""
    w = np.zeros(g.n)
    e = g.edge_array
    np.add.at(w, e[:, 0], idx.per_edge)
    np.add.at(w, e[:, 1], idx.per_edge)
    deg = g.degrees
    return np.divide(w, deg, out=np.zeros_like(w), where=deg > 0)


def eligible_lc(g: Graph, idx: CrossingIndex) -> np.ndarray:
    """Vertices touching an edge with lcr crossings or an edge crossing one."""
    k = idx.lcr
    hot = idx.per_edge == k
    hot |= idx.matrix[:, hot].any(axis=1)
    mask = np.zeros(g.n, dtype=bool)
    mask[g.edge_array[hot].ravel()] = True
    return mask


def weights_lc(g: Graph, idx: CrossingIndex) -> np.ndarray:
    mask = eligible_lc(g, idx)
    return np.where(mask, 1.0 / np.maximum(g.degrees, 1), 0.0)


def _sample(weights: np.ndarray, rng: np.random.Generator) -> int:
    total = weights.sum()
    cdf = np.cumsum(weights)
    i = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    i = min(i, len(weights) - 1)
    while weights[i] <= 0:
        i -= 1
    return i


def select_vertex_gc(g: Graph, idx: CrossingIndex, rng: np.random.Generator) -> int:
    if idx.total == 0:
        raise ValueError("drawing has no crossings")
    return _sample(weights_gc(g, idx), rng)


def select_vertex_lc(g: Graph, idx: CrossingIndex, rng: np.random.Generator) -> int:
    if idx.lcr == 0:
        raise ValueError("drawing has no crossings")
    return _sample(weights_lc(g, idx), rng)


def octant_stats(d: Drawing, idx: CrossingIndex, v: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw world-frame statistics around ``v``.

    Returns a (6, 8) block array of raw values (counts, distances, crossing
    counts, per-octant local crossing numbers) and the per-vertex octant of
    v's neighbors for reuse.
    """
    g = d.graph
    pos = d.positions
    others = np.delete(np.arange(g.n), v)
    blocks = np.zeros((6, 8))
    if not len(others):
        return blocks, np.zeros(0, dtype=np.int64)
    oct_all = np.full(g.n, -1)
    oct_all[others] = octants(pos[v], pos[others])
    dist = np.hypot(*(pos - pos[v]).T)
    blocks[1] = np.bincount(oct_all[others], minlength=8)
    for k in range(8):
        sel = oct_all == k
        if sel.any():
            blocks[3, k] = dist[sel].min()
    inc = g.incident_edges[v]
    if len(inc):
        nb = g.edge_array[inc].sum(axis=1) - v
        nb_oct = oct_all[nb]
        blocks[0] = np.bincount(nb_oct, minlength=8)
        cr = idx.per_edge[inc]
        blocks[4] = np.bincount(nb_oct, weights=cr, minlength=8)
        for k in range(8):
            sel = nb_oct == k
            if sel.any():
                blocks[2, k] = dist[nb[sel]].min()
                blocks[5, k] = cr[sel].max()
    else:
        nb_oct = np.zeros(0, dtype=np.int64)
    return blocks, nb_oct


def normalized_blocks(d: Drawing, idx: CrossingIndex, v: int) -> np.ndarray:
    """Octant blocks scaled into the ranges the observation uses, still in world frame."""
    g = d.graph
    raw, _ = octant_stats(d, idx, v)
    out = np.zeros_like(raw)
    deg = g.degrees[v]
    if deg:
        out[0] = raw[0] / deg
    out[1] = raw[1] / g.n
    far = np.hypot(*(d.positions - d.positions[v]).T).max()
    if far > 0:
        out[2] = raw[2] / far
        out[3] = raw[3] / far
    top = raw[4].max()
    if top > 0:
        out[4] = raw[4] / top
    out[5] = raw[5] / max(idx.lcr, 1)
    return out


def global_entries(g: Graph, idx: CrossingIndex) -> np.ndarray:
    m = g.m
    pairs = m * (m - 1) / 2
    return np.array([idx.total / pairs if pairs else 0.0, idx.lcr / (m - 1) if m > 1 else 0.0])


def build_observation(d: Drawing, idx: CrossingIndex, v: int, embedding: np.ndarray | None = None):
    """54-entry float32 observation for vertex v and the frame used to produce it."""
    blocks = normalized_blocks(d, idx, v).astype(np.float32)
    blocks, t = normalize_frame(blocks)
    if embedding is None:
        embedding = structural_embedding(d.graph).features
    obs = np.concatenate([blocks.ravel(), global_entries(d.graph, idx), embedding[v]]).astype(np.float32)
    return obs, t


def displacement(d: Drawing, v: int, world_action: int, eps: float, unit_step: float = 1.0) -> np.ndarray:
    """Vector by which v moves for a world-frame action index."""
    ang = bearing_to_angle(22.5 * world_action)
    direction = np.array([math.cos(ang), math.sin(ang)])
    t = first_ray_hit(d, v, ang)
    dist = unit_step if t is None else t * (1.0 + eps)
    return dist * direction


def apply_action(d: Drawing, idx: CrossingIndex, v: int, action: int, transform: FrameTransform,
                 rng: np.random.Generator, cfg: EnvConfig | None = None) -> np.ndarray:
    """Move v for a normalized-frame action; returns the displacement applied."""
    cfg = cfg or EnvConfig()
    eps = rng.uniform(cfg.eps_low, cfg.eps_high)
    step = displacement(d, v, transform.action_to_world(int(action)), eps, cfg.unit_step)
    move_vertex(d, idx, v, d.positions[v] + step)
    return step


def objective_key(idx: CrossingIndex, objective: str) -> tuple[int, ...]:
    """Value minimized by an episode; LC breaks lcr ties by total crossings."""
    return (idx.total,) if objective == "gc" else (idx.lcr, idx.total)


@dataclass
class EpisodeState:
    drawing: Drawing
    index: CrossingIndex
    best_positions: np.ndarray
    best_key: tuple[int, ...]
    initial_key: tuple[int, ...]
    steps_since_improvement: int = 0
    total_steps: int = 0
    resets: int = 0
    best_history: list = field(default_factory=list)


class CrossingEnv:
    """Gym-style environment over one graph drawing.

    ``reset`` returns the first observation; ``step(action)`` returns
    ``(obs, reward, terminated, truncated, info)``. The vertex the agent
    acts on is chosen by the environment before each observation.
    """

    def __init__(self, graph: Graph, config: EnvConfig | None = None, seed: int = 0,
                 initial: Drawing | None = None):
        self.graph = graph
        self.config = config or EnvConfig()
        self.seed = seed
        self.initial = initial
        self.rng = np.random.default_rng(seed)
        self.embedding = structural_embedding(graph).features
        self.state: EpisodeState | None = None
        self.vertex = -1
        self.transform = FrameTransform()

    def _initial_drawing(self) -> Drawing:
        if self.initial is not None:
            return self.initial.copy()
        from .layouts import layout_kamada_kawai

        return layout_kamada_kawai(self.graph, seed=self.seed)

    def reset(self, initial: Drawing | None = None) -> np.ndarray:
        if initial is not None:
            self.initial = initial
        d = self._initial_drawing()
        idx = build_index(d)
        key = objective_key(idx, self.config.objective)
        self.state = EpisodeState(d, idx, d.positions.copy(), key, key)
        self.state.best_history.append(key)
        return self._observe()

    def objective_value(self) -> int:
        return objective_key(self.state.index, self.config.objective)[0]

    def _observe(self) -> np.ndarray:
        s = self.state
        if self.objective_value() == 0:
            self.vertex = -1
            return np.zeros(OBS_DIM, dtype=np.float32)
        if self.config.objective == "gc":
            self.vertex = select_vertex_gc(self.graph, s.index, self.rng)
        else:
            self.vertex = select_vertex_lc(self.graph, s.index, self.rng)
        obs, self.transform = build_observation(s.drawing, s.index, self.vertex, self.embedding)
        return obs

    def step(self, action: int):
        s = self.state
        if self.vertex < 0:
            raise RuntimeError("episode is over; call reset()")
        idx = s.index
        cr_b, lcr_b, ms_b = idx.total, idx.lcr, idx.mstar
        apply_action(s.drawing, idx, self.vertex, action, self.transform, self.rng, self.config)
        if self.config.objective == "gc":
            reward = reward_gc(cr_b, idx.total)
        else:
            reward = reward_lc(lcr_b, idx.lcr, cr_b, idx.total, ms_b, idx.mstar, self.graph.m)
        s.total_steps += 1
        key = objective_key(idx, self.config.objective)
        if key < s.best_key:
            s.best_key = key
            s.best_positions = s.drawing.positions.copy()
            s.steps_since_improvement = 0
        else:
            s.steps_since_improvement += 1
        s.best_history.append(s.best_key)
        reset_to_best = False
        if s.steps_since_improvement >= self.config.patience:
            s.drawing.positions[:] = s.best_positions
            s.index = build_index(s.drawing)
            s.steps_since_improvement = 0
            s.resets += 1
            reset_to_best = True
        terminated = key[0] == 0
        truncated = not terminated and s.total_steps >= self.config.step_cap
        obs = np.zeros(OBS_DIM, dtype=np.float32) if (terminated or truncated) else self._observe()
        if terminated or truncated:
            self.vertex = -1
        info = {"cr": s.index.total, "lcr": s.index.lcr, "best": s.best_key, "reset_to_best": reset_to_best}
        return obs, reward, terminated, truncated, info

    def best_drawing(self) -> Drawing:
        d = self.state.drawing.copy()
        d.positions[:] = self.state.best_positions
        return d


def run_episode(env: CrossingEnv, policy, rng: np.random.Generator | None = None,
                deadline=None) -> Drawing:
    """Roll out ``policy(obs, rng) -> action`` until the episode ends; return the best drawing."""
    rng = rng or np.random.default_rng(env.seed)
    obs = env.reset()
    if env.vertex < 0:
        return env.best_drawing()
    while True:
        obs, _, terminated, truncated, _ = env.step(policy(obs, rng))
        if terminated or truncated or (deadline is not None and deadline()):
            break
    return env.best_drawing()
