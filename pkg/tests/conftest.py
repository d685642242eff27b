import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from crossrl.geometry import Drawing
from crossrl.graph import Graph

settings.register_profile("ci", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def random_graph(n: int, m: int, rng: np.random.Generator) -> Graph:
    pairs = list(itertools.combinations(range(n), 2))
    m = min(m, len(pairs))
    pick = rng.choice(len(pairs), size=m, replace=False)
    return Graph.from_edges(n, [pairs[i] for i in pick])


def random_drawing(n: int, m: int, seed: int) -> Drawing:
    rng = np.random.default_rng(seed)
    g = random_graph(n, m, rng)
    return Drawing(g, rng.uniform(-5, 5, size=(n, 2)), seed=seed).ensure_general_position()


def brute_force_crossings(d: Drawing) -> np.ndarray:
    """Per-edge crossing counts by direct pairwise segment tests."""
    from crossrl.geometry import segments_cross

    e = d.graph.edges
    p = d.positions
    counts = np.zeros(len(e), dtype=int)
    for i, j in itertools.combinations(range(len(e)), 2):
        (a, b), (c, dd) = e[i], e[j]
        if {a, b} & {c, dd}:
            continue
        if segments_cross(p[a], p[b], p[c], p[dd]):
            counts[i] += 1
            counts[j] += 1
    return counts


def convex_drawing(g: Graph, radius: float = 1.0) -> Drawing:
    ang = np.pi / 2 - 2 * np.pi * np.arange(g.n) / g.n
    return Drawing(g, radius * np.c_[np.cos(ang), np.sin(ang)])


@pytest.fixture
def k4_square() -> Drawing:
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)])
    return Drawing(g, [[0, 0], [1, 0], [1, 1], [0, 1]])


def star_with_gadgets(bearings, crossings, radius=2.0, half=0.04) -> Drawing:
    """Vertex 0 at the origin with one neighbor per compass bearing.

    Edge i is crossed by ``crossings[i]`` short perpendicular edges placed
    at distinct distances along it, so every crossing lands on that edge.
    """
    pos = [np.zeros(2)]
    edges = []
    gadgets = []
    for i, (b, k) in enumerate(zip(bearings, crossings)):
        r = radius * (1.0 + 0.05 * i)
        u = np.array([np.sin(np.radians(b)), np.cos(np.radians(b))])
        pos.append(r * u)
        edges.append((0, len(pos) - 1))
        perp = np.array([-u[1], u[0]])
        for j in range(k):
            c = (0.35 + 0.13 * j) * r * u
            gadgets.append((c - half * perp, c + half * perp))
    for a, b in gadgets:
        pos += [a, b]
        edges.append((len(pos) - 2, len(pos) - 1))
    g = Graph.from_edges(len(pos), edges)
    return Drawing(g, np.array(pos)).ensure_general_position()


# octant I..VIII neighbors 1,2,0,0,2,1,0,4 with crossings 1,2,0,0,1,3,0,10
STAR_BEARINGS = [20, 60, 75, 200, 215, 240, 320, 330, 340, 350]
STAR_CROSSINGS = [1, 2, 0, 1, 0, 3, 4, 3, 2, 1]


@pytest.fixture
def star_drawing() -> Drawing:
    return star_with_gadgets(STAR_BEARINGS, STAR_CROSSINGS)


def symmetric_copy(d: Drawing, v: int, turns: int, mirror: bool) -> tuple[Drawing, np.ndarray]:
    """Rotate by ``45 * turns`` degrees clockwise about v, after an optional left-right flip."""
    th = -math.radians(45 * turns)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    flip = np.diag([-1.0, 1.0]) if mirror else np.eye(2)
    s = rot @ flip
    pos = d.positions[v] + (d.positions - d.positions[v]) @ s.T
    return Drawing(d.graph, pos), s


# -- acceptance report ------------------------------------------------------

_acceptance: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        name = report.nodeid.split("::")[-1].removeprefix("test_")
        _acceptance.append(("PASS" if report.outcome == "passed" else "FAIL", name, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _acceptance:
        terminalreporter.write_line(f"{status}  {name}" + (f"  ({detail})" if detail else ""))
