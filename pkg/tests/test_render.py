from conftest import star_with_gadgets
from crossrl.geometry import Drawing, build_index
from crossrl.graph import Graph
from crossrl.render import render_svg


def test_triangle_elements():
    d = Drawing(Graph.from_edges(3, [(0, 1), (1, 2), (2, 0)]), [[0, 0], [1, 0], [0, 1]])
    svg = render_svg(d)
    assert svg.count("<line") == 3 and svg.count("<circle") == 3
    assert "hot" not in svg


def test_max_crossing_edge_highlighted():
    d = star_with_gadgets([90, 200], [4, 1])
    assert build_index(d).lcr == 4
    svg = render_svg(d, {"algo": "kk"})
    hot = [ln for ln in svg.splitlines() if 'class="edge hot"' in ln]
    assert len(hot) == 1
    assert "LCN: 4" in svg and "algo: kk" in svg


def test_render_deterministic():
    d = star_with_gadgets([10, 100, 250], [2, 1, 3])
    assert render_svg(d, {"t": 1.5}) == render_svg(d, {"t": 1.5})
