import re
import warnings
from pathlib import Path

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crossrl.graph import (BAParams, Graph, GraphFormatError, Rejected, generate_extended_ba, generate_rome_like,
                           load_edgelist, load_graphml, looks_planar, preprocess, save_edgelist, split_dataset,
                           strip_leaves)

DATA = Path(__file__).parent / "data"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# -- loaders ----------------------------------------------------------------


def test_edgelist_triangle(tmp_path):
    g = load_edgelist(write(tmp_path, "t.edges", "0 1\n1 2\n2 0"))
    assert (g.n, g.m) == (3, 3)


def test_edgelist_duplicate_warns(tmp_path):
    with pytest.warns(UserWarning, match="duplicate"):
        g = load_edgelist(write(tmp_path, "d.edges", "0 1\n0 1"))
    assert (g.n, g.m) == (2, 1)


def test_edgelist_comments_and_reverse_duplicate(tmp_path):
    with pytest.warns(UserWarning):
        g = load_edgelist(write(tmp_path, "c.edges", "# header\n\n5 7\n7 5\n7 9\n"))
    assert (g.n, g.m) == (3, 2)


@pytest.mark.parametrize("text", ["0 1 2\n", "a b\n", "0\n", "1 1\n"])
def test_edgelist_rejects_malformed(tmp_path, text):
    with pytest.raises(GraphFormatError):
        load_edgelist(write(tmp_path, "bad.edges", text))


def test_graphml_triangle(tmp_path):
    text = """<graphml xmlns="http://graphml.graphdrawing.org/xmlns"><graph edgedefault="undirected">
    <node id="a"/><node id="b"/><node id="c"/>
    <edge source="a" target="b"/><edge source="b" target="c"/><edge source="c" target="a"/>
    </graph></graphml>"""
    g = load_graphml(write(tmp_path, "t.graphml", text))
    assert (g.n, g.m) == (3, 3)


def test_graphml_undeclared_node(tmp_path):
    text = '<graphml><graph><node id="a"/><node id="b"/><edge source="a" target="z"/></graph></graphml>'
    with pytest.raises(GraphFormatError, match="undeclared"):
        load_graphml(write(tmp_path, "u.graphml", text))


def test_graphml_needs_single_graph(tmp_path):
    with pytest.raises(GraphFormatError):
        load_graphml(write(tmp_path, "e.graphml", "<graphml></graphml>"))


def test_rome_style_graphml_matches_line_count_oracle(tmp_path):
    src = DATA / "rome_style_sample.graphml"
    text = src.read_text()
    n_oracle = len(re.findall(r"^\s*<node\b", text, flags=re.M))
    m_oracle = len(re.findall(r"^\s*<edge\b", text, flags=re.M))
    g = load_graphml(src)
    assert (g.n, g.m) == (n_oracle, m_oracle)
    # conversion to an edge list keeps the counts
    out = tmp_path / "conv.edges"
    save_edgelist(g, out)
    edge_lines = [ln for ln in out.read_text().splitlines() if ln and not ln.startswith("#")]
    assert len(edge_lines) == m_oracle
    back = load_edgelist(out)
    assert (back.n, back.m) == (n_oracle, m_oracle)


def test_rome_style_graph_in_envelope():
    g = load_graphml(DATA / "rome_style_sample.graphml")
    assert 10 <= g.n <= 100 and 9 <= g.m <= 158


# -- Graph ------------------------------------------------------------------


def test_graph_validates():
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 0)])
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 2)])


def test_distance_matrix_matches_networkx():
    rng = np.random.default_rng(3)
    for _ in range(5):
        g = generate_rome_like(int(rng.integers(10, 40)), int(rng.integers(1000)))
        ref = dict(nx.all_pairs_shortest_path_length(nx.Graph(list(g.edges))))
        for u in range(g.n):
            for v in range(g.n):
                assert g.distance_matrix[u, v] == ref[u][v]


# -- BA generator -----------------------------------------------------------


def test_ba_m1_is_tree():
    for seed in range(5):
        g = generate_extended_ba(BAParams(n=50, m_attach=1, seed=seed))
        assert g.m == 49 and g.is_connected()


def test_ba_edge_count_m2():
    for seed in range(5):
        assert generate_extended_ba(BAParams(n=100, m_attach=2, seed=seed)).m == 197


def test_ba_extended_in_envelope():
    for seed in range(10):
        g = generate_extended_ba(BAParams(n=150, m_attach=3, p=0.1, q=0.2, seed=seed))
        assert g.n == 150 and 19 <= g.m <= 666


def test_ba_reproducible():
    p = BAParams(n=80, m_attach=2, p=0.05, q=0.1, seed=7)
    assert generate_extended_ba(p).edges == generate_extended_ba(p).edges


def test_ba_heavy_tail():
    hits = 0
    for seed in range(100):
        deg = generate_extended_ba(BAParams(n=150, m_attach=2, seed=seed)).degrees
        hits += deg.max() >= 3 * deg.mean()
    assert hits >= 90


@pytest.mark.parametrize("kw", [dict(n=3, m_attach=3), dict(n=10, m_attach=0), dict(n=10, m_attach=1, p=0.6, q=0.5)])
def test_ba_params_validated(kw):
    with pytest.raises(ValueError):
        BAParams(**kw)


# -- preprocessing ----------------------------------------------------------


def complete(k):
    return Graph.from_edges(k, [(i, j) for i in range(k) for j in range(i + 1, k)])


def test_preprocess_path_is_empty():
    with pytest.raises(Rejected) as err:
        preprocess(Graph.from_edges(5, [(i, i + 1) for i in range(4)]))
    assert err.value.reason == "empty_after_stripping"


def test_preprocess_k5_kept():
    g = complete(5)
    assert preprocess(g).edges == g.edges


def test_preprocess_k4_planar():
    with pytest.raises(Rejected) as err:
        preprocess(complete(4))
    assert err.value.reason == "planar"


def test_preprocess_disconnected_reported_first():
    g = Graph.from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)])
    with pytest.raises(Rejected) as err:
        preprocess(g)
    assert err.value.reason == "disconnected"


def test_strip_leaves_iterates():
    # triangle with a pendant path of length 3
    g = Graph.from_edges(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5)])
    assert strip_leaves(g).n == 3


@given(st.integers(0, 10_000))
def test_preprocess_output_min_degree_two_and_connected(seed):
    g = generate_rome_like(20, seed)
    try:
        core = preprocess(g, seed=seed)
    except Rejected:
        return
    assert core.degrees.min() >= 2 and core.is_connected()


def test_euler_bound_short_circuit():
    for k in (5, 6, 7):
        assert not looks_planar(complete(k))
    g = complete(3)  # dense but small: m <= 3n - 6 does not apply below n = 3
    assert looks_planar(g)


def test_planarity_heuristic_never_claims_planar_wrongly():
    for seed in range(40):
        g = strip_leaves(generate_rome_like(int(12 + seed % 20), seed))
        if g.n == 0 or not g.is_connected():
            continue
        if looks_planar(g, seed=seed):
            assert nx.check_planarity(nx.Graph(list(g.edges)))[0]


# -- splits -----------------------------------------------------------------


def test_split_floor_convention():
    ids = [f"g{i}" for i in range(8252)]
    s = split_dataset(ids, seed=1)
    assert (len(s.train), len(s.test)) == (6602, 1650)
    assert set(s.train) | set(s.test) == set(ids)


def test_split_absolute_and_reproducible():
    ids = [f"g{i}" for i in range(2000)]
    a = split_dataset(ids, seed=4, n_train=1000, n_test=500)
    b = split_dataset(ids, seed=4, n_train=1000, n_test=500)
    assert a == b and (len(a.train), len(a.test)) == (1000, 500)
    with pytest.raises(ValueError):
        split_dataset(ids[:10], seed=0, n_train=8, n_test=5)


def test_no_warnings_on_clean_input(tmp_path):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_edgelist(write(tmp_path, "ok.edges", "0 1\n1 2\n"))
