import json

import pytest

from crossrl.datasets import (BA_M, BA_N, ROME_M, ROME_N, in_envelope, iter_ba_graphs, load_split, prepare,
                              read_manifest, rome_like_set)
from crossrl.graph import Graph


def complete(k):
    return Graph.from_edges(k, [(i, j) for i in range(k) for j in range(i + 1, k)])


def test_raw_ba_stream_in_envelope():
    stream = iter_ba_graphs(0)
    for _ in range(100):
        assert in_envelope(next(stream), BA_N, BA_M)


def test_rome_like_set_in_envelope():
    for g in rome_like_set(10, 3):
        assert in_envelope(g, ROME_N, ROME_M)
        assert g.degrees.min() >= 2 and g.is_connected()


def test_prepare_drops_planar(tmp_path):
    nonplanar = [Graph.from_edges(k, complete(k).edges, f"k{k}_{i}") for i, k in enumerate([5, 6, 7, 5, 6, 7, 5, 6])]
    planar = [Graph.from_edges(4, complete(4).edges, "k4"), Graph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)], "c5")]
    summary = prepare(tmp_path, nonplanar + planar, "rome", seed=0)
    assert summary["kept"] == 8 and summary["rejected"] == {"planar": 2}
    assert len(read_manifest(tmp_path / "manifest.json")) == 8
    assert (summary["train"], summary["test"]) == (7, 1)
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert {"path", "split", "class"} <= set(doc["graphs"][0])
    assert len(list((tmp_path / "embeddings").iterdir())) == 8


def test_prepare_split_reproducible(tmp_path):
    graphs = rome_like_set(10, 1)
    prepare(tmp_path / "a", graphs, "rome", seed=5)
    prepare(tmp_path / "b", graphs, "rome", seed=5)
    a = (tmp_path / "a" / "manifest.json").read_text()
    b = (tmp_path / "b" / "manifest.json").read_text()
    assert a == b
    train = load_split(tmp_path / "a" / "manifest.json", "train", "rome")
    assert len(train) == 8 and all(g.m > 0 for g in train)


def test_prepare_empty_after_filter(tmp_path):
    with pytest.raises(ValueError):
        prepare(tmp_path, [complete(4)], "rome", seed=0)
