import csv

import numpy as np
import pytest

from crossrl.agent import Policy, PPOConfig
from crossrl.env import EnvConfig
from crossrl.geometry import build_index
from crossrl.graph import Graph, generate_rome_like
from crossrl.layouts import layout_kamada_kawai
from crossrl.training import (LOG_COLUMNS, CurriculumSampler, StochasticPolicy, optimize_drawing, train,
                              uniform_policy)

SMALL = dict(total_steps=512, n_envs=4, n_steps=32, batch_size=64, epochs=2)


@pytest.fixture(scope="module")
def graphs():
    return [generate_rome_like(20, s) for s in range(4)]


def test_curriculum_phase_three_frequency():
    cfg = PPOConfig()
    rome = [Graph.from_edges(2, [(0, 1)], "r")]
    ba = [Graph.from_edges(2, [(0, 1)], "b")]
    s = CurriculumSampler(rome, ba, cfg, np.random.default_rng(0))
    hits = sum(s(0.8)[1] == "ba" for _ in range(10_000))
    assert abs(hits / 10_000 - 0.9) <= 0.02
    assert all(s(0.1)[1] == "rome" for _ in range(200))


def test_curriculum_falls_back_to_available_class():
    cfg = PPOConfig()
    only_ba = CurriculumSampler([], [Graph.from_edges(2, [(0, 1)])], cfg, np.random.default_rng(0))
    assert only_ba(0.0)[1] == "ba"
    with pytest.raises(ValueError):
        CurriculumSampler([], [], cfg, np.random.default_rng(0))


def test_short_training_run(tmp_path, graphs):
    cfg = PPOConfig(**SMALL, seed=1)
    res = train(cfg, graphs, objective="lc", log_path=tmp_path / "log.csv", checkpoint_path=tmp_path / "m.ckpt")
    rows = list(csv.DictReader(open(tmp_path / "log.csv")))
    assert len(rows) == len(res.log) == 4
    assert tuple(rows[0]) == LOG_COLUMNS
    assert int(rows[-1]["step"]) == 512
    pol, header = Policy.load(tmp_path / "m.ckpt")
    assert header["config"]["objective"] == "lc"
    assert header["metrics"]["step"] == 512
    np.testing.assert_array_equal(pol.flat(), res.policy.flat())


def test_training_deterministic(graphs):
    a = train(PPOConfig(**SMALL, seed=3), graphs).policy.flat()
    b = train(PPOConfig(**SMALL, seed=3), graphs).policy.flat()
    np.testing.assert_array_equal(a, b)


def test_resume_reproduces_evaluation(tmp_path, graphs):
    res = train(PPOConfig(**SMALL, seed=2), graphs, checkpoint_path=tmp_path / "m.ckpt")
    loaded = Policy.load(tmp_path / "m.ckpt")[0]
    g = graphs[0]
    a = optimize_drawing(g, StochasticPolicy(res.policy), "gc", seed=5)[1]
    b = optimize_drawing(g, StochasticPolicy(loaded), "gc", seed=5)[1]
    assert (a["gcn"], a["lcn"], a["steps"]) == (b["gcn"], b["lcn"], b["steps"])


def test_training_needs_crossings():
    cycle = Graph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)])
    with pytest.raises(RuntimeError):
        train(PPOConfig(**SMALL), [cycle])


@pytest.mark.parametrize("objective", ["gc", "lc"])
def test_optimize_drawing_monotone(objective):
    g = generate_rome_like(40, 8)
    init = layout_kamada_kawai(g, seed=0)
    i0 = build_index(init)
    d, metrics = optimize_drawing(g, uniform_policy, objective, seed=0, initial=init,
                                  env_config=EnvConfig(objective, step_cap=300))
    assert set(metrics) == {"gcn", "lcn", "steps", "runtime"}
    if objective == "gc":
        assert metrics["gcn"] <= i0.total
    else:
        assert metrics["lcn"] <= i0.lcr


def test_optimize_planar_graph_stops_early():
    g = Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
    d, metrics = optimize_drawing(g, uniform_policy, "gc", seed=0)
    assert metrics["gcn"] == 0 and metrics["steps"] == 0
