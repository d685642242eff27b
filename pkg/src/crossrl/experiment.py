"""Desk-scale training and evaluation run: train RL(GC) and RL(LC), compare with a random policy."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .agent import Policy, PPOConfig
from .datasets import rome_like_set
from .geometry import build_index
from .layouts import layout_kamada_kawai
from .training import StochasticPolicy, optimize_drawing, train, uniform_policy

log = logging.getLogger(__name__)


def evaluate(policy, graphs, objective: str, seed: int = 0) -> list[dict]:
    """One post-processing episode per graph from its KK layout."""
    rows = []
    for i, g in enumerate(graphs):
        init = layout_kamada_kawai(g, seed=seed)
        idx0 = build_index(init)
        _, metrics = optimize_drawing(g, policy, objective, seed=seed + i, initial=init)
        before = idx0.total if objective == "gc" else idx0.lcr
        after = metrics["gcn"] if objective == "gc" else metrics["lcn"]
        rows.append({"graph": g.name, "n": g.n, "m": g.m, "init_gcn": idx0.total, "init_lcn": idx0.lcr,
                     **metrics, "improved": bool(after < before)})
    return rows


def desk_scale_run(steps: int = 200_000, n_train: int = 20, n_test: int = 20, seed: int = 0,
                   out_dir: str | Path | None = None, cfg: PPOConfig | None = None) -> dict:
    cfg = cfg or PPOConfig()
    cfg = replace(cfg, total_steps=steps, seed=seed)
    graphs = rome_like_set(n_train + n_test, seed)
    train_set, test_set = graphs[:n_train], graphs[n_train:]
    out = Path(out_dir) if out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    report = {"steps": steps, "n_train": n_train, "n_test": n_test, "seed": seed, "objectives": {}}
    for objective in ("gc", "lc"):
        t0 = time.time()
        res = train(cfg, train_set, objective=objective,
                    log_path=out / f"train_{objective}.csv" if out else None,
                    checkpoint_path=out / f"model_{objective}.ckpt" if out else None)
        train_time = time.time() - t0
        trained = evaluate(StochasticPolicy(res.policy), test_set, objective, seed)
        random_rows = evaluate(uniform_policy, test_set, objective, seed)
        k = max(1, len(res.log) // 10)
        first = float(np.mean([r["mean_reward"] for r in res.log[:k]]))
        last = float(np.mean([r["mean_reward"] for r in res.log[-k:]]))
        report["objectives"][objective] = {
            "train_seconds": train_time,
            "reward_first_10pct": first,
            "reward_last_10pct": last,
            "trained_improved": sum(r["improved"] for r in trained),
            "random_improved": sum(r["improved"] for r in random_rows),
            "trained_monotone": all(
                (r["gcn"] <= r["init_gcn"]) if objective == "gc" else (r["lcn"] <= r["init_lcn"]) for r in trained),
            "trained": trained,
            "random": random_rows,
        }
        log.info("%s: trained improved %d/%d, random %d/%d", objective,
                 report["objectives"][objective]["trained_improved"], n_test,
                 report["objectives"][objective]["random_improved"], n_test)
    if out:
        (out / "report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
    return report


def load_policy(path) -> Policy:
    return Policy.load(path)[0]
