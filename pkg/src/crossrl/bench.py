"""Benchmark harness: run algorithms on graphs under a time limit and persist results."""

from __future__ import annotations

import csv
import json
import logging
import multiprocessing as mp
import time
import traceback
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .embedding import structural_embedding
from .geometry import Drawing, build_index
from .graph import Graph
from .layouts import layout_fruchterman_reingold, layout_kamada_kawai, sampled_vertex_movement
from .stats import RunRecord

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("graph_id", "algo", "status", "gcn", "lcn", "runtime_s", "seed")
DEFAULT_TIMEOUT = 900.0

Algorithm = Callable[[Graph, int], Drawing]


def _svm(g: Graph, seed: int) -> Drawing:
    return sampled_vertex_movement(layout_kamada_kawai(g, seed=seed), samples_per_vertex=100, sweeps=2, seed=seed)


def _rl(model_path: str | Path, objective: str) -> Algorithm:
    from .agent import Policy
    from .training import StochasticPolicy, optimize_drawing

    policy = StochasticPolicy(Policy.load(model_path)[0])

    def run(g: Graph, seed: int) -> Drawing:
        return optimize_drawing(g, policy, objective, seed=seed)[0]

    return run


def registry(models: Mapping[str, str | Path] | None = None) -> dict[str, Algorithm]:
    """Built-in algorithms. RL entries need ``models={'rl-gc': path, 'rl-lc': path}``."""
    algos: dict[str, Algorithm] = {
        "kk": lambda g, seed: layout_kamada_kawai(g, seed=seed),
        "fr": lambda g, seed: layout_fruchterman_reingold(g, seed=seed),
        "svm": _svm,
    }
    for name, objective in (("rl-gc", "gc"), ("rl-lc", "lc")):
        if models and name in models:
            algos[name] = _rl(models[name], objective)
    return algos


def _worker(fn: Algorithm, g: Graph, seed: int, conn) -> None:
    try:
        t0 = time.perf_counter()
        d = fn(g, seed)
        runtime = time.perf_counter() - t0
        idx = build_index(d)
        conn.send(("ok", idx.total, idx.lcr, runtime, d.positions.tolist()))
    except BaseException:  # noqa: BLE001 - every failure becomes a row
        conn.send(("failure", None, None, 0.0, traceback.format_exc()))
    finally:
        conn.close()


def run_one(fn: Algorithm, g: Graph, seed: int, time_limit_s: float) -> tuple[RunRecord, list | None]:
    """Run one algorithm in a child process, killing it at the time limit."""
    structural_embedding(g)  # warm cache outside the timed region
    ctx = mp.get_context("fork")
    parent, child = ctx.Pipe(duplex=False)
    proc = ctx.Process(target=_worker, args=(fn, g, seed, child), daemon=True)
    t0 = time.perf_counter()
    proc.start()
    child.close()
    ready = parent.poll(time_limit_s)
    if not ready:
        proc.kill()
        proc.join()
        return RunRecord(g.name, "", "timeout", runtime_s=time.perf_counter() - t0, seed=seed), None
    try:
        status, gcn, lcn, runtime, payload = parent.recv()
    except EOFError:
        status, gcn, lcn, runtime, payload = "failure", None, None, 0.0, "worker died"
    proc.join()
    if status != "ok":
        log.warning("run failed on %s: %s", g.name, payload)
        return RunRecord(g.name, "", "failure", runtime_s=runtime, seed=seed), None
    return RunRecord(g.name, "", "ok", gcn, lcn, runtime, seed), payload


def _row(r: RunRecord) -> dict:
    return {"graph_id": r.graph_id, "algo": r.algo, "status": r.status,
            "gcn": "" if r.gcn is None else r.gcn, "lcn": "" if r.lcn is None else r.lcn,
            "runtime_s": f"{r.runtime_s:.6f}", "seed": r.seed}


def run_suite(algorithms: Mapping[str, Algorithm], graphs: Sequence[Graph], time_limit_s: float = DEFAULT_TIMEOUT,
              seed: int = 0, out_csv: str | Path | None = None, drawings_dir: str | Path | None = None,
              config: dict | None = None) -> list[RunRecord]:
    """Run every algorithm once on every graph, sequentially.

    Rows are appended to ``out_csv`` as they complete; a JSON sidecar
    records the run configuration. Timeouts and failures become rows.
    """
    writer = fh = None
    if out_csv is not None:
        out_csv = Path(out_csv)
        fresh = not out_csv.exists() or out_csv.stat().st_size == 0
        fh = open(out_csv, "a", newline="")
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        if fresh:
            writer.writeheader()
        sidecar = {"algorithms": list(algorithms), "graphs": [g.name for g in graphs],
                   "time_limit_s": time_limit_s, "seed": seed, **(config or {})}
        out_csv.with_suffix(".json").write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    if drawings_dir is not None:
        Path(drawings_dir).mkdir(parents=True, exist_ok=True)
    records = []
    try:
        for g in graphs:
            for name, fn in algorithms.items():
                rec, positions = run_one(fn, g, seed, time_limit_s)
                rec = RunRecord(g.name, name, rec.status, rec.gcn, rec.lcn, rec.runtime_s, seed)
                records.append(rec)
                log.info("%s %s %s gcn=%s lcn=%s %.3fs", g.name, name, rec.status, rec.gcn, rec.lcn, rec.runtime_s)
                if writer is not None:
                    writer.writerow(_row(rec))
                    fh.flush()
                if drawings_dir is not None and positions is not None:
                    Drawing(g, positions).save(Path(drawings_dir) / f"{g.name}__{name}.json")
    finally:
        if fh is not None:
            fh.close()
    return records


def read_results(path: str | Path) -> list[RunRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            ok = row["status"] == "ok"
            out.append(RunRecord(row["graph_id"], row["algo"], row["status"],
                                 int(row["gcn"]) if ok else None, int(row["lcn"]) if ok else None,
                                 float(row["runtime_s"]), int(row["seed"])))
    return out
