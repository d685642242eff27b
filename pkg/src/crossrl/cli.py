"""Command line entry point: prepare, layout, train, optimize, bench {run,stats,render}."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import zlib
from dataclasses import fields
from pathlib import Path

import numpy as np

log = logging.getLogger("crossrl")

OUT_ENV = "CROSSRL_OUT"


def derive_seed(root: int, name: str) -> int:
    """Independent seed for a named component (layout, env, agent, sampling)."""
    ss = np.random.SeedSequence([root, zlib.crc32(name.encode())])
    return int(ss.generate_state(1)[0])


def _out_path(p: str | None) -> Path | None:
    if p is None:
        return None
    path = Path(p)
    root = os.environ.get(OUT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _log_config(args: argparse.Namespace, out: Path | None) -> dict:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    log.info("resolved config: %s", json.dumps(cfg, sort_keys=True))
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        (out.parent / f"{out.stem}.config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True), encoding="utf-8")
    return cfg


# -- subcommands --------------------------------------------------------------


def cmd_prepare(args) -> int:
    from .datasets import iter_ba_graphs, iter_rome_like_graphs, load_graph, prepare

    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _log_config(args, out / "prepare")
    if args.source:
        src = Path(args.source)
        files = sorted(p for p in src.iterdir() if p.suffix in (".graphml", ".edges", ".txt", ".xml"))
        graphs = [load_graph(p) for p in files]
    else:
        stream = iter_ba_graphs(args.seed) if args.cls == "ba" else iter_rome_like_graphs(args.seed)
        graphs = [next(stream) for _ in range(args.generate)]
    kw = {}
    if args.n_train is not None or args.n_test is not None:
        kw = {"n_train": args.n_train, "n_test": args.n_test}
    summary = prepare(out, graphs, args.cls, args.seed, test_fraction=args.test_fraction, budget=args.budget, **kw)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_layout(args) -> int:
    from .datasets import load_graph
    from .geometry import build_index
    from .layouts import layout_fruchterman_reingold, layout_kamada_kawai

    g = load_graph(args.input)
    fn = layout_kamada_kawai if args.algo == "kk" else layout_fruchterman_reingold
    d = fn(g, seed=args.seed)
    out = _out_path(args.out)
    _log_config(args, out)
    d.save(out)
    idx = build_index(d)
    print(json.dumps({"gcn": idx.total, "lcn": idx.lcr}))
    return 0


def cmd_train(args) -> int:
    from .agent import PPOConfig
    from .datasets import load_graph, load_split
    from .env import EnvConfig
    from .training import train

    cfg_kw = {f.name: getattr(args, f.name) for f in fields(PPOConfig)
              if getattr(args, f.name, None) is not None}
    cfg_kw["seed"] = derive_seed(args.seed, "agent")
    cfg = PPOConfig(**cfg_kw)
    if args.manifest:
        rome = load_split(args.manifest, "train", "rome")
        ba = load_split(args.manifest, "train", "ba")
    else:
        rome, ba = [load_graph(p) for p in args.graphs], []
    out = _out_path(args.out)
    _log_config(args, out)
    log_path = Path(args.log) if args.log else out.with_suffix(".csv")
    res = train(cfg, rome, ba, env_config=EnvConfig(objective=args.objective, step_cap=args.step_cap),
                log_path=log_path, checkpoint_path=out)
    print(json.dumps({"episodes": res.episodes, "class_counts": res.class_counts, "updates": len(res.log)}))
    return 0


def cmd_optimize(args) -> int:
    from .agent import Policy
    from .datasets import load_graph
    from .env import EnvConfig
    from .layouts import layout_kamada_kawai
    from .render import render_svg
    from .training import StochasticPolicy, optimize_drawing, uniform_policy

    g = load_graph(args.graph)
    if args.model:
        policy, header = Policy.load(args.model)
        trained_for = header.get("config", {}).get("objective")
        if trained_for and trained_for != args.objective:
            log.warning("model was trained for objective %s, running %s", trained_for, args.objective)
        agent = StochasticPolicy(policy)
    else:
        agent = uniform_policy
    init = layout_kamada_kawai(g, seed=derive_seed(args.seed, "layout"))
    d, metrics = optimize_drawing(g, agent, args.objective, seed=derive_seed(args.seed, "env"), initial=init,
                                  env_config=EnvConfig(objective=args.objective, step_cap=args.step_cap))
    out = _out_path(args.out)
    _log_config(args, out)
    d.save(out)
    if args.metrics:
        Path(args.metrics).write_text(json.dumps(metrics, indent=2), encoding="utf-8")
    if args.svg:
        Path(args.svg).write_text(render_svg(d, {"runtime_s": metrics["runtime"]}), encoding="utf-8")
    print(json.dumps(metrics))
    return 0


def _parse_models(spec: list[str] | None) -> dict:
    models = {}
    for item in spec or []:
        k, _, v = item.partition("=")
        models[k] = v
    return models


def cmd_bench_run(args) -> int:
    from .bench import registry, run_suite
    from .datasets import load_graph, read_manifest

    algos_all = registry(_parse_models(args.model))
    wanted = args.algos.split(",")
    missing = [a for a in wanted if a not in algos_all]
    if missing:
        raise SystemExit(f"unknown or unconfigured algorithms: {missing} (RL entries need --model rl-gc=PATH)")
    entries = [e for e in read_manifest(args.set) if e.split == args.split]
    graphs = []
    for e in entries:
        g = load_graph(e.path)
        graphs.append(type(g)(g.n, g.edges, Path(e.path).stem))
    if args.limit:
        graphs = graphs[: args.limit]
    out = _out_path(args.out)
    cfg = _log_config(args, out)
    run_suite({a: algos_all[a] for a in wanted}, graphs, args.timeout, derive_seed(args.seed, "bench"),
              out_csv=out, drawings_dir=out.parent / f"{out.stem}_drawings",
              config={"manifest": str(args.set), "cli": cfg})
    return 0


def cmd_bench_stats(args) -> int:
    from .bench import read_results
    from .stats import commonly_solved, pairwise_wins, summarize, wilcoxon_holm

    recs = read_results(args.input)
    graphs = commonly_solved(recs) if args.common else None
    report: dict = {"metric": args.metric, "summary": summarize(recs, args.metric, graphs)}
    if args.pairwise:
        report["pairwise"] = {f"{a} vs {b}": vars(c) for (a, b), c in pairwise_wins(recs, args.metric).items()}
    if args.wilcoxon:
        report["wilcoxon_holm"] = {f"{a} vs {b}": v for (a, b), v in wilcoxon_holm(recs, args.metric).items()}
    text = json.dumps(report, indent=2)
    if args.out:
        _out_path(args.out).write_text(text, encoding="utf-8")
    print(text)
    return 0


def cmd_bench_render(args) -> int:
    from .bench import read_results
    from .datasets import load_graph, read_manifest
    from .geometry import Drawing
    from .render import render_svg

    results = Path(args.input)
    sidecar = json.loads(results.with_suffix(".json").read_text(encoding="utf-8"))
    paths = {Path(e.path).stem: e.path for e in read_manifest(sidecar["manifest"])}
    recs = [r for r in read_results(results) if r.status == "ok"]
    graph_ids = sorted({r.graph_id for r in recs})
    rng = np.random.default_rng(derive_seed(args.seed, "sampling"))
    chosen = sorted(rng.choice(graph_ids, size=min(args.graphs, len(graph_ids)), replace=False))
    out = _out_path(str(Path(args.out) / "x"))
    out = out.parent
    ddir = results.parent / f"{results.stem}_drawings"
    for gid in chosen:
        g = load_graph(paths[gid])
        for r in recs:
            if r.graph_id != gid:
                continue
            d = Drawing.load(g, ddir / f"{gid}__{r.algo}.json")
            svg = render_svg(d, {"algo": r.algo, "time_s": r.runtime_s})
            (out / f"{gid}__{r.algo}.svg").write_text(svg, encoding="utf-8")
    print(json.dumps({"rendered_graphs": list(map(str, chosen))}))
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crossrl", description="RL post-processing for crossing minimization")
    p.add_argument("--config", help="JSON file with option defaults; flags override it")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prepare", help="filter, split and cache a dataset")
    s.add_argument("--class", dest="cls", choices=("rome", "ba"), required=True)
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--source", help="directory of .graphml / .edges files")
    src.add_argument("--generate", type=int, help="generate this many raw graphs")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=int, default=3, help="local-search sweeps of the planarity filter")
    s.add_argument("--test-fraction", type=float, default=0.2)
    s.add_argument("--n-train", type=int)
    s.add_argument("--n-test", type=int)
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("layout", help="compute a KK or FR layout")
    s.add_argument("--algo", choices=("kk", "fr"), default="kk")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_layout)

    s = sub.add_parser("train", help="train a PPO agent")
    s.add_argument("--objective", choices=("gc", "lc"), default="gc")
    s.add_argument("--steps", dest="total_steps", type=int, default=200_000)
    s.add_argument("--envs", dest="n_envs", type=int, default=16)
    s.add_argument("--lr", dest="learning_rate", type=float, default=3e-3)
    s.add_argument("--batch", dest="batch_size", type=int, default=1028)
    s.add_argument("--n-steps", type=int)
    s.add_argument("--epochs", type=int)
    s.add_argument("--step-cap", type=int, default=2000)
    s.add_argument("--manifest")
    s.add_argument("--graphs", nargs="*", default=[])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--log", help="training log CSV (default: next to the checkpoint)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("optimize", help="post-process the KK layout of one graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--model", help="checkpoint; omitted = uniform random policy")
    s.add_argument("--objective", choices=("gc", "lc"), default="lc")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--step-cap", type=int, default=2000)
    s.add_argument("--out", required=True)
    s.add_argument("--metrics")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_optimize)

    b = sub.add_parser("bench", help="benchmark harness").add_subparsers(dest="bench_command", required=True)
    s = b.add_parser("run")
    s.add_argument("--algos", default="kk,fr,svm")
    s.add_argument("--set", required=True, help="dataset manifest")
    s.add_argument("--split", default="test")
    s.add_argument("--timeout", type=float, default=900.0)
    s.add_argument("--model", action="append", help="rl-gc=PATH or rl-lc=PATH")
    s.add_argument("--limit", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bench_run)

    s = b.add_parser("stats")
    s.add_argument("--metric", choices=("gcn", "lcn"), default="gcn")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--pairwise", action="store_true")
    s.add_argument("--wilcoxon", action="store_true")
    s.add_argument("--common", action="store_true", help="restrict to graphs every algorithm solved")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bench_stats)

    s = b.add_parser("render")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--graphs", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bench_render)
    return p


def _chosen_parsers(parser: argparse.ArgumentParser, args: argparse.Namespace) -> list[argparse.ArgumentParser]:
    """The root parser followed by the (nested) subparsers selected in ``args``."""
    chain = [parser]
    for dest in ("command", "bench_command"):
        sub = next((a for a in chain[-1]._actions if isinstance(a, argparse._SubParsersAction)), None)  # noqa: SLF001
        name = getattr(args, dest, None)
        if sub is None or name not in sub.choices:
            break
        chain.append(sub.choices[name])
    return chain


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        # config values become defaults, so explicit flags still win
        overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        chain = _chosen_parsers(parser, args)
        known = {a.dest for p in chain for a in p._actions}  # noqa: SLF001
        unknown = sorted(set(overrides) - known)
        if unknown:
            parser.error(f"unknown config keys {unknown}")
        chain[-1].set_defaults(**overrides)
        args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
