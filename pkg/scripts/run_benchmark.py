"""End-to-end benchmark on generated Rome-class graphs: prepare, train, run, summarize.

Drives the command-line interface so every step leaves the same artifacts
a manual run would.
"""

import argparse
from pathlib import Path

from crossrl.cli import main as cli


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--graphs", type=int, default=60, help="raw graphs to generate")
    ap.add_argument("--steps", type=int, default=50_000, help="training steps per objective")
    ap.add_argument("--timeout", type=float, default=900)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/bench")
    args = ap.parse_args()
    out = Path(args.out)
    manifest = out / "data" / "manifest.json"
    cli(["prepare", "--class", "rome", "--generate", str(args.graphs), "--seed", str(args.seed),
         "--out", str(out / "data")])
    models = []
    for objective in ("gc", "lc"):
        ckpt = out / f"rl_{objective}.ckpt"
        cli(["train", "--objective", objective, "--steps", str(args.steps), "--manifest", str(manifest),
             "--seed", str(args.seed), "--out", str(ckpt)])
        models += ["--model", f"rl-{objective}={ckpt}"]
    results = out / "results.csv"
    cli(["bench", "run", "--algos", "kk,fr,svm,rl-gc,rl-lc", "--set", str(manifest), "--split", "test",
         "--timeout", str(args.timeout), "--seed", str(args.seed), "--out", str(results), *models])
    for metric in ("gcn", "lcn"):
        cli(["bench", "stats", "--metric", metric, "--in", str(results), "--pairwise", "--wilcoxon",
             "--out", str(out / f"stats_{metric}.json")])
    cli(["bench", "render", "--in", str(results), "--graphs", "3", "--out", str(out / "svg")])


if __name__ == "__main__":
    main()
