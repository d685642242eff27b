"""Train RL(GC) and RL(LC) on a small Rome-class set and compare with a uniform-random policy.

Writes training logs, checkpoints and report.json into --out.
"""

import argparse
import logging

from crossrl.experiment import desk_scale_run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--n-train", type=int, default=20)
    ap.add_argument("--n-test", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/desk")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s:%(name)s:%(message)s")
    report = desk_scale_run(args.steps, args.n_train, args.n_test, args.seed, out_dir=args.out)
    for objective, rep in report["objectives"].items():
        print(f"{objective}: trained improved {rep['trained_improved']}/{args.n_test}, "
              f"random {rep['random_improved']}/{args.n_test}, monotone={rep['trained_monotone']}, "
              f"train {rep['train_seconds']:.0f}s")


if __name__ == "__main__":
    main()
