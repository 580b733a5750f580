"""Run every figure experiment at its default (reduced) trial counts.

    python3 scripts/reproduce_all.py --out results --workers 4 [--full] [--skip 6]
"""
import argparse
import time
from dataclasses import replace

from risrpm.harness import default_spec, run_experiment, write_outputs
from risrpm.harness.config import FIG_NAMES


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--full", action="store_true", help="full-scale trial counts")
    ap.add_argument("--skip", type=int, nargs="*", default=[], help="figure numbers to skip")
    args = ap.parse_args()

    for fig, name in sorted(FIG_NAMES.items()):
        if fig in args.skip:
            continue
        spec = default_spec(name, args.full)
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
        t0 = time.perf_counter()
        paths = write_outputs(run_experiment(spec, workers=args.workers), args.out)
        print(f"fig {fig}: {time.perf_counter() - t0:7.1f} s  {paths['csv']}")


if __name__ == "__main__":
    main()
