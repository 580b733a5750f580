"""Rate versus the number of ON groups for G = 9 and the maximising Kbar.

    python3 scripts/fig6_optimal_kbar.py [--trials 100] [--noise-samples 50] [--workers 4]
"""
import argparse
from dataclasses import replace

import numpy as np

from risrpm.harness import default_spec, run_experiment, write_outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--noise-samples", type=int, default=50)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=12)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    spec = replace(default_spec("fig6_rate_vs_kbar"), trials=args.trials,
                   noise_samples=args.noise_samples, seed=args.seed)
    table = run_experiment(spec, workers=args.workers)
    write_outputs(table, args.out)
    ks = np.array(table.columns["kbar"], dtype=int)
    print(" kbar " + "".join(f"{k:>8d}" for k in ks))
    for label in spec.schemes:
        r = np.array(table.columns[f"rate_{label}"])
        print(f"{label:>5s} " + "".join(f"{v:8.3f}" for v in r) + f"   best Kbar = {ks[np.argmax(r)]}")


if __name__ == "__main__":
    main()
