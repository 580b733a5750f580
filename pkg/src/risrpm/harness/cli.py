"""Command-line entry point: ``risrpm reproduce --fig N`` and ``risrpm run --config PATH``."""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

from ..numkit import ValidationError
from .config import FIG_NAMES, default_spec, load_config
from .experiments import TrialError, run_experiment
from .output import write_outputs


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trials", type=int, help="channel realizations (MC trials for fig 2) per sweep point")
    common.add_argument("--noise-samples", type=int, help="noise samples for the rate expectation")
    common.add_argument("--seed", type=int, help="master seed (64-bit)")
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    common.add_argument("--full", action="store_true", help="full-scale trial counts")

    p = argparse.ArgumentParser(prog="risrpm", description="RIS reflection pattern modulation experiments")
    sub = p.add_subparsers(dest="cmd", required=True)
    rp = sub.add_parser("reproduce", parents=[common], help="run one figure with its default settings")
    rp.add_argument("--fig", type=int, required=True, choices=sorted(FIG_NAMES))
    rp.add_argument("--csi", choices=("estimated", "perfect"), help="override the CSI mode")
    rn = sub.add_parser("run", parents=[common], help="run an experiment described by a TOML file")
    rn.add_argument("--config", required=True)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "reproduce":
            spec = default_spec(FIG_NAMES[args.fig], args.full)
            if args.csi:
                spec = replace(spec, csi=args.csi)
        else:
            spec = load_config(args.config, args.full)
        kw = {}
        if args.trials is not None:
            kw["trials"] = args.trials
        if args.noise_samples is not None:
            kw["noise_samples"] = args.noise_samples
        if args.seed is not None:
            kw["seed"] = args.seed
        if kw:
            spec = replace(spec, **kw)
        if args.workers < 1:
            raise ValidationError("--workers must be positive")
        t0 = time.perf_counter()
        table = run_experiment(spec, workers=args.workers)
        paths = write_outputs(table, args.out)
    except (FileNotFoundError, ValidationError, TrialError, OSError) as exc:
        print(f"risrpm: error: {exc}", file=sys.stderr)
        return 1
    print(f"{spec.name}: {spec.trials} trials x {len(spec.sweep_values)} points in "
          f"{time.perf_counter() - t0:.1f} s -> {paths['csv']}, {paths['json']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
