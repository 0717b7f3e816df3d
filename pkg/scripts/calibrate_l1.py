"""Bootstrap the null distribution of every L1 histogram statistic.

Each suite that emits L1 reports is rerun on fresh seeds at the acceptance
budget. For every report name the script records the replicate statistics,
their mean and standard deviation, and a 99.9% quantile estimate (the larger
of the observed maximum and a normal-tail extrapolation). The frozen
thresholds used by the suites must sit above that quantile.

Usage::

    python3 scripts/calibrate_l1.py --replicates 20 --out tests/fixtures/l1_calibration.json
"""
from __future__ import annotations

import argparse
import json
from collections import defaultdict
from pathlib import Path

import numpy as np
from scipy import stats

import rmtweights
from rmtweights.verify import DistanceKind, run_suite

L1_SUITES = ("herm", "hankel", "hermplus", "unitary")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--replicates", type=int, default=20)
    parser.add_argument("--budget", type=int, default=100_000)
    parser.add_argument("--first-seed", type=int, default=1001)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "l1_calibration.json")
    args = parser.parse_args(argv)

    values: dict[str, list[float]] = defaultdict(list)
    thresholds: dict[str, float] = {}
    seeds = list(range(args.first_seed, args.first_seed + args.replicates))
    for seed in seeds:
        for suite in L1_SUITES:
            for rep in run_suite(suite, args.budget, seed):
                if rep.distance_kind is DistanceKind.L1_HISTOGRAM:
                    values[rep.test_name].append(rep.statistic)
                    thresholds[rep.test_name] = rep.threshold
        print(f"seed {seed} done", flush=True)

    z = float(stats.norm.isf(0.001))
    table = {}
    for name, vals in sorted(values.items()):
        v = np.asarray(vals)
        mean, sd = float(v.mean()), float(v.std(ddof=1))
        q999 = max(float(v.max()), mean + z * sd)
        table[name] = {
            "replicates": len(v),
            "mean": mean,
            "sd": sd,
            "max": float(v.max()),
            "q999": q999,
            "frozen_threshold": thresholds[name],
        }
        flag = "ok" if q999 < thresholds[name] else "TOO TIGHT"
        print(f"{name:45s} mean={mean:.4f} sd={sd:.4f} q999={q999:.4f} thr={thresholds[name]:.3f} {flag}")

    payload = {
        "version": rmtweights.__version__,
        "budget": args.budget,
        "seeds": seeds,
        "alpha": 0.001,
        "statistics": table,
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(payload, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
