"""Run verification suites and write every report, with wall-clock timings, as JSONL.

Usage::

    python3 scripts/run_suites.py --suites herm hankel --budget 100000 --seed 1 --out runs/seed1.jsonl

Exits 1 when any report fails, like ``rmtweights verify``.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import rmtweights
from rmtweights.verify import SUITES, run_suite


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--suites", nargs="+", default=list(SUITES), choices=list(SUITES))
    parser.add_argument("--budget", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--negative-control", action="store_true")
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args(argv)

    lines = [{"meta": {"version": rmtweights.__version__, "budget": args.budget, "seed": args.seed, "negative_control": args.negative_control}}]
    failed = 0
    for suite in args.suites:
        t0 = time.perf_counter()
        reports = run_suite(suite, args.budget, args.seed, args.negative_control)
        elapsed = time.perf_counter() - t0
        bad = [r.test_name for r in reports if not r.passed]
        failed += len(bad)
        lines.append({"suite": suite, "seconds": round(elapsed, 3), "reports": len(reports), "failed": bad})
        lines.extend(r.to_dict() for r in reports)
        print(f"{suite:<11} {len(reports):3d} reports  {len(bad):2d} failed  {elapsed:7.1f}s", file=sys.stderr)

    text = "\n".join(json.dumps(x, sort_keys=True) for x in lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
