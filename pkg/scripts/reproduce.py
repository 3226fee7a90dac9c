"""Regenerate the benchmark convergence tables into results/<experiment>/.

    python scripts/reproduce.py                 # every experiment
    python scripts/reproduce.py hybrid-p2-nsq   # one of them

Each experiment is a set of CLI flags; the CLI writes CSV, Markdown, an SVG
plot and the resolved config.json next to them. The equal-n experiments
report the error at t = T only, which is the norm behind the reference
numbers; pass --time-norm all to use every time level instead.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from layersolve.cli import main as cli_main

EXPERIMENTS = {
    "upwind-p1": ["--problem", "p1", "--schemes", "upwind-uniform,upwind-shishkin"],
    "hybrid-p1": ["--problem", "p1", "--scheme", "hybrid-gshishkin"],
    "upwind-p2": ["--problem", "p2", "--p", "3", "--schemes", "upwind-uniform,upwind-shishkin"],
    "hybrid-p2": ["--problem", "p2", "--p", "3", "--scheme", "hybrid-gshishkin"],
    "hybrid-p2-nsq": ["--problem", "p2", "--p", "3", "--scheme", "hybrid-gshishkin", "--m-policy", "n-squared"],
    **{f"hybrid-p2-nsq-p{p}": ["--problem", "p2", "--p", str(p), "--scheme", "hybrid-gshishkin",
                               "--m-policy", "n-squared"] for p in (1, 5, 7, 9)},
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("experiments", nargs="*", metavar="NAME",
                    help=f"any of: {', '.join(EXPERIMENTS)} (default: all)")
    ap.add_argument("--results", default="results", help="parent output directory")
    ap.add_argument("--time-norm", default="final", choices=["final", "all"])
    ap.add_argument("--emit", default="csv,md,svg")
    args = ap.parse_args(argv)
    unknown = [n for n in args.experiments if n not in EXPERIMENTS]
    if unknown:
        ap.error(f"unknown experiment(s): {', '.join(unknown)}")

    status = 0
    for name in args.experiments or EXPERIMENTS:
        out = Path(args.results) / name
        t0 = time.perf_counter()
        flags = EXPERIMENTS[name] + ["--out-dir", str(out), "--time-norm", args.time_norm, "--emit", args.emit]
        code = cli_main(flags)
        print(f"{name}: exit {code}, {time.perf_counter() - t0:.0f} s -> {out}")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
