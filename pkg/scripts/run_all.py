"""Run every experiment with its preset and write CSVs under one directory.

    python3 scripts/run_all.py [--scale desk|paper] [--out-dir results] [--only NAME ...]
"""

import argparse
import sys
import time
from pathlib import Path

from helmlod.cli import main as cli_main
from helmlod.experiments import EXPERIMENTS

# (subcommand, extra arguments, output subdirectory)
RUNS = [
    ("convergence-h", ["--problem", "ex1-cfg1"], "convergence_h_ex1_cfg1"),
    ("convergence-h", ["--problem", "ex1-cfg2"], "convergence_h_ex1_cfg2"),
    ("convergence-h", ["--problem", "ex1-cfg3"], "convergence_h_ex1_cfg3"),
    ("convergence-h", ["--problem", "ex1-cfg4"], "convergence_h_ex1_cfg4"),
    ("convergence-h", ["--problem", "ex2-i"], "convergence_h_ex2_i"),
    ("convergence-h", ["--problem", "ex2-ii"], "convergence_h_ex2_ii"),
    ("boundary-correction", [], "boundary_correction"),
    ("convergence-ell", ["--problem", "ex4-1d"], "convergence_ell_ex4_1d"),
    ("convergence-ell", ["--problem", "ex4-2d"], "convergence_ell_ex4_2d"),
    ("mc-vs-qmc", [], "mc_vs_qmc"),
    ("truncation-rate", [], "truncation_rate"),
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", choices=("desk", "paper"), default="desk")
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--only", nargs="*", choices=EXPERIMENTS, help="restrict to these experiments")
    args = parser.parse_args()
    status = 0
    for name, extra, sub in RUNS:
        if args.only and name not in args.only:
            continue
        out = Path(args.out_dir) / sub
        print(f"== {name} {' '.join(extra)} -> {out}", flush=True)
        t0 = time.perf_counter()
        rc = cli_main([name, *extra, "--scale", args.scale, "--out-dir", str(out)])
        print(f"   finished in {time.perf_counter() - t0:.1f}s (exit {rc})", flush=True)
        status = status or rc
    return status


if __name__ == "__main__":
    sys.exit(main())
