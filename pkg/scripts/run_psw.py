#!/usr/bin/env python3
"""PS&W (Polya-Gamma) sampler on the nodal data: rescaled spectrum trajectory.

    python scripts/run_psw.py [--config configs/psw_nodal_quick.toml] [--out-dir results/psw]
"""

import argparse
import sys

from spectre_da.cli import run_experiment
from spectre_da.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/psw_nodal_quick.toml")
    ap.add_argument("--out-dir", default="results/psw")
    ap.add_argument("--threads", default=None)
    args = ap.parse_args()

    cfg = load_config(args.config)
    res = run_experiment(cfg, args.out_dir, threads=args.threads, log=lambda s: print(s, file=sys.stderr))
    table = {}
    for _, _, row in res["rows"]:
        table.setdefault(row.m, {})[row.rank] = row.eigenvalue
    print(f"{'m':>6}  " + " ".join(f"lam{i:<5d}" for i in range(1, 6)))
    prev = None
    for m, vals in table.items():
        line = f"{m:>6}  " + " ".join(f"{vals[i]:8.4f}" for i in range(1, 6) if i in vals)
        if prev is not None:
            line += f"   d(lam1) = {vals[1] - prev:+.4f}"
        prev = vals[1]
        print(line)
    print(f"wrote {args.out_dir}/trajectory.csv")


if __name__ == "__main__":
    main()
