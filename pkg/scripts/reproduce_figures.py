#!/usr/bin/env python3
"""Run every bundled recipe and collect the CSV outputs under results/.

Usage: python scripts/reproduce_figures.py [--outdir results]

Produces the temperature-sweep tables for the three dimer configurations
(symmetric coupling, site-1-only coupling, site-2-only coupling), an
oracle-residual comparison table for each, and the three phase-space grids.
"""

import argparse
import sys
from pathlib import Path

from mlsb.cli import main as mlsb_main

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


def run(outdir):
    outdir.mkdir(parents=True, exist_ok=True)
    for name in ("fig1a", "fig1b_site1", "fig1b_site2"):
        cfg = str(CONFIGS / f"{name}.ini")
        code = mlsb_main(["sweep", "--config", cfg,
                          "--out", str(outdir / f"{name}.csv")])
        if code != 0:
            return code
        print(f"wrote {outdir / f'{name}.csv'}")
        code = mlsb_main(["compare", "--config", cfg,
                          "--out", str(outdir / f"{name}_compare.csv")])
        if code != 0:
            return code
        print(f"wrote {outdir / f'{name}_compare.csv'}")
    code = mlsb_main(["figure2", "--config", str(CONFIGS / "fig2.ini"),
                      "--out", str(outdir)])
    if code != 0:
        return code
    print(f"wrote {outdir}/fig2_*.csv")
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results", type=Path)
    args = parser.parse_args()
    sys.exit(run(args.outdir))
