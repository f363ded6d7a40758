#!/usr/bin/env python3
"""Scan the reduced dephasing rate and fit the entropy-profile
coefficient c(gamma); emits profile.csv and fits.json via the CLI."""

import argparse

from bosetraj.cli import main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--L", type=int, default=6)
    p.add_argument("--M", type=int, default=200)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--gamma-grid", default="0.5,1,2,4,8")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", default=None)
    return p.parse_args()


if __name__ == "__main__":
    a = parse_args()
    argv = ["entropy-scan", "--L", str(a.L), "--M", str(a.M),
            "--t-max", str(a.t_max), "--gamma-grid", a.gamma_grid,
            "--renyi-orders", "2", "--seed", str(a.seed)]
    if a.outdir:
        argv += ["--outdir", a.outdir]
    raise SystemExit(main(argv))
