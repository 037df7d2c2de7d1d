#!/usr/bin/env python3
"""Relative error of the randomized forward against the exact oracle as
the sample count grows (Monte-Carlo 1/sqrt(m) decay)."""

import argparse
from pathlib import Path

from enlca.analysis import approximation_error_sweep, write_sweep_csv
from enlca.matrices import RngSpec


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=64)
    parser.add_argument("--c", type=int, default=8)
    parser.add_argument("--cout", type=int, default=8)
    parser.add_argument("--m-list", default="16,64,256,1024,4096", dest="m_list")
    parser.add_argument("--k-amp", type=float, default=1.0, dest="k_amp")
    parser.add_argument("--trials", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results/approximation_error.csv")
    args = parser.parse_args()

    m_list = [int(tok) for tok in args.m_list.split(",")]
    sweep = approximation_error_sweep(
        n=args.n, c=args.c, c_out=args.cout, m_list=m_list,
        k_amp=args.k_amp, trials=args.trials, rng=RngSpec(args.seed),
    )
    print(f"{'m':>8}{'median rel error':>20}")
    for m, err in sweep.points:
        print(f"{int(m):>8}{err:>20.6f}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(sweep, out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
