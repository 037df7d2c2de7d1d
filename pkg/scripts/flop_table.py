#!/usr/bin/env python3
"""Print the efficiency comparison table: quadratic attention, one 3x3
convolution, and the randomized forward across sample counts."""

import argparse

from enlca.analysis import flop_table


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=10_000, help="spatial size (default 100x100)")
    parser.add_argument("--c", type=int, default=64)
    parser.add_argument("--cout", type=int, default=64)
    args = parser.parse_args()

    rows = flop_table(n=args.n, c=args.c, c_out=args.cout)
    print(f"{'method':<14}{'MACs':>16}{'GFLOPs':>10}")
    for row in rows:
        label = row.method if row.m is None else f"{row.method}-m{row.m}"
        print(f"{label:<14}{row.macs:>16,}{row.gflops:>10.2f}")


if __name__ == "__main__":
    main()
