#!/usr/bin/env python3
"""Modified Amdahl speedup versus processor count for a few parallel fractions."""

import argparse
import csv
import sys

from pifcm.bench import amdahl_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[0.9, 0.95, 0.99])
    ap.add_argument("--k", type=float, default=3.0, help="CPU/GPU clock ratio")
    ap.add_argument("--j", type=float, default=0.02, help="data-transfer ratio")
    ap.add_argument("--max-n", type=int, default=20_000)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args()

    ns = range(1, args.max_n + 1)
    cols = [amdahl_table(p, args.k, args.j, ns) for p in args.p]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["N", *(f"p={p:g}" for p in args.p)])
    for i, n in enumerate(ns):
        w.writerow([n, *(f"{c[i][1]:.6g}" for c in cols)])
    if args.out:
        fh.close()
    for p, c in zip(args.p, cols):
        print(f"p={p:g}: S({args.max_n}) = {c[-1][1]:.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
