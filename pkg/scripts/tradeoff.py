#!/usr/bin/env python3
"""J(alpha) curves from a sweep CSV, plus the FCM / 3DPIFCM crossover."""

import argparse
import csv
import sys

import numpy as np

from pifcm.bench import crossover_alpha, read_records_csv, tradeoff_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("records", help="CSV written by size_sweep.py or `pifcm bench`")
    ap.add_argument("--steps", type=int, default=21)
    ap.add_argument("--accurate", default="3DPIFCM-par")
    ap.add_argument("--out", help="curve CSV (default: stdout)")
    args = ap.parse_args()

    recs = read_records_csv(args.records)
    alphas = np.linspace(0.0, 1.0, args.steps)
    curve = tradeoff_curve(recs, alphas)
    algs = sorted(curve)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["alpha", *algs])
    for i, a in enumerate(alphas):
        w.writerow([f"{a:.6g}", *(f"{curve[k][i]:.6g}" for k in algs)])
    if args.out:
        fh.close()

    if "FCM" in curve and args.accurate in curve:
        star = crossover_alpha(recs, "FCM", args.accurate)
        print("alpha* = " + ("none" if star is None else f"{star:.4f}"), file=sys.stderr)


if __name__ == "__main__":
    main()
