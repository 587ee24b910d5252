#!/usr/bin/env python3
"""Phantom size sweep: wall-clock seconds and incS per algorithm, written as CSV.

Defaults reproduce the seven-size grid with 3-9% noise. Use --sizes to stay
at desk scale (the two largest sizes take a long time with the full swarm).
"""

import argparse
import logging

from pifcm.bench import ALGORITHMS, DEFAULT_NOISE, BENCH_SIZES, run_size_sweep
from pifcm.pso import SwarmConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=list(BENCH_SIZES))
    ap.add_argument("--algs", nargs="+", default=list(ALGORITHMS))
    ap.add_argument("--noise", type=float, nargs="+", default=list(DEFAULT_NOISE))
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--warmup", type=int, default=1)
    ap.add_argument("--particles", type=int, default=10)
    ap.add_argument("--pso-iters", type=int, default=30)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    recs = run_size_sweep(args.sizes, args.algs, args.noise, args.seeds, out=args.out,
                          repeats=args.repeats, warmup=args.warmup,
                          swarm=SwarmConfig(P=args.particles, max_iter=args.pso_iters),
                          workers=args.workers)
    # per-size speedup of the parallel backend, when both were run
    by = {(r.image_size, r.algorithm): [] for r in recs}
    for r in recs:
        by[(r.image_size, r.algorithm)].append(r.seconds)
    for size in args.sizes:
        seq, par = by.get((size, "3DPIFCM-seq")), by.get((size, "3DPIFCM-par"))
        if seq and par:
            print(f"size {size}: seq/par = {sum(seq) / sum(par):.2f}x")
    print(f"{len(recs)} records -> {args.out}")


if __name__ == "__main__":
    main()
