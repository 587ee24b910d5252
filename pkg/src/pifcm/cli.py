"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import bench
from .attraction import NeighborhoodSpec
from .fcm import FcmConfig, fcm_run
from .pipeline import PipelineConfig, defuzzify, run_3dpifcm
from .pso import SwarmConfig
from .volume import (
    SAMPLE_DTYPES,
    LabelVolume,
    Volume,
    add_gaussian_noise,
    export_slice_pgm,
    generate_phantom,
    load_raw,
    normalize_minmax,
    parse_dims,
    save_raw,
)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def derive_seed(seed: int, stream: int) -> int:
    """Deterministic sub-seed for one consumer of the master ``--seed``."""
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _n_range(text):
    parts = [int(t) for t in text.split(":")]
    if len(parts) == 2:
        lo, hi, step = parts[0], parts[1], 1
    elif len(parts) == 3:
        lo, hi, step = parts
    else:
        raise argparse.ArgumentTypeError("expected START:STOP or START:STOP:STEP")
    if lo < 1 or hi < lo or step < 1:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return list(range(lo, hi + 1, step))


def _dims(text):
    try:
        return parse_dims(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pifcm", description="Fuzzy clustering segmentation of noisy volumes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    ph = sub.add_parser("phantom", help="write a nested-cube phantom as raw u8")
    ph.add_argument("--size", type=int, required=True)
    ph.add_argument("--depth", type=int)
    ph.add_argument("--out", required=True)
    ph.add_argument("--truth-out")

    no = sub.add_parser("noise", help="add Gaussian noise to a raw volume")
    no.add_argument("--in", dest="inp", required=True)
    no.add_argument("--dims", type=_dims, required=True)
    no.add_argument("--kind", choices=sorted(SAMPLE_DTYPES), default="u8")
    no.add_argument("--sigma", type=float, required=True, help="percent of intensity range")
    no.add_argument("--seed", type=int, default=0)
    no.add_argument("--out", required=True)
    no.add_argument("--out-kind", choices=sorted(SAMPLE_DTYPES), default="u8")

    sg = sub.add_parser("segment", help="segment one slice with 3DPIFCM")
    sg.add_argument("--in", dest="inp", required=True)
    sg.add_argument("--dims", type=_dims, required=True)
    sg.add_argument("--kind", choices=sorted(SAMPLE_DTYPES), default="u8")
    sg.add_argument("--z", type=int)
    sg.add_argument("--c", type=int, default=4)
    sg.add_argument("--m", type=float, default=2.0)
    sg.add_argument("--eps", type=float, default=1e-4)
    sg.add_argument("--v", type=int, default=2)
    sg.add_argument("--h", type=float, default=1.0)
    sg.add_argument("--mode", choices=("2d", "3d"), default="3d")
    sg.add_argument("--lambda", dest="lam", type=float)
    sg.add_argument("--xi", type=float)
    sg.add_argument("--backend", choices=("sequential", "parallel"), default="parallel")
    sg.add_argument("--particles", type=int, default=10)
    sg.add_argument("--pso-iters", type=int, default=30)
    sg.add_argument("--workers", type=int)
    sg.add_argument("--seed", type=int, default=0)
    sg.add_argument("--truth", help="raw u8 ground-truth label volume, same dims")
    sg.add_argument("--out-labels", required=True)
    sg.add_argument("--out-csv", required=True)

    be = sub.add_parser("bench", help="phantom size sweep, timing and incS to CSV")
    be.add_argument("--sizes", type=_int_list, default=list(bench.BENCH_SIZES))
    be.add_argument("--algs", default=",".join(bench.ALGORITHMS))
    be.add_argument("--noise", type=_float_list, default=list(bench.DEFAULT_NOISE))
    be.add_argument("--seeds", type=_int_list, default=[0])
    be.add_argument("--repeats", type=int, default=3)
    be.add_argument("--warmup", type=int, default=1)
    be.add_argument("--particles", type=int, default=10)
    be.add_argument("--pso-iters", type=int, default=30)
    be.add_argument("--workers", type=int)
    be.add_argument("--alpha", type=float, default=0.7)
    be.add_argument("--out", required=True)

    am = sub.add_parser("amdahl", help="modified Amdahl speedup over a processor range")
    am.add_argument("--p", type=float, required=True)
    am.add_argument("--k", type=float, default=1.0)
    am.add_argument("--j", type=float, default=1.0)
    am.add_argument("--n-range", type=_n_range, default=_n_range("1:20000"))
    am.add_argument("--out", help="CSV path (default: stdout)")
    return p


def cmd_phantom(args) -> int:
    vol, truth = generate_phantom(args.size, args.depth)
    save_raw(args.out, vol, "u8")
    if args.truth_out:
        save_raw(args.truth_out, truth, "u8")
    nx, ny, nz = vol.dims
    print(f"phantom {nx}x{ny}x{nz} -> {args.out}")
    return EXIT_OK


def cmd_noise(args) -> int:
    vol = normalize_minmax(load_raw(args.inp, args.dims, args.kind))
    noisy = add_gaussian_noise(vol, args.sigma, args.seed)
    save_raw(args.out, noisy, args.out_kind)
    print(f"noise sigma={args.sigma}% seed={args.seed} -> {args.out}")
    return EXIT_OK


SEGMENT_FIELDS = ("z", "c", "m", "mode", "v", "h", "backend", "lambda", "xi", "fcm_iters",
                  "pso_iters", "pso_evals", "ifcm_iters", "cost", "centers", "incS")


def cmd_segment(args) -> int:
    if (args.lam is None) != (args.xi is None):
        raise UsageError("--lambda and --xi must be given together")
    vol = load_raw(args.inp, args.dims, args.kind)
    fixed = None if args.lam is None else (args.lam, args.xi)
    cfg = PipelineConfig(
        c=args.c, m=args.m, eps=args.eps, z=args.z,
        spec=NeighborhoodSpec(v=args.v, h=args.h, mode=args.mode),
        swarm=SwarmConfig(P=args.particles, max_iter=args.pso_iters,
                          seed=derive_seed(args.seed, 1)),
        backend=args.backend, seed=derive_seed(args.seed, 0), fixed_params=fixed,
        workers=args.workers,
    )
    res = run_3dpifcm(vol, cfg)

    lab = LabelVolume(res.labels[None, :, :])
    export_slice_pgm(lab, 0, args.out_labels, n_labels=args.c)

    inc = ""
    if args.truth:
        truth = load_raw(args.truth, args.dims, "u8").data.astype(np.int64)
        inc = bench.incorrect_segmentation(res.labels, truth[res.z])

    row = {
        "z": res.z, "c": args.c, "m": f"{args.m:.6g}", "mode": args.mode, "v": args.v,
        "h": f"{args.h:.6g}", "backend": args.backend,
        "lambda": f"{res.lambda_star:.6g}", "xi": f"{res.xi_star:.6g}",
        "fcm_iters": res.iterations["fcm_init"], "pso_iters": res.iterations["pso"],
        "pso_evals": res.iterations["pso_evals"], "ifcm_iters": res.iterations["ifcm_final"],
        "cost": f"{res.cost:.6g}",
        "centers": " ".join(f"{c:.6g}" for c in res.centers), "incS": inc,
    }
    with open(args.out_csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SEGMENT_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerow(row)

    phases = " ".join(f"{k}={v:.3f}s" for k, v in res.timings.items())
    print(f"lambda={res.lambda_star:.4f} xi={res.xi_star:.4f} iterations={res.iterations} "
          f"seconds={res.total_seconds:.3f} ({phases})"
          + (f" incS={inc}" if inc != "" else ""))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        algs = [bench.canonical_algorithm(a) for a in args.algs.split(",") if a.strip()]
    except ValueError as e:
        raise UsageError(str(e)) from None
    records = bench.run_size_sweep(
        sizes=args.sizes, algorithms=algs, noise_pcts=args.noise, seeds=args.seeds,
        out=args.out, repeats=args.repeats, warmup=args.warmup,
        swarm=SwarmConfig(P=args.particles, max_iter=args.pso_iters), workers=args.workers,
    )
    print(f"{len(records)} records -> {args.out}")
    if len(algs) >= 2:
        costs = bench.tradeoff_cost(records, args.alpha)
        print("J(alpha={:g}): ".format(args.alpha)
              + ", ".join(f"{a}={j:.4f}" for a, j in sorted(costs.items())))
        accurate = next((a for a in ("3DPIFCM-par", "3DPIFCM-seq", "IFCM-PSO-2D") if a in algs),
                        None)
        if "FCM" in algs and accurate:
            star = bench.crossover_alpha(records, "FCM", accurate)
            print(f"crossover alpha* (FCM vs {accurate}): "
                  + ("none" if star is None else f"{star:.4f}"))
    return EXIT_OK


def cmd_amdahl(args) -> int:
    rows = bench.amdahl_table(args.p, args.k, args.j, args.n_range)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("N", "speedup"))
        for n, s in rows:
            w.writerow((n, f"{s:.6g}"))
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


COMMANDS = {
    "phantom": cmd_phantom,
    "noise": cmd_noise,
    "segment": cmd_segment,
    "bench": cmd_bench,
    "amdahl": cmd_amdahl,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except UsageError as e:
        print(f"pifcm {args.cmd}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as e:
        print(f"pifcm {args.cmd}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
