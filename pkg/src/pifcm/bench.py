"""Segmentation-error metric, speed/quality tradeoff, Amdahl model and size sweeps."""

from __future__ import annotations

import csv
import itertools
import logging
import statistics
import time
from collections import defaultdict
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .attraction import NeighborhoodSpec
from .fcm import FcmConfig, fcm_run
from .pipeline import PipelineConfig, defuzzify, run_3dpifcm
from .pso import SwarmConfig
from .volume import add_gaussian_noise, generate_phantom

log = logging.getLogger(__name__)

BENCH_SIZES = (32, 55, 95, 165, 285, 493, 854)
DEFAULT_NOISE = (3.0, 5.0, 7.0, 9.0)
ALGORITHMS = ("FCM", "IFCM-PSO-2D", "3DPIFCM-seq", "3DPIFCM-par")
CSV_HEADER = ("algorithm", "size", "noise_pct", "seed", "seconds", "incS")
EXHAUSTIVE_MAX_LABELS = 6


@dataclass(frozen=True)
class BenchmarkRecord:
    algorithm: str
    image_size: int
    noise_pct: float
    seconds: float
    incS: int
    seed: int = 0


@dataclass(frozen=True)
class AmdahlParams:
    p: float
    N: float = 1.0
    k: float = 1.0
    j: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not (self.k > 0 and self.j > 0):
            raise ValueError("k and j must be positive")


def canonical_algorithm(name: str) -> str:
    for alg in ALGORITHMS:
        if alg.lower() == name.strip().lower():
            return alg
    raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")


def incorrect_segmentation(pred, truth) -> int:
    """Mismatched voxels after the label permutation that minimizes mismatches.

    Exhaustive over permutations for up to six labels; beyond that an optimal
    assignment on the confusion matrix.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"label shapes differ: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        return 0
    n = int(max(pred.max(), truth.max())) + 1
    conf = np.zeros((n, n), dtype=np.int64)
    np.add.at(conf, (pred.ravel(), truth.ravel()), 1)
    if n <= EXHAUSTIVE_MAX_LABELS:
        rows = np.arange(n)
        matched = max(conf[rows, perm].sum() for perm in itertools.permutations(range(n)))
    else:
        r, c = linear_sum_assignment(conf, maximize=True)
        matched = conf[r, c].sum()
    return int(pred.size - matched)


def _cell_means(records):
    """Mean (incS, seconds) per (size, algorithm)."""
    acc = defaultdict(list)
    for r in records:
        acc[(r.image_size, r.algorithm)].append(r)
    return {key: (float(np.mean([r.incS for r in rs])), float(np.mean([r.seconds for r in rs])))
            for key, rs in acc.items()}


def _minmax(values: dict) -> dict:
    lo, hi = min(values.values()), max(values.values())
    if hi - lo <= 0:
        return {k: 0.0 for k in values}
    return {k: (v - lo) / (hi - lo) for k, v in values.items()}


def tradeoff_cost(records, alpha: float) -> dict:
    """J(alpha) per algorithm: mean over sizes of the weighted, per-size
    min-max normalized error count and runtime.

    Records for the same (size, algorithm) are averaged first, so noise levels
    and seeds pool together. A term on which all algorithms tie contributes 0,
    which makes a single-algorithm record set score 0 everywhere.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    cells = _cell_means(records)
    sizes = sorted({s for s, _ in cells})
    algs = sorted({a for _, a in cells})
    if not algs:
        raise ValueError("no records")
    total = dict.fromkeys(algs, 0.0)
    for size in sizes:
        missing = [a for a in algs if (size, a) not in cells]
        if missing:
            raise ValueError(f"size {size} has no records for {missing}")
        inc = _minmax({a: cells[(size, a)][0] for a in algs})
        sec = _minmax({a: cells[(size, a)][1] for a in algs})
        for a in algs:
            total[a] += alpha * inc[a] + (1.0 - alpha) * sec[a]
    return {a: v / len(sizes) for a, v in total.items()}


def tradeoff_curve(records, alphas) -> dict:
    """``{algorithm: [J(alpha) for alpha in alphas]}``."""
    out = defaultdict(list)
    for a in alphas:
        for alg, j in tradeoff_cost(records, a).items():
            out[alg].append(j)
    return dict(out)


def crossover_alpha(records, fast: str = "FCM", accurate: str = "3DPIFCM-par"):
    """Alpha where ``fast`` and ``accurate`` have equal J, or None if no crossing.

    J is affine in alpha, so the crossing is found exactly from the two ends.
    """
    j0 = tradeoff_cost(records, 0.0)
    j1 = tradeoff_cost(records, 1.0)
    d0 = j0[fast] - j0[accurate]
    d1 = j1[fast] - j1[accurate]
    if d0 == d1 or d0 * d1 > 0:
        return None
    return d0 / (d0 - d1)


def amdahl_speedup(params: AmdahlParams) -> float:
    """Speedup ``1 / ((1 - p) + k p / (j N))``."""
    p, N, k, j = params.p, params.N, params.k, params.j
    return 1.0 / ((1.0 - p) + k * p / (j * N))


def amdahl_table(p, k, j, ns):
    return [(int(n), amdahl_speedup(AmdahlParams(p=p, N=n, k=k, j=j))) for n in ns]


# -- sweeps ------------------------------------------------------------------

def _runner(algorithm: str, c: int, swarm: SwarmConfig, seed: int, workers):
    if algorithm == "FCM":
        cfg = FcmConfig(c=c)

        def run(vol):
            z = vol.dims[2] // 2
            res = fcm_run(vol.slice(z), cfg, seed=seed)
            return defuzzify(res.U).reshape(vol.slice(z).shape)
        return run

    if algorithm == "IFCM-PSO-2D":
        spec, backend = NeighborhoodSpec(v=1, h=1.0, mode="2d"), "sequential"
    elif algorithm == "3DPIFCM-seq":
        spec, backend = NeighborhoodSpec(v=2, h=1.0, mode="3d"), "sequential"
    else:
        spec, backend = NeighborhoodSpec(v=2, h=1.0, mode="3d"), "parallel"
    cfg = PipelineConfig(c=c, spec=spec, swarm=replace(swarm, seed=seed), backend=backend,
                         seed=seed, workers=workers if backend == "parallel" else None)

    def run(vol):
        return run_3dpifcm(vol, cfg).labels
    return run


def time_cell(run, vol, repeats: int = 3, warmup: int = 1):
    """Median wall-clock seconds of ``repeats`` runs after ``warmup`` runs."""
    for _ in range(warmup):
        run(vol)
    times = []
    labels = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        labels = run(vol)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), labels


def run_size_sweep(sizes=BENCH_SIZES, algorithms=ALGORITHMS, noise_pcts=DEFAULT_NOISE,
                   seeds=(0,), out=None, repeats: int = 3, warmup: int = 1, c: int = 4,
                   swarm: SwarmConfig | None = None, depth: int | None = None,
                   workers: int | None = None):
    """Phantom -> noise -> segment -> score, one record per (cell, seed).

    Cells run strictly one after another so they never compete for cores.
    """
    algorithms = [canonical_algorithm(a) for a in algorithms]
    swarm = swarm or SwarmConfig()
    records = []
    for size in sizes:
        clean, truth = generate_phantom(size, depth)
        z = clean.dims[2] // 2
        for noise in noise_pcts:
            for seed in seeds:
                vol = add_gaussian_noise(clean, noise, seed)
                for alg in algorithms:
                    run = _runner(alg, c, swarm, seed, workers)
                    seconds, labels = time_cell(run, vol, repeats, warmup)
                    inc = incorrect_segmentation(labels, truth.slice(z))
                    rec = BenchmarkRecord(alg, size, float(noise), seconds, inc, seed)
                    log.info("%s size=%d noise=%g seed=%d: %.4fs incS=%d",
                             alg, size, noise, seed, seconds, inc)
                    records.append(rec)
    if out is not None:
        write_records_csv(out, records)
    return records


def _g6(x: float) -> str:
    return f"{x:.6g}"


def write_records_csv(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.algorithm, r.image_size, _g6(r.noise_pct), r.seed, _g6(r.seconds),
                        r.incS])


def read_records_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [BenchmarkRecord(algorithm=row["algorithm"], image_size=int(row["size"]),
                            noise_pct=float(row["noise_pct"]), seconds=float(row["seconds"]),
                            incS=int(row["incS"]), seed=int(row["seed"]))
            for row in rows]
