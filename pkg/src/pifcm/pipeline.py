"""End-to-end 3DPIFCM segmentation of one slice."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numba
import numpy as np

from .attraction import NeighborhoodSpec, build_cache
from .fcm import FcmConfig, fcm_run, init_centers
from .ifcm import BACKENDS, AttractionParams, ifcm_run
from .pso import SwarmConfig, pso_optimize
from .volume import Volume, normalize_minmax

FINAL_MAX_ITER = 100


@dataclass(frozen=True)
class PipelineConfig:
    c: int = 4
    m: float = 2.0
    eps: float = 1e-4
    z: int | None = None
    spec: NeighborhoodSpec = field(default_factory=NeighborhoodSpec)
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    backend: str = "parallel"
    seed: int = 0
    fcm_max_iter: int = 300
    final_max_iter: int = FINAL_MAX_ITER
    # skip the swarm and run the final IFCM at these (lambda, xi)
    fixed_params: tuple | None = None
    workers: int | None = None

    def __post_init__(self):
        FcmConfig(self.c, self.m, self.eps, self.fcm_max_iter)
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.fixed_params is not None:
            AttractionParams(*self.fixed_params)
        if self.workers is not None and self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class SegmentationResult:
    centers: np.ndarray
    U: np.ndarray
    labels: np.ndarray
    lambda_star: float
    xi_star: float
    cost: float
    timings: dict
    iterations: dict
    z: int
    total_seconds: float = 0.0


def defuzzify(U) -> np.ndarray:
    """Per-row argmax; ties go to the lowest cluster index."""
    return np.argmax(np.asarray(U), axis=1)


@contextmanager
def _threads(n):
    if n is None:
        yield
        return
    old = numba.get_num_threads()
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    try:
        yield
    finally:
        numba.set_num_threads(old)


def run_3dpifcm(vol: Volume, cfg: PipelineConfig) -> SegmentationResult:
    timings = {}
    t_start = time.perf_counter()

    def lap(name, t0):
        timings[name] = time.perf_counter() - t0

    z = cfg.z if cfg.z is not None else vol.dims[2] // 2
    if not 0 <= z < vol.dims[2]:
        raise ValueError(f"slice index {z} out of range [0, {vol.dims[2]})")

    with _threads(cfg.workers):
        t0 = time.perf_counter()
        vol = normalize_minmax(vol)
        lap("normalize", t0)

        t0 = time.perf_counter()
        cache = build_cache(vol, z, cfg.spec)
        lap("cache", t0)

        slice_ = vol.slice(z)
        t0 = time.perf_counter()
        centers0 = init_centers(slice_, cfg.c, cfg.seed)
        init = fcm_run(slice_, FcmConfig(cfg.c, cfg.m, cfg.eps, cfg.fcm_max_iter),
                       centers0=centers0)
        lap("fcm_init", t0)

        iterations = {"fcm_init": init.n_iter}
        t0 = time.perf_counter()
        if cfg.fixed_params is None:
            swarm_cfg = cfg.swarm
            pso = pso_optimize(slice_, init.U, init.centers, cache, cfg.m, swarm_cfg,
                               backend=cfg.backend)
            lam, xi, U1, C1 = pso.lam, pso.xi, pso.U, pso.centers
            iterations["pso"] = pso.n_iter
            iterations["pso_evals"] = pso.n_evals
        else:
            lam, xi = (float(p) for p in cfg.fixed_params)
            U1, C1 = init.U, init.centers
            iterations["pso"] = 0
            iterations["pso_evals"] = 0
        lap("pso", t0)

        t0 = time.perf_counter()
        final = ifcm_run(slice_, U1, C1, cache, AttractionParams(lam, xi), cfg.m, cfg.eps,
                         cfg.final_max_iter, backend=cfg.backend)
        lap("ifcm_final", t0)
        iterations["ifcm_final"] = final.n_iter

        t0 = time.perf_counter()
        labels = defuzzify(final.U).reshape(slice_.shape)
        lap("defuzzify", t0)

    total = time.perf_counter() - t_start
    return SegmentationResult(
        centers=final.centers, U=final.U, labels=labels, lambda_star=lam, xi_star=xi,
        cost=final.cost, timings=timings, iterations=iterations, z=z, total_seconds=total,
    )
