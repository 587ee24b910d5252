"""Particle swarm search over the attraction weights (lambda, xi) in [0, 1]^2.

Positions live in the box [0, 1]^2 and, by default, also satisfy
``lambda + xi <= max_sum`` with ``max_sum = 1``: there the attraction factor
``1 - lambda H - xi F`` can never go negative for H, F in [0, 1]. Without the
cap the one-step cost is minimized by driving both weights to 1, where every
distance collapses onto the clamp floor.

Velocity rule has no inertia weight: ``v <- v + p1 (pbest - x) + p2 (lbest - x)``
with fresh ``p1, p2 ~ U(0, 1)`` per particle per move, each component clamped
to ``VMAX``. Local bests come from a ring of ``ring_k`` index neighbors on
each side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .attraction import AttractionCache
from .ifcm import AttractionParams, extended_membership, ifcm_step

DIM = 2
VMAX = 0.5
INIT_VMAX = 0.1


@dataclass(frozen=True)
class SwarmConfig:
    P: int = 10
    ring_k: int = 1
    max_iter: int = 30
    tol: float = 1e-4
    patience: int = 3
    seed: int = 0
    max_sum: float | None = 1.0

    def __post_init__(self):
        if self.P < 1:
            raise ValueError(f"P must be >= 1, got {self.P}")
        if self.ring_k < 1:
            raise ValueError(f"ring_k must be >= 1, got {self.ring_k}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.max_sum is not None and not 0 < self.max_sum <= 2:
            raise ValueError(f"max_sum must lie in (0, 2], got {self.max_sum}")


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    rng: np.random.Generator
    pbest: float = np.inf
    pbest_pos: np.ndarray | None = None
    fitness: float = np.inf


@dataclass
class Swarm:
    particles: list
    ring_k: int
    max_sum: float | None = 1.0
    best: float = np.inf
    best_pos: np.ndarray | None = None
    history: list = field(default_factory=list)
    n_evals: int = 0


def project(pos, max_sum: float | None) -> np.ndarray:
    """Clamp into [0, 1]^2, then pull back onto ``lambda + xi <= max_sum``."""
    pos = np.clip(pos, 0.0, 1.0)
    if max_sum is not None and pos.sum() > max_sum:
        pos = np.clip(pos - (pos.sum() - max_sum) / DIM, 0.0, 1.0)
        # one coordinate may have hit 0; the other then absorbs the rest
        if pos.sum() > max_sum:
            pos = np.minimum(pos, max_sum)
    return pos


def init_swarm(cfg: SwarmConfig) -> Swarm:
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.P)
    particles = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        pos = rng.uniform(0.0, 1.0, DIM)
        if cfg.max_sum == 1.0 and pos.sum() > 1.0:
            # reflection keeps the draw uniform over the triangle
            pos = 1.0 - pos
        pos = project(pos, cfg.max_sum)
        vel = rng.uniform(-INIT_VMAX, INIT_VMAX, DIM)
        particles.append(Particle(position=pos, velocity=vel, rng=rng))
    return Swarm(particles=particles, ring_k=cfg.ring_k, max_sum=cfg.max_sum)


def update_velocity(particle: Particle, lbest_pos, rng=None, p1=None, p2=None) -> np.ndarray:
    """New velocity for ``particle``. ``p1``/``p2`` override the random draws."""
    rng = particle.rng if rng is None else rng
    if p1 is None:
        p1 = rng.uniform()
    if p2 is None:
        p2 = rng.uniform()
    x = particle.position
    v = particle.velocity + p1 * (particle.pbest_pos - x) + p2 * (np.asarray(lbest_pos) - x)
    return np.clip(v, -VMAX, VMAX)


def local_best(swarm: Swarm, i: int):
    """``(fitness, position)`` of the best personal best in particle i's ring."""
    P = len(swarm.particles)
    best, pos = np.inf, None
    for d in range(-swarm.ring_k, swarm.ring_k + 1):
        p = swarm.particles[(i + d) % P]
        if p.pbest < best:
            best, pos = p.pbest, p.pbest_pos
    return best, pos


def step_swarm(swarm: Swarm, fitness: Callable[[float, float], float]) -> Swarm:
    """Evaluate, update personal and local bests, then move every particle."""
    for p in swarm.particles:
        f = float(fitness(float(p.position[0]), float(p.position[1])))
        swarm.n_evals += 1
        p.fitness = f
        if f < p.pbest:
            p.pbest = f
            p.pbest_pos = p.position.copy()
        if f < swarm.best:
            swarm.best = f
            swarm.best_pos = p.position.copy()
    swarm.history.append(swarm.best)

    lbests = [local_best(swarm, i)[1] for i in range(len(swarm.particles))]
    for p, lpos in zip(swarm.particles, lbests):
        if p.pbest_pos is None:
            # fitness was nan/inf everywhere so far; nothing to pull toward
            continue
        p.velocity = update_velocity(p, lpos)
        p.position = project(p.position + p.velocity, swarm.max_sum)
    return swarm


@dataclass
class PsoResult:
    lam: float
    xi: float
    U: np.ndarray
    centers: np.ndarray
    cost: float
    n_iter: int
    n_evals: int
    history: list


def pso_optimize(slice_, U0, C0, cache: AttractionCache, m: float, cfg: SwarmConfig,
                 backend: str = "parallel") -> PsoResult:
    """Search (lambda, xi) minimizing the cost of one IFCM step from ``(U0, C0)``.

    Stops when the global best changes by less than ``tol`` for ``patience``
    consecutive iterations, or after ``max_iter`` iterations.
    """
    U0 = np.ascontiguousarray(U0, dtype=np.float64)
    C0 = np.ascontiguousarray(C0, dtype=np.float64)
    U_ext = extended_membership(U0, C0, cache, m)
    best = {}

    def fitness(lam, xi):
        step = ifcm_step(slice_, U0, C0, cache, AttractionParams(lam, xi), m,
                         backend=backend, U_ext=U_ext)
        if not best or step.cost < best["cost"]:
            best.update(cost=step.cost, lam=lam, xi=xi, U=step.U, centers=step.centers)
        return step.cost

    swarm = init_swarm(cfg)
    quiet = 0
    n_iter = 0
    for n_iter in range(1, cfg.max_iter + 1):
        prev = swarm.best
        step_swarm(swarm, fitness)
        if np.isfinite(prev) and abs(prev - swarm.best) < cfg.tol:
            quiet += 1
            if quiet >= cfg.patience:
                break
        else:
            quiet = 0
    return PsoResult(lam=best["lam"], xi=best["xi"], U=best["U"], centers=best["centers"],
                     cost=best["cost"], n_iter=n_iter, n_evals=swarm.n_evals,
                     history=list(swarm.history))
