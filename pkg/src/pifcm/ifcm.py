"""IFCM step: attraction-discounted distances, membership/center updates, cost.

Neighbor memberships are always read from the previous iteration (Jacobi
style), so each voxel's new membership row is an independent work item.
Neighbors outside the target slice have no membership row of their own; they
take the plain fuzzy c-means membership of their intensity with respect to
the current centers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .attraction import AttractionCache
from .fcm import fcm_membership

BACKENDS = ("sequential", "parallel")


@dataclass(frozen=True)
class AttractionParams:
    lam: float = 0.0
    xi: float = 0.0

    def __post_init__(self):
        for name in ("lam", "xi"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")


@dataclass
class StepResult:
    U: np.ndarray
    centers: np.ndarray
    cost: float


@dataclass
class RunResult(StepResult):
    n_iter: int = 0
    costs: list = field(default_factory=list)


def extended_membership(U, centers, cache: AttractionCache, m: float) -> np.ndarray:
    """Membership rows for every slab voxel, shape ``(n_slab, c)``."""
    U = np.ascontiguousarray(U, dtype=np.float64)
    n_slab = cache.slab.size
    if n_slab == cache.n_voxels:
        return U
    out = np.empty((n_slab, U.shape[1]))
    out[cache.in_slice:cache.in_slice + cache.n_voxels] = U
    off = cache.off_slice
    out[off] = fcm_membership(cache.slab[off], centers, m)
    return out


def _shell_ratio(i, j, U_ext, cache, weight_fn, value_fn, floor):
    total = 0.0
    for r in range(cache.spec.v):
        a, b = cache.offsets[i, r], cache.offsets[i, r + 1]
        k = cache.neighbors[a:b]
        w = weight_fn(a, b)
        den = w.sum()
        if den < floor or den == 0.0:
            continue
        total += cache.W[r] * float(np.sum(value_fn(U_ext[k, j]) * w)) / den
    return total


def feature_attraction(i: int, j: int, U_ext, cache: AttractionCache) -> float:
    """Shell-weighted average of neighbor memberships in cluster ``j``,
    each neighbor weighted by its intensity difference to voxel ``i``."""
    return _shell_ratio(i, j, U_ext, cache, lambda a, b: cache.g[a:b],
                        lambda u: u, K.G_FLOOR)


def neighborhood_attraction(i: int, j: int, U_ext, cache: AttractionCache) -> float:
    """Shell-weighted average of squared neighbor memberships, weighted by
    squared spatial distance."""
    return _shell_ratio(i, j, U_ext, cache,
                        lambda a, b: cache.q[a:b].astype(np.float64) ** 2,
                        lambda u: u * u, 0.0)


def attraction_terms(U_ext, cache: AttractionCache):
    """``(H, F)`` arrays of shape ``(N, c)`` for every slice voxel."""
    U_ext = np.ascontiguousarray(U_ext, dtype=np.float64)
    return K.attraction_terms(U_ext, cache.offsets, cache.neighbors, cache.g,
                              cache.q, cache.W, U_ext.shape[1])


def attraction_distance(x, c, H, F, params: AttractionParams):
    factor = np.maximum(1.0 - params.lam * np.asarray(H) - params.xi * np.asarray(F),
                        K.FACTOR_FLOOR)
    out = (np.asarray(x) - np.asarray(c)) ** 2 * factor
    return float(out) if np.ndim(out) == 0 else out


def _check_backend(backend: str) -> None:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")


def ifcm_step(slice_, U, centers, cache: AttractionCache, params: AttractionParams,
              m: float, backend: str = "parallel", U_ext=None) -> StepResult:
    """Memberships from attraction distances, then centers, then cost.

    ``U_ext`` may be passed when the caller already built the extended
    membership table for ``(U, centers)``.
    """
    _check_backend(backend)
    x = np.ascontiguousarray(np.asarray(slice_, dtype=np.float64).ravel())
    if x.size != cache.n_voxels or not np.array_equal(x, cache.slice_values):
        raise ValueError("slice does not match the attraction cache")
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    c = centers.size
    if U_ext is None:
        U_ext = extended_membership(U, centers, cache, m)

    U_new = np.empty((x.size, c))
    d2 = np.empty((x.size, c))
    args = (x, centers, U_ext, cache.offsets, cache.neighbors, cache.g, cache.q, cache.W,
            float(params.lam), float(params.xi), 1.0 / (m - 1.0), U_new, d2)
    if backend == "parallel":
        K.rows_parallel(*args)
        sums = K.reduce_parallel(x, U_new, d2, float(m))
    else:
        K.rows_sequential(*args)
        sums = K.reduce_sequential(x, U_new, d2, float(m))

    num, den, cost = sums[:c], sums[c:2 * c], sums[2 * c]
    ok = den >= K.CENTER_DENOM_FLOOR
    new_centers = np.where(ok, num / np.where(ok, den, 1.0), centers)
    return StepResult(U=U_new, centers=new_centers, cost=float(cost))


def ifcm_run(slice_, U0, C0, cache: AttractionCache, params: AttractionParams, m: float,
             eps: float, max_iter: int = 100, backend: str = "parallel") -> RunResult:
    """Iterate :func:`ifcm_step` until ``max|dU| < eps`` or ``max_iter`` steps."""
    U = np.asarray(U0, dtype=np.float64)
    centers = np.asarray(C0, dtype=np.float64)
    res = RunResult(U=U, centers=centers, cost=float("nan"))
    for it in range(1, max_iter + 1):
        step = ifcm_step(slice_, U, centers, cache, params, m, backend)
        delta = np.max(np.abs(step.U - U))
        U, centers = step.U, step.centers
        res.costs.append(step.cost)
        res.n_iter = it
        if delta < eps:
            break
    res.U, res.centers, res.cost = U, centers, res.costs[-1]
    return res
