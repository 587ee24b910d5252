"""Baseline fuzzy c-means on a single slice."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Denominators below this keep the previous center.
CENTER_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class FcmConfig:
    c: int = 4
    m: float = 2.0
    eps: float = 1e-4
    max_iter: int = 300

    def __post_init__(self):
        if self.c < 2:
            raise ValueError(f"c must be >= 2, got {self.c}")
        if not self.m > 1:
            raise ValueError(f"fuzziness m must be > 1, got {self.m}")
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class FcmResult:
    centers: np.ndarray
    U: np.ndarray
    costs: list = field(default_factory=list)
    n_iter: int = 0


def _fallback_centers(x: np.ndarray, c: int) -> np.ndarray:
    lo, hi = float(x.min()), float(x.max())
    if hi - lo < 1e-12:
        lo, hi = 0.0, 1.0
    return np.linspace(lo, hi, c)


def _em_1d(values, w, mu, var_floor, max_iter):
    """Weighted EM for a 1-D Gaussian mixture; returns ``(means, log_likelihood)``."""
    c = mu.size
    mu = mu.astype(np.float64).copy()
    var = np.full(c, max(float(np.sum(w * (values - np.sum(w * values)) ** 2)) / c, var_floor))
    pi = np.full(c, 1.0 / c)
    for _ in range(max_iter):
        diff = values[:, None] - mu[None, :]
        logp = -0.5 * diff**2 / var - 0.5 * np.log(2 * np.pi * var) + np.log(pi)
        top = logp.max(axis=1, keepdims=True)
        resp = np.exp(logp - top)
        resp /= resp.sum(axis=1, keepdims=True)
        nk = np.maximum((w[:, None] * resp).sum(axis=0), 1e-300)
        mu_new = (w[:, None] * resp * values[:, None]).sum(axis=0) / nk
        var = np.maximum((w[:, None] * resp * (values[:, None] - mu_new) ** 2).sum(axis=0) / nk,
                         var_floor)
        pi = np.maximum(nk / nk.sum(), 1e-300)
        done = np.max(np.abs(mu_new - mu)) < 1e-10
        mu = mu_new
        if done:
            break
    diff = values[:, None] - mu[None, :]
    logp = -0.5 * diff**2 / var - 0.5 * np.log(2 * np.pi * var) + np.log(pi)
    top = logp.max(axis=1)
    loglik = float(np.sum(w * (top + np.log(np.exp(logp - top[:, None]).sum(axis=1)))))
    return np.sort(mu), loglik


def init_centers(slice_, c: int, seed: int = 0, max_em_iter: int = 100,
                 restarts: int = 3) -> np.ndarray:
    """Initial centers from a 1-D Gaussian mixture fit on the intensity histogram.

    EM (at most ``max_em_iter`` iterations) is started from the k-quantiles
    of the intensities, from evenly spaced means, and from ``restarts`` seeded
    random picks of distinct intensities; the fit with the highest likelihood
    wins. Falls back to evenly spaced centers when the slice has fewer than
    ``c`` distinct intensities.
    """
    x = np.asarray(slice_, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("cannot initialize centers on an empty slice")
    values, counts = np.unique(x, return_counts=True)
    if values.size < c:
        return _fallback_centers(x, c)
    if values.size > 256:
        counts, edges = np.histogram(x, bins=256)
        values = 0.5 * (edges[:-1] + edges[1:])
        keep = counts > 0
        values, counts = values[keep], counts[keep]
    w = counts / counts.sum()
    spread = float(values.max() - values.min())
    var_floor = max((spread * 1e-3) ** 2, 1e-12)

    starts = [np.quantile(x, (np.arange(c) + 0.5) / c),
              values.min() + spread * (np.arange(c) + 0.5) / c]
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        starts.append(np.sort(rng.choice(values, size=min(c, values.size), replace=False)))

    best, best_ll = None, -np.inf
    for mu0 in starts:
        if np.unique(mu0).size < c:
            continue
        mu, ll = _em_1d(values, w, mu0, var_floor, max_em_iter)
        if ll > best_ll and np.unique(mu).size == c:
            best, best_ll = mu, ll
    if best is None:
        return _fallback_centers(x, c)
    return best


def membership_from_d2(d2: np.ndarray, m: float) -> np.ndarray:
    """Membership rows from squared distances, shape ``(N, c)``.

    Rows with a zero distance are crisp at the first such cluster.
    """
    d2 = np.asarray(d2, dtype=np.float64)
    zero = d2 <= 0.0
    safe = np.where(zero, 1.0, d2)
    # scale by the row minimum so (dmin/d)^(1/(m-1)) stays in (0, 1]
    dmin = safe.min(axis=1, keepdims=True)
    w = (dmin / safe) ** (1.0 / (m - 1.0))
    U = w / w.sum(axis=1, keepdims=True)
    crisp_rows = zero.any(axis=1)
    if crisp_rows.any():
        first = zero[crisp_rows].argmax(axis=1)
        U[crisp_rows] = 0.0
        U[np.flatnonzero(crisp_rows), first] = 1.0
    return U


def fcm_membership(slice_, centers, m: float) -> np.ndarray:
    x = np.asarray(slice_, dtype=np.float64).ravel()
    centers = np.asarray(centers, dtype=np.float64)
    d2 = (x[:, None] - centers[None, :]) ** 2
    return membership_from_d2(d2, m)


def fcm_centers(slice_, U, m: float, previous=None) -> np.ndarray:
    x = np.asarray(slice_, dtype=np.float64).ravel()
    um = np.asarray(U, dtype=np.float64) ** m
    num = um.T @ x
    den = um.sum(axis=0)
    out = np.empty_like(den)
    ok = den >= CENTER_DENOM_FLOOR
    out[ok] = num[ok] / den[ok]
    if not ok.all():
        if previous is None:
            raise ValueError("empty cluster and no previous centers to fall back on")
        out[~ok] = np.asarray(previous, dtype=np.float64)[~ok]
    return out


def fcm_cost(slice_, U, centers, m: float) -> float:
    x = np.asarray(slice_, dtype=np.float64).ravel()
    d2 = (x[:, None] - np.asarray(centers)[None, :]) ** 2
    return float(np.sum(np.asarray(U) ** m * d2))


def fcm_step(slice_, centers, m: float):
    """One membership-then-centers update; returns ``(U, centers, cost)``.

    The cost uses the new memberships with the distances that produced them.
    """
    U = fcm_membership(slice_, centers, m)
    cost = fcm_cost(slice_, U, centers, m)
    new_centers = fcm_centers(slice_, U, m, previous=centers)
    return U, new_centers, cost


def fcm_run(slice_, cfg: FcmConfig, seed: int = 0, centers0=None) -> FcmResult:
    """Alternate membership and center updates until ``max|dU| < eps``."""
    x = np.asarray(slice_, dtype=np.float64)
    centers = (np.asarray(centers0, dtype=np.float64) if centers0 is not None
               else init_centers(x, cfg.c, seed))
    result = FcmResult(centers=centers, U=None)
    U_prev = None
    for it in range(1, cfg.max_iter + 1):
        U, centers, cost = fcm_step(x, centers, cfg.m)
        result.costs.append(cost)
        result.n_iter = it
        converged = U_prev is not None and np.max(np.abs(U - U_prev)) < cfg.eps
        U_prev = U
        if converged:
            break
    result.centers = centers
    result.U = U_prev
    return result
