"""Numba kernels for the IFCM step.

One per-voxel function computes a full membership row; the sequential and
parallel drivers differ only in how they map it over voxels and how they
reduce center/cost sums. The parallel reduction sums fixed-size chunks and
combines the chunk partials with a fixed pairwise tree, so its result does not
depend on the number of worker threads.
"""

import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # old system TBB builds only produce a warning; prefer OpenMP
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

FACTOR_FLOOR = 1e-9
G_FLOOR = 1e-12
CENTER_DENOM_FLOOR = 1e-12
REDUCE_CHUNK = 4096


@njit(cache=True)
def voxel_attraction(i, U_ext, offsets, nbr, g, q, W, H, F, sug, suq):
    c = H.shape[0]
    for j in range(c):
        H[j] = 0.0
        F[j] = 0.0
    for r in range(W.shape[0]):
        a = offsets[i, r]
        b = offsets[i, r + 1]
        sg = 0.0
        sq = 0.0
        for j in range(c):
            sug[j] = 0.0
            suq[j] = 0.0
        for t in range(a, b):
            k = nbr[t]
            gt = g[t]
            qt = np.float64(q[t])
            q2 = qt * qt
            sg += gt
            sq += q2
            for j in range(c):
                u = U_ext[k, j]
                sug[j] += u * gt
                suq[j] += u * u * q2
        if sg >= G_FLOOR:
            for j in range(c):
                H[j] += W[r] * sug[j] / sg
        if sq > 0.0:
            for j in range(c):
                F[j] += W[r] * suq[j] / sq


@njit(cache=True)
def voxel_row(i, x, centers, U_ext, offsets, nbr, g, q, W, lam, xi, inv_m1,
              U_out, d2_out, H, F, sug, suq):
    voxel_attraction(i, U_ext, offsets, nbr, g, q, W, H, F, sug, suq)
    c = centers.shape[0]
    xv = x[i]
    zero_j = -1
    dmin = np.inf
    for j in range(c):
        fac = 1.0 - lam * H[j] - xi * F[j]
        if fac < FACTOR_FLOOR:
            fac = FACTOR_FLOOR
        diff = xv - centers[j]
        d2 = diff * diff * fac
        d2_out[i, j] = d2
        if d2 <= 0.0:
            if zero_j < 0:
                zero_j = j
        elif d2 < dmin:
            dmin = d2
    if zero_j >= 0:
        for j in range(c):
            U_out[i, j] = 0.0
        U_out[i, zero_j] = 1.0
        return
    s = 0.0
    for j in range(c):
        w = (dmin / d2_out[i, j]) ** inv_m1
        U_out[i, j] = w
        s += w
    for j in range(c):
        U_out[i, j] /= s


@njit(cache=True)
def rows_sequential(x, centers, U_ext, offsets, nbr, g, q, W, lam, xi, inv_m1, U_out, d2_out):
    c = centers.shape[0]
    H = np.empty(c)
    F = np.empty(c)
    sug = np.empty(c)
    suq = np.empty(c)
    for i in range(x.shape[0]):
        voxel_row(i, x, centers, U_ext, offsets, nbr, g, q, W, lam, xi, inv_m1,
                  U_out, d2_out, H, F, sug, suq)


@njit(cache=True, parallel=True)
def rows_parallel(x, centers, U_ext, offsets, nbr, g, q, W, lam, xi, inv_m1, U_out, d2_out):
    c = centers.shape[0]
    for i in prange(x.shape[0]):
        H = np.empty(c)
        F = np.empty(c)
        sug = np.empty(c)
        suq = np.empty(c)
        voxel_row(i, x, centers, U_ext, offsets, nbr, g, q, W, lam, xi, inv_m1,
                  U_out, d2_out, H, F, sug, suq)


@njit(cache=True)
def _accumulate(x, U, d2, m, lo, hi, out):
    # out layout: [num_0..num_{c-1}, den_0..den_{c-1}, cost]
    c = U.shape[1]
    for i in range(lo, hi):
        for j in range(c):
            um = U[i, j] ** m
            out[j] += um * x[i]
            out[c + j] += um
            out[2 * c] += um * d2[i, j]


@njit(cache=True)
def reduce_sequential(x, U, d2, m):
    out = np.zeros(2 * U.shape[1] + 1)
    _accumulate(x, U, d2, m, 0, x.shape[0], out)
    return out


@njit(cache=True)
def _pairwise(partials):
    n = partials.shape[0]
    buf = partials.copy()
    while n > 1:
        half = n // 2
        for t in range(half):
            for s in range(buf.shape[1]):
                buf[t, s] = buf[2 * t, s] + buf[2 * t + 1, s]
        if n % 2 == 1:
            for s in range(buf.shape[1]):
                buf[half, s] = buf[n - 1, s]
            n = half + 1
        else:
            n = half
    return buf[0].copy()


@njit(cache=True, parallel=True)
def reduce_parallel(x, U, d2, m):
    n = x.shape[0]
    n_chunks = (n + REDUCE_CHUNK - 1) // REDUCE_CHUNK
    partials = np.zeros((max(n_chunks, 1), 2 * U.shape[1] + 1))
    for b in prange(n_chunks):
        lo = b * REDUCE_CHUNK
        hi = min(lo + REDUCE_CHUNK, n)
        _accumulate(x, U, d2, m, lo, hi, partials[b])
    return _pairwise(partials)


@njit(cache=True)
def attraction_terms(U_ext, offsets, nbr, g, q, W, c):
    n = offsets.shape[0]
    H = np.empty((n, c))
    F = np.empty((n, c))
    sug = np.empty(c)
    suq = np.empty(c)
    for i in range(n):
        voxel_attraction(i, U_ext, offsets, nbr, g, q, W, H[i], F[i], sug, suq)
    return H, F
