"""Neighborhood geometry for one target slice, computed once per slice.

Neighbors of a voxel are grouped into shells of exact Chebyshev radius
``r = 1..v``. Everything cached here depends only on the volume and the
neighborhood spec, never on the clustering parameters or memberships, so a
cache can be reused across every IFCM step and PSO evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .volume import Volume


@dataclass(frozen=True)
class NeighborhoodSpec:
    v: int = 2
    h: float = 1.0
    mode: str = "3d"

    def __post_init__(self):
        if self.v < 1:
            raise ValueError(f"shell depth v must be >= 1, got {self.v}")
        if not self.h > 0:
            raise ValueError(f"decay h must be > 0, got {self.h}")
        if self.mode not in ("2d", "3d"):
            raise ValueError(f"mode must be '2d' or '3d', got {self.mode!r}")


def shell_weights(v: int, h: float) -> np.ndarray:
    """Exponentially decaying, normalized shell weights for shells 1..v."""
    if v < 1 or not h > 0:
        raise ValueError(f"need v >= 1 and h > 0, got v={v}, h={h}")
    r = np.arange(1, v + 1, dtype=np.float64)
    # shifting the exponent by 1/h leaves the ratio unchanged and avoids underflow
    e = np.exp(-(r - 1.0) / h)
    return e / e.sum()


def shell_offsets(v: int, mode: str) -> np.ndarray:
    """All ``(dz, dy, dx, r)`` offsets with Chebyshev radius 1..v, sorted by shell."""
    rng = np.arange(-v, v + 1)
    dzs = rng if mode == "3d" else np.array([0])
    dz, dy, dx = np.meshgrid(dzs, rng, rng, indexing="ij")
    dz, dy, dx = dz.ravel(), dy.ravel(), dx.ravel()
    r = np.maximum(np.maximum(np.abs(dz), np.abs(dy)), np.abs(dx))
    keep = r > 0
    table = np.stack([dz[keep], dy[keep], dx[keep], r[keep]], axis=1)
    order = np.argsort(table[:, 3], kind="stable")
    return table[order]


def build_shells(dims, z: int, spec: NeighborhoodSpec, chunk: int = 1 << 15):
    """Neighbor shells for every voxel of slice ``z``.

    Returns ``(offsets, neighbors, deltas)``: ``offsets`` has shape
    ``(N, v + 1)`` and ``neighbors[offsets[i, r-1]:offsets[i, r]]`` are the
    flat volume indices (x fastest) of voxel ``i``'s shell ``r``; ``deltas``
    holds the matching ``(dz, dy, dx)`` offsets.
    """
    nx, ny, nz = dims
    if not 0 <= z < nz:
        raise ValueError(f"slice index {z} out of range [0, {nz})")
    table = shell_offsets(spec.v, spec.mode)
    shell_of = table[:, 3]
    n_vox = nx * ny
    tz = z + table[:, 0]
    z_ok = (tz >= 0) & (tz < nz)

    nbr_parts, delta_parts, count_parts = [], [], []
    for start in range(0, n_vox, chunk):
        ids = np.arange(start, min(start + chunk, n_vox))
        yy, xx = ids // nx, ids % nx
        ty = yy[:, None] + table[None, :, 1]
        tx = xx[:, None] + table[None, :, 2]
        valid = z_ok[None, :] & (ty >= 0) & (ty < ny) & (tx >= 0) & (tx < nx)
        flat = (tz[None, :] * ny + ty) * nx + tx
        # boolean indexing keeps rows grouped by voxel and ordered by shell
        nbr_parts.append(flat[valid].astype(np.int64))
        delta_parts.append(np.nonzero(valid)[1].astype(np.int32))
        count_parts.append(np.stack(
            [(valid & (shell_of[None, :] == r)).sum(axis=1) for r in range(1, spec.v + 1)],
            axis=1))

    neighbors = np.concatenate(nbr_parts)
    deltas = table[np.concatenate(delta_parts), :3]
    per_shell = np.concatenate(count_parts)
    offsets = np.zeros((n_vox, spec.v + 1), dtype=np.int64)
    offsets[:, 1:] = np.cumsum(per_shell, axis=1)
    base = np.concatenate([[0], np.cumsum(offsets[:, -1])[:-1]])
    offsets += base[:, None]
    return offsets, neighbors, deltas


@dataclass(frozen=True, eq=False)
class AttractionCache:
    """Cached shells, intensity differences, spatial distances and weights.

    Neighbor indices point into ``slab``, the flattened block of slices
    ``z0 .. z0 + slab_depth - 1`` that contains every neighbor. ``in_slice``
    is the slab position where the target slice begins.
    """

    dims: tuple
    z: int
    spec: NeighborhoodSpec
    slice_values: np.ndarray   # (N,) target-slice intensities
    slab: np.ndarray           # (n_slab,) intensities of all slab voxels
    z0: int
    in_slice: int
    offsets: np.ndarray        # (N, v + 1) int64
    neighbors: np.ndarray      # (M,) int32 slab indices
    g: np.ndarray              # (M,) float64 |x_i - x_k|
    q: np.ndarray              # (M,) int32 squared spatial distance
    W: np.ndarray              # (v,) shell weights

    @property
    def n_voxels(self) -> int:
        return self.offsets.shape[0]

    @cached_property
    def shell_counts(self) -> np.ndarray:
        """Neighbor count per (voxel, shell)."""
        return np.diff(self.offsets, axis=1)

    @cached_property
    def off_slice(self) -> np.ndarray:
        """Slab indices lying outside the target slice."""
        idx = np.arange(self.slab.size)
        n = self.n_voxels
        return idx[(idx < self.in_slice) | (idx >= self.in_slice + n)]

    def same_geometry(self, other: "AttractionCache") -> bool:
        return (
            self.dims == other.dims
            and self.z == other.z
            and self.spec == other.spec
            and np.array_equal(self.slab, other.slab)
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.neighbors, other.neighbors)
            and np.array_equal(self.g, other.g)
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.W, other.W)
        )


def build_cache(vol: Volume, z: int, spec: NeighborhoodSpec) -> AttractionCache:
    if not vol.normalized:
        raise ValueError("attraction cache requires a normalized volume")
    nx, ny, nz = vol.dims
    offsets, neighbors, deltas = build_shells(vol.dims, z, spec)

    if spec.mode == "3d":
        z0, z1 = max(0, z - spec.v), min(nz, z + spec.v + 1)
    else:
        z0, z1 = z, z + 1
    plane = nx * ny
    slab = np.ascontiguousarray(vol.data[z0:z1].ravel(), dtype=np.float64)
    local = neighbors - z0 * plane
    in_slice = (z - z0) * plane
    slice_values = slab[in_slice:in_slice + plane]

    owner = np.repeat(np.arange(plane), offsets[:, -1] - offsets[:, 0])
    g = np.abs(slice_values[owner] - slab[local])
    q = (deltas.astype(np.int32) ** 2).sum(axis=1, dtype=np.int32)
    return AttractionCache(
        dims=vol.dims,
        z=z,
        spec=spec,
        slice_values=slice_values.copy(),
        slab=slab,
        z0=z0,
        in_slice=in_slice,
        offsets=offsets,
        neighbors=local.astype(np.int32),
        g=g,
        q=q,
        W=shell_weights(spec.v, spec.h),
    )
