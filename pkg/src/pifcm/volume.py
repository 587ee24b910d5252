"""Volumes: raw I/O, normalization, noise, synthetic phantoms and PGM export.

Arrays are stored C-ordered with shape ``(nz, ny, nx)`` so that x varies
fastest and z slowest, matching the headerless raw file layout.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

SAMPLE_DTYPES = {
    "u8": np.dtype("<u1"),
    "u16le": np.dtype("<u2"),
    "f32le": np.dtype("<f4"),
}

DEFAULT_LEVELS = (0.1, 0.35, 0.65, 0.9)


@dataclass(frozen=True)
class Volume:
    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError(f"volume data must be 3-D, got shape {self.data.shape}")

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.data.shape
        return nx, ny, nz

    def slice(self, z: int) -> np.ndarray:
        return self.data[z]


@dataclass(frozen=True)
class LabelVolume:
    labels: np.ndarray

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.labels.shape
        return nx, ny, nz

    def slice(self, z: int) -> np.ndarray:
        return self.labels[z]


def parse_dims(text: str) -> tuple[int, int, int]:
    """Parse ``"NXxNYxNZ"`` into a dims tuple."""
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ValueError(f"dims must look like NXxNYxNZ, got {text!r}")
    dims = tuple(int(p) for p in parts)
    if min(dims) < 1:
        raise ValueError(f"dims must be positive, got {text!r}")
    return dims


def _dtype(sample_kind: str) -> np.dtype:
    try:
        return SAMPLE_DTYPES[sample_kind]
    except KeyError:
        raise ValueError(
            f"unknown sample kind {sample_kind!r}; expected one of {sorted(SAMPLE_DTYPES)}"
        ) from None


def load_raw(path, dims, sample_kind: str = "u8") -> Volume:
    """Read a headerless little-endian volume.

    Samples are converted to float64 without rescaling.
    """
    nx, ny, nz = dims
    dtype = _dtype(sample_kind)
    expected = nx * ny * nz * dtype.itemsize
    actual = os.path.getsize(path)
    if actual != expected:
        raise OSError(
            f"{path}: expected {expected} bytes for {nx}x{ny}x{nz} {sample_kind}, "
            f"file has {actual} bytes"
        )
    raw = np.fromfile(path, dtype=dtype)
    return Volume(raw.astype(np.float64).reshape(nz, ny, nx), normalized=False)


def save_raw(path, vol, sample_kind: str = "u8") -> None:
    """Write ``vol`` as a headerless raw file.

    Integer kinds scale a normalized volume to the full sample range; label
    volumes and unnormalized data are written as-is (rounded).
    """
    dtype = _dtype(sample_kind)
    if isinstance(vol, LabelVolume):
        arr = vol.labels.astype(dtype)
    elif dtype.kind == "f":
        arr = vol.data.astype(dtype)
    else:
        data = vol.data
        if vol.normalized:
            data = data * np.iinfo(dtype).max
        arr = np.clip(np.rint(data), 0, np.iinfo(dtype).max).astype(dtype)
    arr.tofile(path)


def normalize_minmax(v: Volume) -> Volume:
    lo = v.data.min()
    hi = v.data.max()
    if hi == lo:
        return Volume(np.zeros_like(v.data, dtype=np.float64), normalized=True)
    return Volume((v.data - lo) / (hi - lo), normalized=True)


def add_gaussian_noise(v: Volume, sigma_pct: float, seed: int) -> Volume:
    """Add zero-mean Gaussian noise with std ``sigma_pct`` percent of [0, 1].

    The result is clamped back into [0, 1].
    """
    if sigma_pct < 0:
        raise ValueError(f"sigma_pct must be non-negative, got {sigma_pct}")
    if not v.normalized:
        raise ValueError("noise is defined on normalized volumes; call normalize_minmax first")
    if sigma_pct == 0:
        return Volume(v.data.copy(), normalized=True)
    rng = np.random.default_rng(seed)
    noisy = v.data + rng.normal(0.0, sigma_pct / 100.0, size=v.data.shape)
    return Volume(np.clip(noisy, 0.0, 1.0), normalized=True)


def _margins(extent: int, n_regions: int) -> list[int]:
    return [(k * extent) // (2 * n_regions) for k in range(n_regions)]


def generate_phantom(size: int, depth: int | None = None, levels=DEFAULT_LEVELS):
    """Nested axis-aligned cuboids ("cube within a cube").

    Region ``k`` (0 = outermost) is filled with ``levels[k]`` and labeled ``k``.
    Returns ``(Volume, LabelVolume)``.
    """
    levels = tuple(float(x) for x in levels)
    n = len(levels)
    if depth is None:
        depth = max(3, size // 8)
    if n < 1:
        raise ValueError("need at least one region level")
    if size < 8 or size < 2 * n:
        raise ValueError(f"size {size} too small to nest {n} regions (need >= max(8, {2 * n}))")
    if depth < 3:
        raise ValueError(f"depth must be >= 3, got {depth}")
    if any(not 0.0 <= x <= 1.0 for x in levels):
        raise ValueError("levels must lie in [0, 1]")

    labels = np.zeros((depth, size, size), dtype=np.int64)
    mxy = _margins(size, n)
    mz = _margins(depth, n)
    for k in range(1, n):
        a, b = mxy[k], size - mxy[k]
        labels[mz[k]:depth - mz[k], a:b, a:b] = k
    data = np.asarray(levels, dtype=np.float64)[labels]
    return Volume(data, normalized=True), LabelVolume(labels)


def export_slice_pgm(v, z: int, path, n_labels: int | None = None) -> None:
    """Write slice ``z`` as a binary (P5) PGM with maxval 255.

    Intensities in [0, 1] are scaled to [0, 255]; labels ``k`` of a
    :class:`LabelVolume` map to ``round(255 * k / (c - 1))``.
    """
    if isinstance(v, LabelVolume):
        arr = v.labels
    else:
        arr = v.data
    nz = arr.shape[0]
    if not 0 <= z < nz:
        raise ValueError(f"slice index {z} out of range [0, {nz})")
    img = arr[z]
    if isinstance(v, LabelVolume):
        c = n_labels if n_labels is not None else int(v.labels.max()) + 1
        scale = 255.0 / (c - 1) if c > 1 else 0.0
        pix = np.rint(img * scale)
    else:
        pix = np.rint(np.clip(img, 0.0, 1.0) * 255.0)
    pix = pix.astype(np.uint8)
    ny, nx = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary P5 PGM written by :func:`export_slice_pgm`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            pos = blob.index(b"\n", pos) + 1
            continue
        end = pos
        while not blob[end:end + 1].isspace():
            end += 1
        tokens.append(blob[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    nx, ny, maxval = (int(t) for t in tokens[1:])
    pos += 1
    return np.frombuffer(blob[pos:pos + nx * ny], dtype=np.uint8).reshape(ny, nx)
