import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from pifcm.volume import (
    LabelVolume,
    Volume,
    add_gaussian_noise,
    export_slice_pgm,
    generate_phantom,
    load_raw,
    normalize_minmax,
    parse_dims,
    read_pgm,
    save_raw,
)


def test_load_raw_u8_identity(tmp_path):
    path = tmp_path / "v.raw"
    path.write_bytes(bytes([0, 128, 255, 64]))
    vol = load_raw(path, (2, 2, 1), "u8")
    assert vol.dims == (2, 2, 1)
    assert not vol.normalized
    assert vol.data.ravel().tolist() == [0, 128, 255, 64]


def test_load_raw_u16_and_f32(tmp_path):
    a = np.array([1, 300, 65535, 7], dtype="<u2")
    a.tofile(tmp_path / "a.raw")
    assert load_raw(tmp_path / "a.raw", (4, 1, 1), "u16le").data.ravel().tolist() == a.tolist()
    b = np.array([0.25, -1.5, 3.0], dtype="<f4")
    b.tofile(tmp_path / "b.raw")
    assert load_raw(tmp_path / "b.raw", (1, 1, 3), "f32le").data.ravel().tolist() == b.tolist()


def test_load_raw_x_fastest(tmp_path):
    path = tmp_path / "v.raw"
    path.write_bytes(bytes(range(12)))
    vol = load_raw(path, (3, 2, 2))
    assert vol.data[1, 0, 2] == 1 * 6 + 0 * 3 + 2


def test_load_raw_size_mismatch(tmp_path):
    path = tmp_path / "v.raw"
    path.write_bytes(bytes(5))
    with pytest.raises(OSError, match="expected 4 bytes.*has 5 bytes"):
        load_raw(path, (2, 2, 1))


def test_load_raw_brainweb_sized(tmp_path):
    path = tmp_path / "bw.raw"
    with open(path, "wb") as fh:
        fh.truncate(181 * 217 * 181)
    vol = load_raw(path, (181, 217, 181))
    assert vol.data.size == 7_109_137


def test_parse_dims():
    assert parse_dims("32x16x4") == (32, 16, 4)
    with pytest.raises(ValueError):
        parse_dims("32x16")


@pytest.mark.parametrize("values, expected", [
    ([0, 255], [0.0, 1.0]),
    ([5, 5, 5], [0.0, 0.0, 0.0]),
    ([10, 20, 30], [0.0, 0.5, 1.0]),
])
def test_normalize_examples(values, expected):
    vol = Volume(np.array(values, dtype=float).reshape(1, 1, -1))
    out = normalize_minmax(vol)
    assert out.normalized
    assert out.data.ravel().tolist() == expected


@given(arrays(np.float64, (2, 3, 4), elements=st.floats(-1e6, 1e6)))
def test_normalize_idempotent_and_in_range(data):
    once = normalize_minmax(Volume(data))
    twice = normalize_minmax(once)
    assert np.array_equal(once.data, twice.data)
    assert once.data.min() >= 0.0 and once.data.max() <= 1.0


def test_noise_zero_sigma_identity():
    vol, _ = generate_phantom(16)
    assert np.array_equal(add_gaussian_noise(vol, 0, seed=3).data, vol.data)


def test_noise_deterministic():
    vol, _ = generate_phantom(16)
    a = add_gaussian_noise(vol, 5, seed=9)
    b = add_gaussian_noise(vol, 5, seed=9)
    c = add_gaussian_noise(vol, 5, seed=10)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_noise_statistics():
    vol = Volume(np.full((8, 64, 64), 0.5), normalized=True)
    out = add_gaussian_noise(vol, 5, seed=0)
    diff = out.data - vol.data
    interior = (out.data > 0.0) & (out.data < 1.0)
    assert abs(diff[interior].mean()) < 0.002
    assert abs(diff[interior].std() - 0.05) / 0.05 < 0.05
    assert out.data.min() >= 0.0 and out.data.max() <= 1.0


def test_noise_rejects_negative_and_unnormalized():
    vol, _ = generate_phantom(16)
    with pytest.raises(ValueError):
        add_gaussian_noise(vol, -1, seed=0)
    with pytest.raises(ValueError):
        add_gaussian_noise(Volume(vol.data * 255), 3, seed=0)


def test_phantom_32():
    vol, truth = generate_phantom(32)
    assert vol.normalized
    assert vol.dims == (32, 32, 4)
    assert len(np.unique(vol.data)) == 4
    assert set(np.unique(truth.labels)) == {0, 1, 2, 3}


@pytest.mark.parametrize("size", [8, 17, 32, 55, 95])
def test_phantom_symmetric_and_partitioning(size):
    vol, truth = generate_phantom(size)
    lab = truth.labels
    assert lab.shape == vol.data.shape
    assert np.array_equal(lab, lab[::-1, :, :])
    assert np.array_equal(lab, lab[:, ::-1, :])
    assert np.array_equal(lab, lab[:, :, ::-1])
    assert np.array_equal(lab, lab.transpose(0, 2, 1))
    # one label per voxel and each region filled by its own level
    levels = np.array([0.1, 0.35, 0.65, 0.9])
    assert np.array_equal(vol.data, levels[lab])
    center = vol.slice(vol.dims[2] // 2)
    assert len(np.unique(center)) == 4


def test_phantom_rejects_small():
    with pytest.raises(ValueError):
        generate_phantom(7)
    with pytest.raises(ValueError):
        generate_phantom(8, levels=(0.1, 0.2, 0.3, 0.4, 0.5))
    with pytest.raises(ValueError):
        generate_phantom(16, depth=2)


def test_pgm_intensity_endpoints(tmp_path):
    checker = (np.indices((4, 4)).sum(axis=0) % 2).astype(float)
    vol = Volume(checker[None], normalized=True)
    export_slice_pgm(vol, 0, tmp_path / "c.pgm")
    blob = (tmp_path / "c.pgm").read_bytes()
    assert blob.startswith(b"P5\n4 4\n255\n")
    assert set(blob[len(b"P5\n4 4\n255\n"):]) == {0, 255}


def test_pgm_three_labels(tmp_path):
    lab = LabelVolume(np.array([[[0, 1, 2]]]))
    export_slice_pgm(lab, 0, tmp_path / "l.pgm")
    # label k -> round(255 k / (c - 1))
    assert read_pgm(tmp_path / "l.pgm").ravel().tolist() == [0, 128, 255]


def test_pgm_bounds(tmp_path):
    vol, _ = generate_phantom(8)
    with pytest.raises(ValueError):
        export_slice_pgm(vol, vol.dims[2], tmp_path / "x.pgm")


def test_raw_roundtrip(tmp_path):
    vol, truth = generate_phantom(16)
    save_raw(tmp_path / "v.raw", vol, "f32le")
    back = load_raw(tmp_path / "v.raw", vol.dims, "f32le")
    assert np.allclose(back.data, vol.data, atol=1e-7)
    save_raw(tmp_path / "t.raw", truth, "u8")
    assert np.array_equal(load_raw(tmp_path / "t.raw", vol.dims).data, truth.labels)
