import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from pifcm.bench import incorrect_segmentation
from pifcm.fcm import (
    FcmConfig,
    fcm_centers,
    fcm_membership,
    fcm_run,
    fcm_step,
    init_centers,
)
from pifcm.pipeline import defuzzify
from pifcm.volume import generate_phantom


def test_config_validation():
    with pytest.raises(ValueError):
        FcmConfig(m=1.0)
    with pytest.raises(ValueError):
        FcmConfig(c=1)
    with pytest.raises(ValueError):
        FcmConfig(eps=0)
    with pytest.raises(ValueError):
        FcmConfig(max_iter=0)


def test_init_two_modes():
    img = np.where(np.arange(100).reshape(10, 10) < 37, 0.2, 0.8)
    assert np.allclose(init_centers(img, 2, seed=0), [0.2, 0.8], atol=1e-6)


def test_init_constant_fallback():
    centers = init_centers(np.full((4, 4), 0.3), 2, seed=0)
    assert centers.size == 2 and centers[0] < centers[1]


def test_init_too_few_distinct_values():
    img = np.array([[0.1, 0.9], [0.1, 0.9]])
    assert np.allclose(init_centers(img, 3, seed=0), [0.1, 0.5, 0.9])


def test_init_deterministic(rng):
    img = rng.uniform(size=(20, 20))
    assert np.array_equal(init_centers(img, 4, seed=5), init_centers(img, 4, seed=5))


def test_init_recovers_mixture(rng):
    x = np.concatenate([rng.normal(0.2, 0.02, 2000), rng.normal(0.5, 0.02, 2000),
                        rng.normal(0.85, 0.02, 2000)])
    centers = init_centers(x.reshape(60, 100), 3, seed=0)
    assert np.allclose(centers, [0.2, 0.5, 0.85], atol=0.01)


def test_membership_examples():
    assert np.allclose(fcm_membership([0.5], [0.25, 0.75], 2), [[0.5, 0.5]])
    # 1 / (1 + (0.25 / 0.75)^2)
    assert np.allclose(fcm_membership([0.25], [0.0, 1.0], 2), [[0.9, 0.1]], atol=1e-15)
    assert fcm_membership([0.75], [0.25, 0.75, 0.9], 2).tolist() == [[0.0, 1.0, 0.0]]


def test_membership_zero_distance_lowest_index():
    assert fcm_membership([0.5], [0.5, 0.5], 2).tolist() == [[1.0, 0.0]]


def test_centers_examples():
    U = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert np.allclose(fcm_centers([0.2, 0.8], U, 2), [0.2, 0.8])
    U = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert fcm_centers([0.0, 1.0], U, 2)[0] == pytest.approx(0.5)
    assert fcm_centers([0.3], [[1.0, 0.0]], 2, previous=[0.0, 0.7]).tolist() == [0.3, 0.7]


def test_centers_empty_cluster_keeps_previous():
    U = np.array([[1.0, 0.0], [1.0, 0.0]])
    assert fcm_centers([0.1, 0.3], U, 2, previous=[0.5, 0.9])[1] == 0.9


@given(
    x=arrays(np.float64, 30, elements=st.floats(0, 1)),
    centers=arrays(np.float64, st.integers(2, 5), elements=st.floats(0, 1)),
    m=st.sampled_from([1.5, 2.0, 3.0]),
)
def test_membership_row_stochastic(x, centers, m):
    U = fcm_membership(x, centers, m)
    assert np.all(U >= 0) and np.all(U <= 1)
    assert np.allclose(U.sum(axis=1), 1.0, atol=1e-9)


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
def test_cost_history_non_increasing(rng, m):
    img = np.clip(rng.normal(0.5, 0.25, size=(24, 24)), 0, 1)
    res = fcm_run(img, FcmConfig(c=3, m=m, eps=1e-8, max_iter=200), seed=1)
    assert np.all(np.diff(res.costs) <= 1e-12)


def test_max_iter_one_is_single_update(rng):
    img = rng.uniform(size=(8, 8))
    C0 = np.array([0.2, 0.7])
    res = fcm_run(img, FcmConfig(c=2, max_iter=1), centers0=C0)
    U, C, _ = fcm_step(img, C0, 2.0)
    assert res.n_iter == 1 and len(res.costs) == 1
    assert np.array_equal(res.U, U) and np.array_equal(res.centers, C)


def test_noiseless_two_region_phantom():
    vol, truth = generate_phantom(32, levels=(0.2, 0.8))
    z = vol.dims[2] // 2
    res = fcm_run(vol.slice(z), FcmConfig(c=2), seed=0)
    labels = defuzzify(res.U).reshape(32, 32)
    assert incorrect_segmentation(labels, truth.slice(z)) == 0


@pytest.mark.parametrize("size", [16, 32, 55])
def test_noiseless_phantom_perfect(size):
    vol, truth = generate_phantom(size)
    z = vol.dims[2] // 2
    res = fcm_run(vol.slice(z), FcmConfig(c=4), seed=0)
    labels = defuzzify(res.U).reshape(size, size)
    assert incorrect_segmentation(labels, truth.slice(z)) == 0


@given(scale=st.floats(0.1, 10), shift=st.floats(-5, 5))
def test_affine_invariance_of_labels(scale, shift):
    rng = np.random.default_rng(0)
    x = rng.uniform(size=50)
    centers = np.array([0.15, 0.5, 0.8])
    a = defuzzify(fcm_membership(x, centers, 2.0))
    b = defuzzify(fcm_membership(x * scale + shift, centers * scale + shift, 2.0))
    assert np.array_equal(a, b)
