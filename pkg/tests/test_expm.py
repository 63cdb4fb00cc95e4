import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heraldsim.expm import expm


@pytest.mark.parametrize("scale", [1e-3, 0.4, 3.0, 40.0])
def test_matches_scipy_on_random_complex_matrices(scale):
    rng = np.random.default_rng(7)
    a = scale * (rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))) / 9
    ref = scipy.linalg.expm(a)
    assert np.allclose(expm(a), ref, rtol=1e-11, atol=1e-12 * np.abs(ref).max())


def test_anti_hermitian_gives_unitary():
    rng = np.random.default_rng(1)
    h = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    u = expm(h - h.conj().T)
    assert np.allclose(u @ u.conj().T, np.eye(12), atol=1e-12)


def test_nilpotent_is_exact():
    a = np.diag([1.0, 2.0, 3.0], 1)
    expected = np.eye(4) + a + a @ a / 2 + a @ a @ a / 6
    assert np.allclose(expm(a), expected, atol=1e-15)


def test_rotation_generator():
    theta = 2.3
    u = expm(np.array([[0.0, -theta], [theta, 0.0]]))
    assert np.allclose(u, [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]], atol=1e-14)


def test_empty_and_shape_errors():
    assert expm(np.zeros((0, 0))).shape == (0, 0)
    with pytest.raises(ValueError):
        expm(np.zeros((2, 3)))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (5, 5), elements=st.floats(-3, 3)))
def test_inverse_is_exp_of_negative(a):
    assert np.allclose(expm(a) @ expm(-a), np.eye(5), atol=1e-9)
