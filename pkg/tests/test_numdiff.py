import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spraylab import numdiff
from spraylab.errors import TooFewSamples


def _f(z):
    return np.array([np.sin(z[0]) * z[1] ** 2, np.exp(z[0] - z[1])])


def _jac(z):
    a, b = z
    return np.array([[np.cos(a) * b * b, 2 * np.sin(a) * b], [np.exp(a - b), -np.exp(a - b)]])


def test_gradient_matches_closed_form():
    z = np.array([0.3, -0.7])
    J, err = numdiff.gradient(_f, z)
    assert np.max(np.abs(J - _jac(z))) < 1e-10
    assert np.all(err < 1e-6)


def test_hessian_matches_closed_form():
    z = np.array([0.3, -0.7])
    H, _ = numdiff.hessian(_f, z)
    a, b = z
    expected0 = np.array([[-np.sin(a) * b * b, 2 * np.cos(a) * b], [2 * np.cos(a) * b, 2 * np.sin(a)]])
    assert np.max(np.abs(H[0] - expected0)) < 1e-8
    assert np.allclose(H[1], H[1].T)


def test_directional_derivative():
    z = np.array([0.1, 0.2])
    v = np.array([1.0, -2.0])
    d, _ = numdiff.directional(_f, z, v)
    assert np.max(np.abs(d - _jac(z) @ v)) < 1e-11


def test_sample_derivatives_on_nonuniform_grid():
    t = np.sort(np.random.default_rng(1).uniform(0, 2, 80))
    d1, d2 = numdiff.sample_derivatives(t, np.sin(t))
    assert np.max(np.abs(d1 - np.cos(t))) < 1e-5
    assert np.max(np.abs(d2 + np.sin(t))) < 1e-3


def test_sample_derivatives_needs_five_samples():
    with pytest.raises(TooFewSamples):
        numdiff.sample_derivatives([0, 1, 2, 3], [0, 1, 4, 9])


@settings(max_examples=30)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_sampled_quadratics_differentiate_exactly(a, b, c):
    t = np.linspace(-1, 1, 25)
    d1, d2 = numdiff.sample_derivatives(t, a + b * t + c * t * t)
    assert np.allclose(d1, b + 2 * c * t, atol=1e-8)
    assert np.allclose(d2, 2 * c, atol=1e-6)
