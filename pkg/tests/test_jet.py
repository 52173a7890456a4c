import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from spraylab import jet


def _poly(z):
    x, y = z[0], z[1]
    return [x * x * y + 3.0 * y, jet.sqrt(1.0 + x * x) * jet.exp(y)]


def test_polynomial_derivatives_exact():
    z = jet.seed([1.5, -0.5])
    val, jac, hess = jet.unpack(_poly(z), 2)
    x, y = 1.5, -0.5
    assert np.allclose(val[0], x * x * y + 3 * y)
    assert np.allclose(jac[0], [2 * x * y, x * x + 3])
    assert np.allclose(hess[0], [[2 * y, 2 * x], [2 * x, 0]])


def test_plain_numbers_contribute_zero_derivatives():
    z = jet.seed([1.0, 2.0])
    val, jac, hess = jet.unpack([z[0] * 2.0, 7.0], 2)
    assert val[1] == 7.0
    assert np.all(jac[1] == 0) and np.all(hess[1] == 0)


def test_dot_keeps_derivatives_for_lists_of_jets():
    z = jet.seed([2.0, 3.0])
    d = jet.dot([z[0], z[1]], [z[1], 1.0])
    _, jac, _ = jet.unpack([d], 2)
    assert np.allclose(jac[0], [3.0, 3.0])


def test_value_strips_jets():
    z = jet.seed([0.25, 4.0])
    assert np.allclose(jet.value(z), [0.25, 4.0])
    assert jet.value(2.5) == 2.5


def test_vec_packs_floats_and_jets():
    assert jet.vec([1, 2]).dtype == float
    assert jet.vec([jet.seed([1.0])[0], 2.0]).dtype == object


@settings(max_examples=40)
@given(st.floats(0.1, 2.0), st.floats(-1.0, 1.0))
def test_elementary_functions_match_finite_differences(a, b):
    def f(z):
        x, y = z[0], z[1]
        return [jet.log(x) * jet.sin(y) + jet.cos(x * y) + jet.arctan(x - y) + jet.tan(0.3 * y) + x / (1.0 + y * y)]

    _, jac, hess = jet.unpack(f(jet.seed([a, b])), 2)
    h = 1e-5
    for i in range(2):
        e = np.eye(2)[i] * h
        fd = (f(np.array([a, b]) + e)[0] - f(np.array([a, b]) - e)[0]) / (2 * h)
        assert math.isclose(jac[0, i], fd, rel_tol=1e-6, abs_tol=1e-7)
    assert np.allclose(hess[0], hess[0].T)
