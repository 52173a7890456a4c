import numpy as np
import pytest
from hypothesis import given, settings

from spraylab import numdiff
from spraylab.catalog import funk, named_factor, named_spray
from spraylab.core import SprayField, TangentState, projective_deform, whole_space
from spraylab.diffops import (
    berwald_data,
    derivative_discrepancy,
    factor_horizontal_derivative,
    is_weakly_ricci_constant,
    isotropy_decompose,
    ricci,
    ricci_horizontal_derivative,
    riemann_curvature,
    spray_derivatives,
    verify_projective_ricci_relation,
)
from spraylab.errors import DifferentiationFailure, DomainViolation

from .strategies import ball_states, half_plane_states

BALL_SPRAYS = ["flat_ball", "funk_scaled", "funk_reversible", "sphere_proj", "hyperbolic_ball", "klein_finsler", "funk_log"]


def ricci_horizontal_by_gradient(spray, state):
    """``y^j (d_j Ric - N^m_j dot-d_m Ric)`` with a finite-difference gradient of Ric."""
    n = state.n
    z0 = np.concatenate([state.x, state.y])
    grad, _ = numdiff.gradient(lambda z: np.array([ricci(spray, TangentState(z[:n], z[n:]))]), z0, h=1e-3)
    grad = grad[0]
    N = berwald_data(spray, state).N
    return float(state.y @ grad[:n] - state.y @ (N.T @ grad[n:]))


# -- frozen values --------------------------------------------------------


def test_flat_curvature_vanishes():
    r = riemann_curvature(named_spray("flat", n=3), ([0.3, -1, 2], [1, 2, 3]))
    assert np.max(np.abs(r.R)) <= 1e-10


def test_hyperbolic_curvature_at_origin():
    r = riemann_curvature(named_spray("hyperbolic_ball"), ([0, 0], [1, 0]))
    assert np.allclose(r.R, np.diag([0.0, -3.0]), atol=1e-12)
    assert r.ric == pytest.approx(-3.0, abs=1e-6)
    fit = isotropy_decompose(r)
    assert fit.R_scalar == pytest.approx(-3.0, abs=1e-12)
    assert np.allclose(fit.tau, [-3.0, 0.0], atol=1e-12)


def test_funk_connection_at_origin():
    y = np.array([1.0, 2.0])
    N = berwald_data(named_spray("funk_scaled", c=0.5), ([0, 0], y)).N
    expected = 0.5 * np.linalg.norm(y) * np.eye(2) + np.outer(y, y) / (2 * np.linalg.norm(y))
    assert np.allclose(N, expected, atol=1e-14)


def test_weak_ricci_constancy_of_funk_scales():
    rng = np.random.default_rng(3)
    states = [(rng.uniform(-0.4, 0.4, 2), rng.normal(size=2)) for _ in range(6)]
    assert is_weakly_ricci_constant(named_spray("funk_scaled", c=0.5), states)[0]
    ok, worst = is_weakly_ricci_constant(named_spray("funk_scaled", c=2.0), states)
    assert not ok and worst > 1e-2


def test_fd_scheme_for_numeric_spray():
    base = named_spray("hyperbolic_ball")
    opaque = SprayField(2, base.domain, lambda x, y: np.asarray(base(x, y), dtype=float), "opaque", ad_capable=False)
    state = ([0.2, -0.1], [0.7, 0.4])
    d = spray_derivatives(opaque, state)
    assert d.scheme == "fd"
    assert ricci(opaque, state) == pytest.approx(ricci(base, state), abs=1e-6)
    with pytest.raises(DifferentiationFailure):
        spray_derivatives(opaque, state, scheme="ad")


def test_curvature_rejects_outside_states():
    with pytest.raises(DomainViolation):
        riemann_curvature(named_spray("hyperbolic_ball"), ([1.5, 0], [1, 0]))


def test_projective_relation_examples():
    state = ([0.2, 0.1], [1.0, 0.3])
    assert verify_projective_ricci_relation(named_spray("flat_ball"), named_factor("funk", c=0.5), state) <= 1e-8
    assert verify_projective_ricci_relation(named_spray("flat"), named_factor("sphere_proj"), state) <= 1e-8


def test_funk_factor_horizontal_derivative():
    # along flat lines F(x + t y, y) = F / (1 - t F), so dF/dt = F^2
    x, y = np.array([0.2, -0.3]), np.array([0.5, 1.0])
    d = factor_horizontal_derivative(named_spray("flat_ball"), named_factor("funk"), (x, y))
    assert d == pytest.approx(funk(x, y) ** 2, rel=1e-12)


# -- invariants -----------------------------------------------------------


@settings(max_examples=20)
@given(ball_states())
def test_euler_identities(state):
    for label in BALL_SPRAYS:
        s = named_spray(label)
        b = berwald_data(s, state)
        G = np.asarray(s(state.x, state.y), dtype=float)
        assert np.allclose(b.N @ state.y, 2 * G, atol=1e-11)
        assert np.allclose(np.einsum("ijk,k->ij", b.Gamma, state.y), b.N, atol=1e-11)


@settings(max_examples=20)
@given(ball_states(radius=0.9))
def test_jets_agree_with_finite_differences(state):
    for label in BALL_SPRAYS:
        assert derivative_discrepancy(named_spray(label), state) <= 1e-6


@settings(max_examples=15)
@given(ball_states(radius=0.7))
def test_riemann_is_two_homogeneous_and_annihilates_y(state):
    for label in BALL_SPRAYS:
        s = named_spray(label)
        R = riemann_curvature(s, state).R
        R2 = riemann_curvature(s, state.scaled(2.0)).R
        assert np.allclose(R2, 4 * R, atol=1e-9 * (1 + np.max(np.abs(R))))
        assert np.allclose(R @ state.y, 0.0, atol=1e-9 * (1 + np.max(np.abs(R))))


@settings(max_examples=20)
@given(ball_states())
def test_hyperbolic_is_isotropic_with_constant_curvature(state):
    r = riemann_curvature(named_spray("hyperbolic_ball"), state)
    fit = isotropy_decompose(r)
    assert fit.residual <= 1e-10


@settings(max_examples=15)
@given(half_plane_states())
def test_semicircle_is_isotropic(state):
    fit = isotropy_decompose(riemann_curvature(named_spray("semicircle"), state))
    assert fit.residual <= 1e-6


@settings(max_examples=10)
@given(ball_states(radius=0.6))
def test_ricci_horizontal_derivative_matches_gradient_formula(state):
    for label in ("hyperbolic_ball", "funk_log", "funk_scaled"):
        s = named_spray(label)
        a = ricci_horizontal_derivative(s, state)
        b = ricci_horizontal_by_gradient(s, state)
        assert a == pytest.approx(b, abs=1e-5 * (1 + abs(b)))


@settings(max_examples=15)
@given(ball_states(radius=0.8))
def test_projective_ricci_relation_property(state):
    for base, factor in (("flat_ball", named_factor("funk", c=0.5)), ("hyperbolic_ball", named_factor("funk_reversible", c=0.3))):
        assert verify_projective_ricci_relation(named_spray(base), factor, state) <= 1e-5


def test_deformed_spray_keeps_curvature_under_zero_factor():
    s = named_spray("hyperbolic_ball")
    d = projective_deform(s, named_factor("zero"))
    state = ([0.1, 0.2], [1.0, -0.5])
    assert np.allclose(riemann_curvature(d, state).R, riemann_curvature(s, state).R)
