import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spraylab import jet
from spraylab.catalog import named_spray
from spraylab.core import TangentState, eval_spray, whole_space
from spraylab.errors import GaugeAmbiguity, NotGraphLike, ParamCountMismatch, UnknownLabel
from spraylab.geodesics import integrate
from spraylab.pathspace import (
    PathFamily,
    axioms_check,
    ball_arcs,
    check_cocycle,
    circles,
    construct_spray,
    construct_spray_method1,
    cubic2d,
    cubic2d_closure_map,
    cubic3d,
    default_cocycle_samples,
    jacobian_rank_check,
    lines,
    named_family,
    newton_solve,
    roundtrip_check,
    semicircles,
)

from .strategies import ball_states, half_plane_states

SEMI = construct_spray(semicircles())
ARCS = construct_spray(ball_arcs(2))
CIRCLES = construct_spray(circles(1.0))


def _offset_family(f, f_s, f_ss, n=2):
    return PathFamily("custom", n, 2 * n, whole_space(n), "offset", f=f, f_s=f_s, f_ss=f_ss)


# -- construction ---------------------------------------------------------


def test_circles_rejected_in_three_dimensions():
    with pytest.raises(ParamCountMismatch):
        circles(1.0, n=3)


def test_offset_param_count_checked():
    with pytest.raises(ParamCountMismatch):
        PathFamily("bad", 2, 3, whole_space(2), "offset")


def test_unknown_family():
    with pytest.raises(UnknownLabel):
        named_family("spirals")


def test_lines_give_zero_spray():
    s = construct_spray(lines(3))
    assert np.allclose(eval_spray(s, ([0.1, 0.2, 0.3], [1.0, -2.0, 0.5])), 0.0, atol=1e-14)


def test_zero_offset_function_gives_zero_spray():
    z = lambda s, xo, yo: np.zeros(2)
    s = construct_spray_method1(_offset_family(z, z, z))
    assert np.all(eval_spray(s, ([1.0, 2.0], [3.0, 4.0])) == 0)


def test_inconsistent_offset_family_is_rejected():
    e = np.array([1.0, 0.0])
    fam = _offset_family(lambda s, xo, yo: s * s * e, lambda s, xo, yo: 2 * s * e, lambda s, xo, yo: 2 * e)
    with pytest.raises(GaugeAmbiguity):
        construct_spray_method1(fam)


def test_cubic2d_cocycle_and_explicit_closure_map():
    fam = cubic2d()
    assert check_cocycle(fam, default_cocycle_samples(fam)) <= 1e-9
    rng = np.random.default_rng(5)
    for _ in range(20):
        xo, yo = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        lam, so = rng.uniform(0.3, 2), rng.uniform(-0.5, 0.5)
        xh, yh = cubic2d_closure_map(xo, yo, lam, so)
        for s in np.linspace(-0.5, 0.5, 7):
            lhs = fam.point(s, np.concatenate([xh, yh]))
            rhs = fam.point(lam * s + so, np.concatenate([xo, yo]))
            assert np.allclose(lhs, rhs, atol=1e-12)


def test_cubic3d_coefficients():
    # G^2 = -[x1 (y1)^2 + x3 (y3)^2] with G = -f''(0)/2
    x, y = np.array([0.5, 0.2, -0.3]), np.array([1.0, 2.0, 0.7])
    g = eval_spray(construct_spray(cubic3d()), (x, y))
    assert np.allclose(g, [0.0, -(x[0] * y[0] ** 2 + x[2] * y[2] ** 2), 0.0], atol=1e-14)


def test_circle_coefficients():
    y = np.array([1.0, 2.0])
    g = eval_spray(construct_spray(circles(2.0)), ([0.5, 0.2], y))
    r = np.linalg.norm(y)
    assert np.allclose(g, [y[1] * r / 4.0, -y[0] * r / 4.0], atol=1e-12)


def test_semicircle_vertical_limit():
    assert np.allclose(eval_spray(SEMI, ([0.3, 1.0], [0.0, 2.0])), 0.0)


def test_newton_solution_reproduces_state():
    fam = semicircles()
    x, y = np.array([0.4, 0.7]), np.array([1.0, -0.3])
    sol = newton_solve(fam, x, y)
    assert np.allclose(fam.point(sol.t, sol.p), x, atol=1e-12)
    assert np.allclose(sol.c * fam.velocity(sol.t, sol.p), y, atol=1e-12)


# -- checks ---------------------------------------------------------------


def test_jacobian_of_lines_is_identity():
    assert jacobian_rank_check(lines(2), 0.3, [0.1, 0.2]) == pytest.approx(1.0, abs=1e-14)


def test_jacobian_of_semicircles_nonzero():
    assert abs(jacobian_rank_check(semicircles(), 0.3, [0.0, 1.0])) > 1e-10


def test_jacobian_of_degenerate_family_vanishes():
    fam = PathFamily(
        "sum",
        2,
        2,
        whole_space(2),
        "path",
        lambda t, p: jet.vec([t, p[0] + p[1] + 0.0 * t]),
        lambda t, p: jet.vec([1.0 + 0.0 * t, 0.0 * t]),
        lambda t, p: np.zeros(2),
    )
    assert abs(jacobian_rank_check(fam, 0.2, [0.3, 0.4])) <= 1e-14


def test_jacobian_not_graph_like():
    with pytest.raises(NotGraphLike):
        jacobian_rank_check(semicircles(), math.pi / 2, [0.0, 1.0])


@pytest.mark.parametrize(
    "family, t, p",
    [
        (cubic2d(), 0.3, [0.1, 0.2]),
        (cubic3d(), 0.3, [0.1, 0.2, -0.3, 0.4]),
        (circles(1.5), 0.3, [0.1, 0.2]),
        (ball_arcs(2), 0.3, [0.4, 1.7]),
        (ball_arcs(3), 0.3, [0.4, 1.2, 1.7, 0.5]),
    ],
)
def test_builtin_jacobians_nonzero(family, t, p):
    assert abs(jacobian_rank_check(family, t, p)) > 1e-10


@pytest.mark.parametrize(
    "family, states",
    [
        (lines(2), [([0.1, 0.2], [1.0, 0.5])]),
        (semicircles(), [([0.2, 0.8], [1.0, 0.3]), ([-0.5, 1.5], [-0.4, -1.0])]),
        (circles(1.0), [([0.2, 0.8], [1.0, 0.3])]),
        (ball_arcs(2), [([0.2, 0.3], [1.0, -0.3])]),
        (ball_arcs(3), [([0.2, 0.3, -0.1], [1.0, -0.3, 0.5])]),
        (cubic2d(), [([0.1, 0.2], [1.0, 0.3])]),
        (cubic3d(), [([0.1, 0.2, 0.3], [1.0, 0.3, -0.5])]),
    ],
)
def test_builtin_families_pass_axioms(family, states):
    assert axioms_check(family, states).passed


def test_semicircle_roundtrip():
    rep = roundtrip_check(semicircles(), SEMI, [([0.2, 0.8], [1.0, 0.3]), ([1.0, 0.5], [-1.0, 1.0])])
    assert rep.max_distance <= 1e-6


def test_circle_roundtrip_keeps_radius():
    rep = roundtrip_check(circles(1.0), CIRCLES, [([0.2, 0.8], [1.0, 0.3])])
    assert rep.radius_error <= 1e-7


def test_ball_arc_diameter():
    traj = integrate(ARCS, TangentState([0.0, 0.0], [1.0, 0.0]), 0.5)
    assert np.max(np.abs(traj.x[:, 1])) <= 1e-10


def test_cubic2d_methods_agree():
    m1 = construct_spray(cubic2d())
    m2 = construct_spray(cubic2d().graph_form)
    x, y = np.array([0.3, -0.2]), np.array([1.2, 0.4])
    assert np.allclose(eval_spray(m1, (x, y)), eval_spray(m2, (x, y)), atol=1e-10)


# -- invariants -----------------------------------------------------------


@settings(max_examples=40)
@given(half_plane_states())
def test_semicircle_construction_matches_closed_form(state):
    assert np.allclose(eval_spray(SEMI, state), eval_spray(named_spray("semicircle"), state), atol=1e-8)


@settings(max_examples=40)
@given(ball_states(radius=0.9))
def test_ball_arcs_match_hyperbolic_spray(state):
    g = eval_spray(ARCS, state)
    assert np.allclose(g, eval_spray(named_spray("hyperbolic_ball"), state), atol=1e-7)
    assert abs(state.y @ g) <= 1e-10 * (1 + np.linalg.norm(state.y) ** 3)


@settings(max_examples=30)
@given(half_plane_states(), st.floats(0.2, 5.0))
def test_method2_fields_are_two_homogeneous(state, lam):
    g = eval_spray(SEMI, state)
    g2 = eval_spray(SEMI, state.scaled(lam))
    assert np.max(np.abs(g2 - lam**2 * g)) <= 1e-9 * (1 + lam**2 * np.max(np.abs(g)))


@settings(max_examples=30)
@given(ball_states(radius=5.0), ball_states(radius=5.0))
def test_circle_field_ignores_position(a, b):
    assert np.allclose(eval_spray(CIRCLES, (a.x, a.y)), eval_spray(CIRCLES, (b.x, a.y)), atol=1e-9)


@settings(max_examples=20)
@given(st.floats(-1.0, 1.0), st.floats(0.3, 2.0))
def test_family_derivatives_match_finite_differences(t, w):
    for fam, p in ((semicircles(), [0.2, w]), (ball_arcs(2), [0.4, 1.0 + w / 2]), (circles(w), [0.1, -0.3])):
        lo, hi = fam.t_domain(np.asarray(p))
        tt = max(min(t, hi - 0.1), lo + 0.1)
        h = 1e-5
        fd = (fam.point(tt + h, np.asarray(p)) - fam.point(tt - h, np.asarray(p))) / (2 * h)
        assert np.allclose(fd, fam.velocity(tt, np.asarray(p)), atol=1e-8)
        fd2 = (fam.velocity(tt + h, np.asarray(p)) - fam.velocity(tt - h, np.asarray(p))) / (2 * h)
        assert np.allclose(fd2, fam.sigma_tt(tt, np.asarray(p)), atol=1e-8)
