import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spraylab.catalog import funk_factor, funk_reversible_factor, named_factor, named_spray, sphere_factor
from spraylab.core import ProjectiveFactor, TangentState, projective_deform
from spraylab.errors import DomainViolation, FitDiverged, NonMonotone
from spraylab.geodesics import IntegratorSettings, integrate
from spraylab.projective import (
    Sampled,
    classify_P_profile,
    fit_parameter_relation,
    funk_reversible_clock,
    funk_reversible_clock_divergence,
    point_set_distance,
    reclock_geodesic,
    record_json,
    recover_P_from_two_clocks,
    sample_P_along_geodesic,
)

from .strategies import ball_states

FLAT_BALL = named_spray("flat_ball")


@pytest.fixture(scope="module")
def chord():
    return integrate(FLAT_BALL, TangentState([0, 0], [1, 0]), 0.9)


@pytest.fixture(scope="module")
def full_chord():
    return integrate(FLAT_BALL, TangentState([0, 0], [1, 0]), -0.9), integrate(FLAT_BALL, TangentState([0, 0], [1, 0]), 0.9)


# -- sampling P -----------------------------------------------------------


def test_zero_factor_samples_zero(chord):
    assert np.all(sample_P_along_geodesic(named_factor("zero"), chord).v == 0)


def test_half_funk_along_chord(chord):
    p = sample_P_along_geodesic(funk_factor(2, 0.5), chord)
    assert np.allclose(p.v, 1 / (2 * (1 - p.t)), rtol=1e-9)


def test_funk_along_own_geodesic_is_reciprocal():
    traj = integrate(named_spray("funk_scaled", c=1.0), TangentState([0.1, 0.2], [1, 0.3]), 3.0)
    fit = classify_P_profile(sample_P_along_geodesic(funk_factor(2, 1.0), traj, points=80))
    assert fit.family == "reciprocal"
    assert fit.residual <= 1e-8


def test_factor_outside_domain_is_rejected():
    traj = integrate(named_spray("flat"), TangentState([0.5, 0], [1, 0]), 1.0)
    with pytest.raises(DomainViolation):
        sample_P_along_geodesic(funk_factor(2), traj)


# -- P-profile classification ---------------------------------------------


def test_reciprocal_profile():
    s = np.linspace(0, 3, 40)
    fit = classify_P_profile(Sampled(s, 1 / (s + 2)))
    assert fit.family == "reciprocal"
    assert fit.params["kappa"] == pytest.approx(2.0, abs=1e-8)
    assert fit.residual <= 1e-8


def test_half_funk_along_own_geodesic_is_constant():
    traj = integrate(named_spray("funk_scaled", c=0.5), TangentState([0.1, 0.2], [1, 0.3]), 3.0)
    fit = classify_P_profile(sample_P_along_geodesic(funk_factor(2, 0.5), traj, points=80))
    assert fit.family == "constant"
    assert fit.residual <= 1e-8


def test_double_funk_profile_violates_the_ode():
    traj = integrate(named_spray("funk_scaled", c=2.0), TangentState([0.1, 0.2], [1, 0.3]), 3.0)
    fit = classify_P_profile(sample_P_along_geodesic(funk_factor(2, 2.0), traj, points=80))
    assert fit.residual > 1e-2 and fit.ode_residual > 1e-2


def test_tangent_profile_canonical_form():
    s = np.linspace(-0.5, 0.5, 50)
    fit = classify_P_profile(Sampled(s, -1.3 * np.tan(1.3 * s + 0.2)))
    assert fit.family == "tangent"
    assert fit.params["c"] == pytest.approx(1.3, rel=1e-8)


def test_sphere_factor_along_own_geodesic_is_tangent():
    own = integrate(named_spray("sphere_proj"), TangentState([0.3, 0.2], [1.0, -0.4]), 1.0)
    fit = classify_P_profile(sample_P_along_geodesic(sphere_factor(2), own))
    assert fit.family == "tangent" and fit.residual <= 1e-6


def test_unfittable_profile_diverges():
    s = np.linspace(0, 1, 30)
    with pytest.raises(FitDiverged):
        classify_P_profile(Sampled(s, 1e6 * np.sin(40 * s)))


def test_fit_records_serialize():
    s = np.linspace(0, 3, 40)
    rec = json.loads(record_json(classify_P_profile(Sampled(s, 1 / (s + 2)))))
    assert set(rec) == {"family", "params", "residual", "ode_residual"}


# -- parameter relations --------------------------------------------------


def test_linear_relation():
    t = np.linspace(0, 2, 30)
    fit = fit_parameter_relation(Sampled(t, 3 * t))
    assert fit.family == "linear" and fit.params["a"] == pytest.approx(3.0)


def test_log_relation_from_half_funk(chord):
    fit = fit_parameter_relation(reclock_geodesic(chord, funk_factor(2, 0.5)))
    assert fit.family == "log"
    assert fit.params["a"] == pytest.approx(-1.0, abs=1e-6)


def test_log_ratio_relation_is_complete_case():
    t = np.linspace(-0.8, 0.8, 60)
    fit = fit_parameter_relation(Sampled(t, np.log((1 + t) / (1 - t))))
    assert fit.family == "log_ratio" and fit.complete_case and fit.domain_ok


def test_non_monotone_clock_rejected():
    t = np.linspace(0, 1, 30)
    with pytest.raises(NonMonotone):
        fit_parameter_relation(Sampled(t, np.sin(6 * t)))


# -- clocks ---------------------------------------------------------------


def test_zero_factor_keeps_the_clock(chord):
    s = reclock_geodesic(chord, named_factor("zero"))
    assert np.allclose(s.v, s.t, atol=1e-12)


def test_half_funk_clock(chord):
    s = reclock_geodesic(chord, funk_factor(2, 0.5))
    assert np.allclose(s.v, -np.log(1 - s.t), atol=1e-9)


def test_reversible_clock_on_full_chord(full_chord):
    back, fwd = full_chord
    # the closed form has s'(0) = 2
    for traj in (back, fwd):
        s = reclock_geodesic(traj, funk_reversible_factor(2, 0.5), initial_rate=2.0)
        assert np.allclose(s.v, np.log((1 + s.t) / (1 - s.t)), atol=1e-9)


def test_recover_from_identical_clocks():
    t = np.linspace(0, 1, 40)
    p = recover_P_from_two_clocks(Sampled(t, t), Sampled(t, t))
    assert np.allclose(p.v, 0, atol=1e-10)


def test_recover_half_funk():
    t = np.linspace(0, 0.8, 120)
    p = recover_P_from_two_clocks(Sampled(t, t), Sampled(t, -np.log(1 - t)))
    assert np.allclose(p.v, 1 / (2 * (1 - t)), atol=1e-4)


def test_recover_reversible():
    t = np.linspace(-0.8, 0.8, 200)
    p = recover_P_from_two_clocks(Sampled(t, t), Sampled(t, np.log((1 + t) / (1 - t))))
    assert np.allclose(p.v[3:-3], (t / (1 - t * t))[3:-3], atol=1e-4)


def test_recover_needs_increasing_clocks():
    t = np.linspace(0, 1, 20)
    with pytest.raises(NonMonotone):
        recover_P_from_two_clocks(Sampled(t, t), Sampled(t, -t))


def test_reversible_funk_clock_values():
    assert funk_reversible_clock([0, 0], [1, 0], 0.0, 0.7) == pytest.approx(0.7, abs=1e-12)
    assert funk_reversible_clock([0, 0], [1, 0], 0.5, 0.5) == pytest.approx(math.atanh(0.5), abs=1e-10)
    assert funk_reversible_clock([0, 0], [1, 0], 0.25, 1 - 1e-10) == pytest.approx(math.pi / 2, abs=1e-4)


@pytest.mark.parametrize("c, diverges", [(0.25, False), (0.5, True), (1.0, True)])
def test_reversible_clock_divergence(c, diverges):
    d = funk_reversible_clock_divergence([0.2, 0.1], [0.5, 1.0], c)
    assert d.forward == diverges and d.backward == diverges


# -- invariants -----------------------------------------------------------


PAIRS = [
    ("flat_ball", lambda: funk_factor(2, 0.5)),
    ("flat_ball", lambda: funk_reversible_factor(2, 0.3)),
    ("hyperbolic_ball", lambda: funk_factor(2, 1.0)),
    ("flat", lambda: sphere_factor(2)),
]


@settings(max_examples=6)
@given(ball_states(radius=0.6), st.sampled_from(range(len(PAIRS))))
def test_clock_consistency(state, k):
    label, make = PAIRS[k]
    factor = make()
    state = TangentState(state.x, state.y / np.linalg.norm(state.y))
    traj = integrate(named_spray(label), state, 0.3, IntegratorSettings(rtol=1e-12, atol=1e-12))
    clock = reclock_geodesic(traj, factor, points=121)
    base = Sampled(clock.t, clock.t)
    recovered = recover_P_from_two_clocks(base, clock)
    xs, ys = traj.resample(clock.t)
    direct = np.array([float(factor.value(x, y)) for x, y in zip(xs, ys)])
    assert np.max(np.abs(recovered.v - direct)) <= 1e-4


@settings(max_examples=6)
@given(ball_states(radius=0.6), st.sampled_from(range(len(PAIRS))))
def test_point_sets_are_invariant_under_deformation(state, k):
    label, make = PAIRS[k]
    base = named_spray(label)
    deformed = projective_deform(base, make())
    state = TangentState(state.x, state.y / np.linalg.norm(state.y))
    cfg = IntegratorSettings(rtol=1e-12, atol=1e-12)
    a = integrate(base, state, 0.25, cfg)
    b = integrate(deformed, state, 0.5, cfg)
    # compare over the shorter of the two traced arcs
    length_a = np.sum(np.linalg.norm(np.diff(a.x, axis=0), axis=1))
    length_b = np.sum(np.linalg.norm(np.diff(b.x, axis=0), axis=1))
    short, long = (a, b) if length_a <= length_b else (b, a)
    assert point_set_distance(short, long) <= 1e-6
