"""Projective factors along geodesics and the parameter relations they induce.

If ``x(t)`` is an affinely parameterized geodesic of ``G`` then the same
point set is a geodesic of ``G + P y`` under a new clock ``s(t)`` with
``s''/s' = 2 P(x(t), x'(t))``.  Along a geodesic of the deformed spray with
its own affine parameter, ``P(s)`` solves ``P'' + 2 P P' = 0`` exactly when
the deformed spray is weakly Ricci constant, which pins ``P(s)`` to a few
closed-form families.  This module samples those quantities and classifies
them by nonlinear least squares.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from . import jet
from .catalog import funk
from .core import ProjectiveFactor
from .errors import DomainViolation, FitDiverged, NonMonotone, QuadratureFailure, TooFewSamples
from .geodesics import Trajectory
from .numdiff import sample_derivatives

TIE_ABSOLUTE = 1e-9
TIE_RELATIVE = 0.1
DIVERGENCE_LIMIT = 1e3


@dataclass(frozen=True)
class Sampled:
    """A sampled scalar function ``v(t)``."""

    t: np.ndarray
    v: np.ndarray

    def __len__(self):
        return self.t.size


@dataclass(frozen=True)
class PProfileFit:
    family: str
    params: dict
    residual: float
    ode_residual: float
    candidates: dict = field(default_factory=dict, compare=False)

    def to_record(self) -> dict:
        return {
            "family": self.family,
            "params": self.params,
            "residual": self.residual,
            "ode_residual": self.ode_residual,
        }


@dataclass(frozen=True)
class STRelationFit:
    family: str
    params: dict
    residual: float
    domain_ok: bool
    complete_case: bool
    interval: tuple = (-math.inf, math.inf)
    candidates: dict = field(default_factory=dict, compare=False)

    def to_record(self) -> dict:
        return {
            "family": self.family,
            "params": self.params,
            "residual": self.residual,
            "domain_ok": self.domain_ok,
            "complete_case": self.complete_case,
        }


def record_json(fit) -> str:
    return json.dumps(fit.to_record(), sort_keys=True)


# -- sampling -------------------------------------------------------------


def sample_P_along_geodesic(factor: ProjectiveFactor, traj: Trajectory, points: Optional[int] = None) -> Sampled:
    """``P(x(s), x'(s))`` along a trajectory in its own parameter.

    With dense output available the curve is resampled on ``points`` uniform
    parameter values; otherwise (or with ``points=None``) the stored samples
    are used.
    """
    if points and traj.segments:
        s = np.linspace(traj.t[0], traj.t[-1], points)
        xs, ys = traj.resample(s)
    else:
        s, xs, ys = traj.t, traj.x, traj.y
    vals = np.empty(s.size)
    for i in range(s.size):
        if factor.domain is not None and not factor.domain.contains(xs[i], ys[i]):
            raise DomainViolation(f"factor {factor.label} undefined at sample {i}")
        vals[i] = float(jet.value(factor.value(xs[i], ys[i])))
    if not np.all(np.isfinite(vals)):
        raise DomainViolation(f"factor {factor.label} is not finite along the trajectory")
    return Sampled(np.asarray(s, dtype=float), vals)


# -- fitting helpers ------------------------------------------------------


@dataclass
class _Family:
    name: str
    nparams: int
    model: Callable
    names: tuple


def _fit_family(fam: _Family, t, v, seeds):
    """Least squares from each seed; returns (params, max-residual)."""
    best = (None, math.inf)
    if fam.nparams == 0:
        return (), float(np.max(np.abs(v - fam.model((), t))))
    for p0 in seeds:
        p0 = np.asarray(p0, dtype=float)
        if not np.all(np.isfinite(p0)):
            continue

        def res(p):
            with np.errstate(all="ignore"):
                r = fam.model(p, t) - v
            return np.where(np.isfinite(r), r, 1e6)

        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sol = optimize.least_squares(res, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000)
        except (ValueError, FloatingPointError):
            continue
        with np.errstate(all="ignore"):
            r = np.max(np.abs(fam.model(sol.x, t) - v))
        if np.isfinite(r) and r < best[1]:
            best = (tuple(float(a) for a in sol.x), float(r))
    return best


def _grid_seeds(k, centre=None):
    """Multistart grid: 9 log-spaced magnitudes per parameter with both signs."""
    mags = np.logspace(-2, 2, 9)
    base = [m * s for m in mags for s in (1.0, -1.0)]
    rng = np.random.default_rng(7)
    out = []
    for _ in range(9 * k):
        out.append([base[i] for i in rng.integers(0, len(base), size=k)])
    return out


def _select(results, families, tie_abs=TIE_ABSOLUTE, tie_rel=TIE_RELATIVE):
    """Lowest residual; near-ties go to the family with fewer parameters."""
    finite = {k: r for k, r in results.items() if r[1] < math.inf}
    if not finite:
        return None
    best = min(r[1] for r in finite.values())
    cutoff = best + max(tie_abs, tie_rel * best)
    order = [f.name for f in families]
    nparams = {f.name: f.nparams for f in families}
    ok = [k for k in finite if finite[k][1] <= cutoff]
    return min(ok, key=lambda k: (nparams[k], order.index(k)))


# -- P(s) families --------------------------------------------------------


def _p_exponential(p, s):
    c, kappa = p
    e = kappa * np.exp(2.0 * c * s)
    return -c * (1.0 - e) / (1.0 + e)


P_FAMILIES = [
    _Family("zero", 0, lambda p, s: np.zeros_like(s), ()),
    _Family("constant", 1, lambda p, s: np.full_like(s, p[0]), ("value",)),
    _Family("reciprocal", 1, lambda p, s: 1.0 / (s + p[0]), ("kappa",)),
    _Family("tangent", 2, lambda p, s: -p[0] * np.tan(p[0] * s + p[1]), ("c", "kappa")),
    _Family("exponential", 2, _p_exponential, ("c", "kappa")),
]


def _p_seeds(s, v):
    """Analytic seeds from the first integral ``k = P' + P^2``."""
    (dv,) = sample_derivatives(s, v, orders=(1,))
    k = float(np.median(dv + v * v))
    i = s.size // 2
    s0, p0 = s[i], v[i]
    seeds = {"constant": [[float(np.mean(v))]]}
    seeds["reciprocal"] = [[1.0 / p0 - s0]] if p0 != 0 else []
    tan_seeds, exp_seeds = [], []
    if k < 0:
        c = math.sqrt(-k)
        kap = math.atan(-p0 / c) - c * s0
        tan_seeds += [[c, kap], [c * 1.01, kap]]
    if k > 0:
        c = math.sqrt(k)
        if abs(c - p0) > 1e-14:
            E = (c + p0) / (c - p0)
            exp_seeds.append([c, E * math.exp(-2.0 * c * s0)])
    c_small = 1e-3
    tan_seeds.append([c_small, math.atan(-p0 / c_small) - c_small * s0])
    exp_seeds.append([c_small, (c_small + p0) / (c_small - p0)])
    seeds["tangent"] = tan_seeds
    seeds["exponential"] = exp_seeds
    return seeds, k


def _canonical_p(name, params):
    """Report with ``c > 0`` (the families are invariant under ``c -> -c`` with adjusted kappa)."""
    if name == "tangent":
        c, kappa = params
        if c < 0:
            c, kappa = -c, -kappa
        kappa = (kappa + math.pi / 2) % math.pi - math.pi / 2
        return {"c": c, "kappa": kappa}
    if name == "exponential":
        c, kappa = params
        if c < 0 and kappa != 0:
            c, kappa = -c, 1.0 / kappa
        return {"c": c, "kappa": kappa}
    fam = next(f for f in P_FAMILIES if f.name == name)
    return dict(zip(fam.names, params))


def ode_residual(samples: Sampled) -> float:
    """Max ``|P'' + 2 P P'|`` by local polynomial differentiation."""
    d1, d2 = sample_derivatives(samples.t, samples.v, orders=(1, 2))
    return float(np.max(np.abs(d2 + 2.0 * samples.v * d1)))


def classify_P_profile(samples: Sampled) -> PProfileFit:
    s = np.asarray(samples.t, dtype=float)
    v = np.asarray(samples.v, dtype=float)
    if s.size < 20:
        raise TooFewSamples(f"need at least 20 samples, got {s.size}")
    if s[-1] - s[0] < 0.5:
        raise TooFewSamples(f"sample range {s[-1] - s[0]:.3g} is shorter than 0.5")
    seeds, _ = _p_seeds(s, v)
    results = {}
    for fam in P_FAMILIES:
        if fam.nparams == 0:
            results[fam.name] = _fit_family(fam, s, v, [])
            continue
        p, r = _fit_family(fam, s, v, seeds.get(fam.name, []))
        if r > 1e-6:
            p2, r2 = _fit_family(fam, s, v, _grid_seeds(fam.nparams))
            if r2 < r:
                p, r = p2, r2
        results[fam.name] = (p, r)
    if all(r[1] > DIVERGENCE_LIMIT for r in results.values()):
        raise FitDiverged("no P(s) family fits the samples")
    name = _select(results, P_FAMILIES)
    return PProfileFit(
        name,
        _canonical_p(name, results[name][0]),
        results[name][1],
        ode_residual(samples),
        {k: r[1] for k, r in results.items()},
    )


# -- s(t) families --------------------------------------------------------


def _s_log(p, t):
    a, b = p
    return b * np.log1p(a * t)


def _s_rational(p, t):
    a, b = p
    return b * t / (1.0 + a * t)


def _s_arctan(p, t):
    a, b, c = p
    return c * (np.arctan(a * t + b) - np.arctan(b))


def _s_log_ratio(p, t):
    a, b, c = p
    return c * (np.log1p(b * t) - np.log1p(a * t))


S_FAMILIES = [
    _Family("linear", 1, lambda p, t: p[0] * t, ("a",)),
    _Family("log", 2, _s_log, ("a", "b")),
    _Family("rational", 2, _s_rational, ("a", "b")),
    _Family("arctan", 3, _s_arctan, ("a", "b", "c")),
    _Family("log_ratio", 3, _s_log_ratio, ("a", "b", "c")),
]


def _s_seeds(t, s):
    """Seeds from a quadratic fit ``1/s' ~ al0 + al1 t + al2 t^2``."""
    (ds,) = sample_derivatives(t, s, orders=(1,))
    al2, al1, al0 = np.polyfit(t, 1.0 / ds, 2)
    seeds = {"linear": [[1.0 / al0]]}
    seeds["log"] = [[al1 / al0, 1.0 / al1]] if al1 != 0 else []
    seeds["rational"] = [[al1 / (2.0 * al0), 1.0 / al0]]
    disc = 4.0 * al0 * al2 - al1 * al1
    if al2 != 0 and disc > 0:
        a = 2.0 * abs(al2) / math.sqrt(disc)
        seeds["arctan"] = [[a, a * al1 / (2.0 * al2), a / al2]]
    else:
        seeds["arctan"] = []
    roots_disc = (al1 / al0) ** 2 - 4.0 * al2 / al0
    if roots_disc > 0:
        r = math.sqrt(roots_disc)
        a, b = 0.5 * (al1 / al0 - r), 0.5 * (al1 / al0 + r)
        seeds["log_ratio"] = [[a, b, 1.0 / (al0 * (b - a))]]
    else:
        seeds["log_ratio"] = []
    return seeds


def _constraints_ok(name, p):
    if name == "linear":
        return p[0] > 0
    if name == "log":
        return p[0] * p[1] > 0
    if name == "rational":
        return p[0] != 0 and p[1] > 0
    if name == "arctan":
        return p[0] * p[2] > 0
    if name == "log_ratio":
        a, b, c = p
        return (b - a) * c > 0 and a * b != 0
    return False


def _canonical_s(name, p):
    if name == "arctan":
        a, b, c = p
        if a < 0:
            # c[arctan(at+b) - arctan b] is unchanged by (a, b, c) -> (-a, -b, -c)
            a, b, c = -a, -b, -c
        return (a, b, c)
    if name == "log_ratio":
        a, b, c = p
        if c < 0:
            a, b, c = b, a, -c
        return (a, b, c)
    return tuple(p)


def _interval(name, p):
    """Open t-interval on which the fitted clock is defined with ``s' > 0``."""
    inf = math.inf
    if name in ("linear", "arctan"):
        return (-inf, inf), True
    if name in ("log", "rational"):
        a = p[0]
        if a > 0:
            return (-1.0 / a, inf), True
        if a < 0:
            return (-inf, -1.0 / a), True
        return (-inf, inf), True
    a, b, _ = p
    if a > 0 and b > 0:
        return ((-1.0 / a, inf) if b < a else (-1.0 / b, inf)), True
    if a < 0 and b < 0:
        return ((-inf, -1.0 / a) if b > a else (-inf, -1.0 / b)), True
    if a > 0 and b < 0:
        return (-1.0 / a, -1.0 / b), True
    if a < 0 and b > 0:
        return (-1.0 / b, -1.0 / a), True
    return (-inf, inf), False


def _complete_case(name, p):
    if name == "log":
        return p[0] * p[1] > 0
    if name == "log_ratio":
        a, b, c = p
        return a * b < 0 and (b - a) * c > 0
    return False


def _prepare_clock(samples: Sampled):
    t = np.asarray(samples.t, dtype=float)
    s = np.asarray(samples.v, dtype=float)
    order = np.argsort(t)
    t, s = t[order], s[order]
    if t.size < 5:
        raise TooFewSamples(f"need at least 5 samples, got {t.size}")
    if np.any(np.diff(s) <= 0):
        raise NonMonotone("clock samples must be strictly increasing")
    if t[0] <= 0.0 <= t[-1]:
        s = s - np.interp(0.0, t, s) if not np.any(t == 0.0) else s - s[np.argmax(t == 0.0)]
    else:
        s = s - s[0]
        t = t - t[0]
    return t, s


def fit_parameter_relation(samples: Sampled) -> STRelationFit:
    t, s = _prepare_clock(samples)
    seeds = _s_seeds(t, s)
    scale = max(1.0, float(np.max(np.abs(s))))
    results = {}
    for fam in S_FAMILIES:
        p, r = _fit_family(fam, t, s, seeds.get(fam.name, []))
        if r > 1e-7 * scale:
            p2, r2 = _fit_family(fam, t, s, _grid_seeds(fam.nparams))
            if r2 < r:
                p, r = p2, r2
        if p is not None:
            p = _canonical_s(fam.name, p)
            if not _constraints_ok(fam.name, p):
                p, r = None, math.inf
        results[fam.name] = (p, r)
    if all(r[1] > DIVERGENCE_LIMIT for r in results.values()):
        raise FitDiverged("no s(t) family fits the samples")
    name = _select(results, S_FAMILIES)
    p, r = results[name]
    interval, classified = _interval(name, p)
    domain_ok = classified and interval[0] < t[0] and t[-1] < interval[1]
    fam = next(f for f in S_FAMILIES if f.name == name)
    return STRelationFit(
        name,
        dict(zip(fam.names, p)),
        r,
        bool(domain_ok),
        bool(_complete_case(name, p)),
        interval,
        {k: v[1] for k, v in results.items()},
    )


# -- clocks ---------------------------------------------------------------


def reclock_geodesic(
    base_traj: Trajectory,
    factor: ProjectiveFactor,
    initial_rate: float = 1.0,
    rtol: float = 1e-12,
    points: Optional[int] = None,
) -> Sampled:
    """The deformed spray's clock ``s(t)`` along a base geodesic.

    Solves ``s'' = 2 P(x(t), x'(t)) s'`` with ``s(0) = 0`` and
    ``s'(0) = initial_rate`` as the quadrature system ``u' = 2P, s' = exp(u)``
    over the dense output.  Affine parameters are only defined up to
    ``s -> alpha s + beta``; ``initial_rate`` fixes ``alpha``.  The clock is
    reported at the trajectory samples, or on ``points`` uniform values
    (always including ``t = 0``) when given.
    """
    if not initial_rate > 0:
        raise ValueError("initial_rate must be positive")
    if not base_traj.segments:
        raise QuadratureFailure("reclocking needs a trajectory with dense output")
    t = base_traj.t
    if not (t[0] <= 0.0 <= t[-1]):
        raise QuadratureFailure("trajectory must contain t = 0")
    if points:
        t = np.union1d(np.linspace(t[0], t[-1], points), [0.0])

    def rhs(tt, w):
        x, y = base_traj.state_at(tt)
        p = float(jet.value(factor.value(x, y)))
        return [2.0 * p, initial_rate * math.exp(w[0])]

    out = np.zeros(t.size)
    for sel in (t > 0.0, t < 0.0):
        ts = t[sel]
        if ts.size == 0:
            continue
        end = ts[-1] if ts[0] > 0 else ts[0]
        t_eval = ts if ts[0] > 0 else ts[::-1]
        sol = integrate.solve_ivp(rhs, (0.0, end), [0.0, 0.0], method="DOP853", t_eval=t_eval, rtol=rtol, atol=1e-14)
        if not sol.success:
            raise QuadratureFailure(sol.message)
        vals = sol.y[1]
        out[sel] = vals if ts[0] > 0 else vals[::-1]
    return Sampled(t.copy(), out)


def recover_P_from_two_clocks(s_samples: Sampled, sbar_samples: Sampled) -> Sampled:
    """``P(t) = (sbar''/sbar' - s''/s') / 2`` on a common grid."""
    t = np.asarray(s_samples.t, dtype=float)
    if not np.allclose(t, sbar_samples.t, rtol=0, atol=1e-14):
        raise ValueError("clocks must share the t grid")
    for v in (s_samples.v, sbar_samples.v):
        if np.any(np.diff(v) <= 0):
            raise NonMonotone("clock samples must be strictly increasing")
    d1, d2 = sample_derivatives(t, s_samples.v, orders=(1, 2))
    e1, e2 = sample_derivatives(t, sbar_samples.v, orders=(1, 2))
    return Sampled(t.copy(), 0.5 * (e2 / e1 - d2 / d1))


def _reversible_integrand(u, v, c):
    fp, fm = float(funk(u, v)), float(funk(u, -v))

    def f(tau):
        return ((1.0 - tau * fp) * (1.0 + tau * fm)) ** (-2.0 * c)

    return f, fp, fm


def funk_reversible_clock(u, v, c: float, t: float) -> float:
    """``s(t) = int_0^t [(1 - tau F(u,v)) (1 + tau F(u,-v))]^(-2c) dtau``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if not float(u @ u) < 1.0:
        raise DomainViolation("u must lie in the unit ball")
    f, fp, fm = _reversible_integrand(u, v, c)
    if not (-1.0 / fm < t < 1.0 / fp):
        raise DomainViolation(f"t={t} outside the chord interval ({-1.0 / fm}, {1.0 / fp})")
    if t == 0.0:
        return 0.0
    # Integrate in the distance w to the nearer chord end, where the vanishing
    # factor is exactly w*F, with break points approaching the end
    # geometrically so the integrand varies by a bounded factor per piece.
    if t > 0:
        end = 1.0 / fp

        def g(w):
            return (w * fp) ** (-2.0 * c) * (1.0 + (end - w) * fm) ** (-2.0 * c)

    else:
        end = -1.0 / fm

        def g(w):
            return (w * fm) ** (-2.0 * c) * (1.0 - (end + w) * fp) ** (-2.0 * c)

    w_far, w_near = abs(end), abs(end - t)
    knots = [w_far]
    dist = w_far * 0.1
    while dist > 2.0 * w_near:
        knots.append(dist)
        dist *= 0.1
    knots.append(w_near)
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for hi, lo in zip(knots[:-1], knots[1:]):
            try:
                val, _ = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)
            except integrate.IntegrationWarning as exc:
                raise QuadratureFailure(str(exc)) from None
            total += val
    return float(total if t > 0 else -total)


@dataclass(frozen=True)
class ClockDivergence:
    forward: bool
    backward: bool
    forward_exponent: float
    backward_exponent: float
    forward_values: tuple
    backward_values: tuple


def funk_reversible_clock_divergence(u, v, c: float, margins=(1e-2, 1e-4, 1e-6, 1e-8)) -> ClockDivergence:
    """Does the reversible Funk clock run off to infinity at the chord ends?

    The clock is evaluated at ``t = endpoint - margin * length`` and the local
    power of the integrand near each end is measured from successive margins.
    The clock diverges iff that power is at least 1.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    f, fp, fm = _reversible_integrand(u, v, c)
    lo, hi = -1.0 / fm, 1.0 / fp
    length = hi - lo

    def side(end, sgn):
        vals, powers = [], []
        for m in margins:
            tt = end - sgn * m * length
            try:
                vals.append(funk_reversible_clock(u, v, c, tt))
            except QuadratureFailure:
                vals.append(math.inf)
        for m1, m2 in zip(margins[:-1], margins[1:]):
            t1, t2 = end - sgn * m1 * length, end - sgn * m2 * length
            powers.append(math.log(f(t2) / f(t1)) / math.log(m1 / m2))
        return tuple(vals), powers[-1]

    fv, fpow = side(hi, 1.0)
    bv, bpow = side(lo, -1.0)
    return ClockDivergence(fpow >= 1.0 - 1e-6, bpow >= 1.0 - 1e-6, fpow, bpow, fv, bv)


def point_set_distance(traj_a: Trajectory, traj_b: Trajectory, points: int = 400) -> float:
    """Largest distance from points of ``traj_a`` to the polyline of ``traj_b`` resampled finely."""
    ta = np.linspace(traj_a.t[0], traj_a.t[-1], points)
    tb = np.linspace(traj_b.t[0], traj_b.t[-1], 20 * points)
    xa, _ = traj_a.resample(ta)
    xb, _ = traj_b.resample(tb)
    worst = 0.0
    for p in xa:
        seg_a, seg_b = xb[:-1], xb[1:]
        d = seg_b - seg_a
        w = np.clip(np.einsum("ij,ij->i", p - seg_a, d) / np.maximum(np.einsum("ij,ij->i", d, d), 1e-300), 0, 1)
        proj = seg_a + w[:, None] * d
        worst = max(worst, float(np.min(np.linalg.norm(proj - p, axis=1))))
    return worst
