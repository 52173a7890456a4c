"""Curve families, path-space checks and spray reconstruction.

Two representations are supported.

*Path form* (``form="path"``): ``sigma(t; p)`` with ``2(n-1)`` parameters
``p``.  A spray is recovered by solving ``x = sigma(s; p)``,
``y = c sigma_t(s; p)`` for the ``2n`` unknowns ``(c, s, p)`` by Newton's
method and returning ``G = -(c^2 / 2) sigma_tt(s; p)``.

*Offset form* (``form="offset"``): ``x_o + y_o s + f(s; x_o, y_o)`` with
``f(0) = f'(0) = 0`` and ``2n`` parameters.  Fixing the gauge ``s = 0``
gives ``x_o = x, y_o = y`` and ``G = -f''(0; x, y) / 2``.

Family maps are written with :mod:`spraylab.jet` helpers so that their
parameter derivatives come from forward-mode jets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jet
from .core import ConicalDomain, SprayField, TangentState, _as_state, unit_ball, upper_half_plane, whole_space
from .errors import (
    ClosureFailure,
    DomainViolation,
    GaugeAmbiguity,
    JacobianSingular,
    NewtonDiverged,
    NotGraphLike,
    ParamCountMismatch,
)
from .geodesics import IntegratorSettings, integrate

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
VERTICAL_TOL = 1e-12
# arcs through points this close to a diameter have radius beyond ~1e7, where
# the endpoint angles no longer determine the curve to working precision
DIAMETER_TOL = 2e-7


@dataclass(frozen=True)
class PathFamily:
    """A parametric curve family.

    For path form, ``sigma(t, p)`` and ``sigma_t(t, p)`` must accept jets;
    ``sigma_tt`` is only evaluated on floats.  ``seed(x, y)`` returns an initial
    guess ``(c, t, p)`` or ``None``.  ``limit(x, y)`` may return closed-form
    coefficients for directions the parameterization cannot reach.
    ``circle(p)`` optionally reports ``(center, radius)`` of the curve.

    Offset-form families instead provide ``f, f_s, f_ss`` as maps
    ``(s, xo, yo) -> R^n`` and may carry a path-form ``graph_form``.
    """

    label: str
    dimension: int
    param_dim: int
    domain: ConicalDomain
    form: str = "path"
    sigma: Optional[Callable] = None
    sigma_t: Optional[Callable] = None
    sigma_tt: Optional[Callable] = None
    t_domain: Callable = lambda p: (-math.inf, math.inf)
    seed: Optional[Callable] = None
    limit: Optional[Callable] = None
    circle: Optional[Callable] = None
    f: Optional[Callable] = None
    f_s: Optional[Callable] = None
    f_ss: Optional[Callable] = None
    graph_form: Optional["PathFamily"] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.dimension
        if self.form == "path" and self.param_dim != 2 * (n - 1):
            raise ParamCountMismatch(
                f"family {self.label} has {self.param_dim} parameters; a path space in dimension {n} needs {2 * (n - 1)}"
            )
        if self.form == "offset" and self.param_dim != 2 * n:
            raise ParamCountMismatch(f"offset-form family {self.label} must carry {2 * n} parameters")
        if self.form not in ("path", "offset"):
            raise ValueError(f"unknown family form {self.form!r}")

    def point(self, t, p):
        """Curve point; for offset form ``p = (x_o, y_o)`` concatenated."""
        if self.form == "path":
            return np.asarray(jet.value(self.sigma(t, p)), dtype=float)
        n = self.dimension
        xo, yo = np.asarray(p[:n], dtype=float), np.asarray(p[n:], dtype=float)
        return xo + yo * t + np.asarray(jet.value(self.f(t, xo, yo)), dtype=float)

    def velocity(self, t, p):
        if self.form == "path":
            return np.asarray(jet.value(self.sigma_t(t, p)), dtype=float)
        n = self.dimension
        xo, yo = np.asarray(p[:n], dtype=float), np.asarray(p[n:], dtype=float)
        return yo + np.asarray(jet.value(self.f_s(t, xo, yo)), dtype=float)


@dataclass(frozen=True)
class Solution:
    c: float
    t: float
    p: np.ndarray
    iterations: int
    residual: float


def _abs(a):
    return a if jet.value(a) >= 0 else -a


# -- Newton elimination ---------------------------------------------------


def _system(family: PathFamily, w, x, y):
    """Residual and Jacobian of ``(sigma - x, c sigma_t - y)`` in ``w = (c, t, p)``."""
    n = family.dimension
    z = jet.seed(w[1:], order=1)
    t, p = z[0], z[1:]
    sv, sj, _ = jet.unpack(family.sigma(t, p), w.size - 1, order=1)
    tv, tj, _ = jet.unpack(family.sigma_t(t, p), w.size - 1, order=1)
    c = w[0]
    F = np.concatenate([sv - x, c * tv - y])
    J = np.zeros((2 * n, w.size))
    J[:n, 1:] = sj
    J[n:, 0] = tv
    J[n:, 1:] = c * tj
    return F, J


def newton_solve(family: PathFamily, x, y, guess=None, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER) -> Solution:
    """Solve ``x = sigma(t; p), y = c sigma_t(t; p)`` for ``(c, t, p)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if guess is None:
        guess = family.seed(x, y) if family.seed is not None else None
    if guess is None:
        return _multistart(family, x, y, tol, max_iter)
    c0, t0, p0 = guess
    w = np.concatenate([[c0, t0], np.asarray(p0, dtype=float)])
    scale = 1.0 + float(np.max(np.abs(x))) + float(np.max(np.abs(y)))
    F, J = _system(family, w, x, y)
    norm = float(np.max(np.abs(F)))
    merit = float(F @ F)
    for it in range(max_iter + 1):
        if norm <= tol * scale:
            if not w[0] > 0:
                raise NewtonDiverged(f"solution has non-positive c={w[0]}")
            return Solution(float(w[0]), float(w[1]), w[2:].copy(), it, norm)
        if it == max_iter:
            break
        try:
            # equilibrate columns: c and the angles can differ by many orders
            col = np.max(np.abs(J), axis=0)
            col[col == 0] = 1.0
            Js = J / col
            cond = np.linalg.cond(Js)
            if not np.isfinite(cond) or cond > 1e14:
                raise JacobianSingular(f"elimination Jacobian is singular (cond={cond:.2e}) for {family.label}")
            step = np.linalg.solve(Js, -F) / col
        except np.linalg.LinAlgError:
            raise JacobianSingular(f"elimination Jacobian is singular for {family.label}") from None
        lam = 1.0
        while lam > 1e-4:
            w_try = w + lam * step
            try:
                F_try, J_try = _system(family, w_try, x, y)
                n_try = float(np.max(np.abs(F_try)))
                m_try = float(F_try @ F_try)
            except (ValueError, ZeroDivisionError, OverflowError):
                n_try = m_try = math.inf
            if np.isfinite(m_try) and m_try < merit * (1.0 - 1e-4 * lam) or n_try <= tol * scale:
                break
            lam *= 0.5
        else:
            # no descent left: accept if the residual sits at the rounding floor
            if norm <= max(tol, 64 * np.finfo(float).eps * cond) * scale and w[0] > 0:
                return Solution(float(w[0]), float(w[1]), w[2:].copy(), it, norm)
            raise NewtonDiverged(f"line search failed for {family.label} at x={x.tolist()}, y={y.tolist()}")
        w, F, J, norm, merit = w_try, F_try, J_try, n_try, m_try
    raise NewtonDiverged(f"no convergence in {max_iter} iterations for {family.label} (residual {norm:.2e})")


def _multistart(family, x, y, tol, max_iter):
    """Generic fallback: grid over ``(t, p)`` with ``c`` from speed matching."""
    k = family.param_dim
    grid = np.linspace(-2.0, 2.0, 5)
    rng = np.random.default_rng(11)
    best = None
    for _ in range(60):
        p0 = rng.choice(grid, size=k)
        lo, hi = family.t_domain(p0)
        lo, hi = max(lo, -3.0), min(hi, 3.0)
        t0 = rng.uniform(lo, hi)
        try:
            v = np.asarray(jet.value(family.sigma_t(t0, p0)), dtype=float)
            c0 = float(np.linalg.norm(y) / max(np.linalg.norm(v), 1e-300))
            return newton_solve(family, x, y, (c0, t0, p0), tol, max_iter)
        except (NewtonDiverged, ValueError, ZeroDivisionError) as exc:
            best = exc
    raise NewtonDiverged(f"multistart failed for {family.label}: {best}")


# -- spray construction ---------------------------------------------------


def construct_spray_method2(family: PathFamily) -> SprayField:
    """Spray whose geodesics are the curves of a path-form family."""
    if family.form != "path":
        raise ValueError("construct_spray_method2 needs a path-form family")
    n = family.dimension

    def G(x, y):
        x = np.asarray(jet.value(x), dtype=float)
        y = np.asarray(jet.value(y), dtype=float)
        if family.limit is not None:
            g = family.limit(x, y)
            if g is not None:
                return np.asarray(g, dtype=float)
        sol = newton_solve(family, x, y)
        return -0.5 * sol.c**2 * np.asarray(family.sigma_tt(sol.t, sol.p), dtype=float)

    return SprayField(n, family.domain, G, f"pathspace:{family.label}", dict(family.params), ad_capable=False)


def check_cocycle(family: PathFamily, samples) -> float:
    """Max residual of the offset-form cocycle
    ``f(s; xh, yh) = f(l s + so; xo, yo) - f(so) - l f'(so) s`` over samples
    of ``(xo, yo, l, so, s)``."""
    worst = 0.0
    for xo, yo, lam, so, s in samples:
        xo = np.asarray(xo, dtype=float)
        yo = np.asarray(yo, dtype=float)
        f_so = np.asarray(family.f(so, xo, yo), dtype=float)
        fs_so = np.asarray(family.f_s(so, xo, yo), dtype=float)
        xh = xo + yo * so + f_so
        yh = lam * (yo + fs_so)
        lhs = np.asarray(family.f(s, xh, yh), dtype=float)
        rhs = np.asarray(family.f(lam * s + so, xo, yo), dtype=float) - f_so - lam * fs_so * s
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / (1.0 + np.max(np.abs(rhs)))))
    return worst


def default_cocycle_samples(family: PathFamily, count: int = 50, seed: int = 0):
    rng = np.random.default_rng(seed)
    n = family.dimension
    out = []
    for _ in range(count):
        out.append(
            (rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), rng.uniform(0.3, 2.0), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        )
    return out


def construct_spray_method1(family: PathFamily, cocycle_tol: float = 1e-9, samples=None) -> SprayField:
    """Spray from a offset-form family in the ``s = 0`` gauge.

    The gauge is only consistent when the family satisfies its cocycle, which
    is checked on ``samples`` first.
    """
    if family.form != "offset":
        raise ValueError("construct_spray_method1 needs an offset-form family")
    res = check_cocycle(family, samples if samples is not None else default_cocycle_samples(family))
    if res > cocycle_tol:
        raise GaugeAmbiguity(f"family {family.label} violates its cocycle (residual {res:.2e})")
    n = family.dimension

    def G(x, y):
        x = np.asarray(jet.value(x), dtype=float)
        y = np.asarray(jet.value(y), dtype=float)
        return -0.5 * np.asarray(jet.value(family.f_ss(0.0, x, y)), dtype=float)

    return SprayField(n, family.domain, G, f"pathspace:{family.label}", dict(family.params), ad_capable=False)


def construct_spray(family: PathFamily) -> SprayField:
    return construct_spray_method2(family) if family.form == "path" else construct_spray_method1(family)


# -- checks ---------------------------------------------------------------


@dataclass(frozen=True)
class AxiomsReport:
    existence: bool
    uniqueness: float
    closure: float
    samples: int
    passed: bool


def _fit_state(family: PathFamily, x, y):
    """Family parameters matching a state at ``t = 0`` as ``(c, t0, p)``."""
    if family.form == "offset":
        return 1.0, 0.0, np.concatenate([x, y])
    sol = newton_solve(family, x, y)
    return sol.c, sol.t, sol.p


def _curve(family, c, t0, p):
    return lambda t: family.point(t0 + c * t, p)


def axioms_check(
    family: PathFamily,
    states,
    closure_samples=((0.5, 0.1), (2.0, -0.2), (1.3, 0.05)),
    tol: float = 1e-8,
    perturbation: float = 1e-3,
) -> AxiomsReport:
    """Sampled existence, local uniqueness and affine-reparameterization closure."""
    uniq = 0.0
    clos = 0.0
    taus = np.linspace(-0.05, 0.05, 10)
    count = 0
    for st in states:
        st = _as_state(st)
        x, y = st.x, st.y
        try:
            c, t0, p = _fit_state(family, x, y)
        except (NewtonDiverged, JacobianSingular) as exc:
            raise ClosureFailure(f"existence fails for {family.label}: {exc}", (x, y)) from None
        count += 1
        base = _curve(family, c, t0, p)
        if family.form == "path":
            g = np.concatenate([[c, t0], p])
            g = g * (1.0 + perturbation * np.sin(np.arange(g.size) + 1.0))
            sol2 = newton_solve(family, x, y, (g[0], g[1], g[2:]))
            other = _curve(family, sol2.c, sol2.t, sol2.p)
            for tau in taus:
                uniq = max(uniq, float(np.max(np.abs(base(tau) - other(tau)))))
        for lam, to in closure_samples:
            # eta(t) = curve(lam t + to); refit at t = 0 and compare at 10 values
            eta = lambda t, lam=lam, to=to: base(lam * t + to)
            x0 = eta(0.0)
            if family.form == "path":
                v0 = lam * c * family.velocity(t0 + c * to, p)
                sol = newton_solve(family, x0, v0, (lam * c, t0 + c * to, p))
                fitted = _curve(family, sol.c, sol.t, sol.p)
            else:
                n = family.dimension
                xo, yo = p[:n], p[n:]
                xh = xo + yo * to + np.asarray(family.f(to, xo, yo), dtype=float)
                yh = lam * (yo + np.asarray(family.f_s(to, xo, yo), dtype=float))
                fitted = _curve(family, 1.0, 0.0, np.concatenate([xh, yh]))
            for tau in taus:
                dev = float(np.max(np.abs(eta(tau) - fitted(tau))))
                if dev > tol:
                    raise ClosureFailure(
                        f"closure fails for {family.label} (deviation {dev:.2e})", (x, y, lam, to, tau)
                    )
                clos = max(clos, dev)
    passed = uniq <= tol and clos <= tol
    return AxiomsReport(True, uniq, clos, count, passed)


def jacobian_rank_check(family: PathFamily, t: float, p) -> float:
    """Determinant of ``d(x^a, y^a)/d(p)`` in graph form ``x^a = x^a(x^1; p)``,
    ``y^a = dx^a/dx^1``."""
    fam = family
    if fam.form == "offset":
        if fam.graph_form is None:
            raise NotGraphLike(f"family {fam.label} has no graph form")
        fam = fam.graph_form
    p = np.asarray(p, dtype=float)
    k = p.size
    n = fam.dimension
    z = jet.seed(np.concatenate([[t], p]), order=1)
    _, sj, _ = jet.unpack(fam.sigma(z[0], z[1:]), k + 1, order=1)
    vv, vj, _ = jet.unpack(fam.sigma_t(z[0], z[1:]), k + 1, order=1)
    if abs(vv[0]) <= 1e-9 * max(1.0, float(np.linalg.norm(vv))):
        raise NotGraphLike(f"x^1 is not monotone in t for {fam.label} at t={t}")
    # t as a function of p at fixed x^1
    dt_dp = -sj[0, 1:] / vv[0]
    dx = sj[1:, 1:] + np.outer(vv[1:], dt_dp)
    # y^a = v^a / v^1
    dy_raw = (vj[1:, :] * vv[0] - np.outer(vv[1:], vj[0, :])) / vv[0] ** 2
    dy = dy_raw[:, 1:] + np.outer(dy_raw[:, 0], dt_dp)
    M = np.vstack([dx, dy])
    if M.shape != (2 * (n - 1), k):
        raise ParamCountMismatch("Jacobian is not square")
    return float(np.linalg.det(M))


@dataclass(frozen=True)
class RoundtripReport:
    max_distance: float
    radius_error: float
    states: int
    spans: tuple


def roundtrip_check(
    family: PathFamily,
    spray: SprayField,
    initials,
    horizon: float = 4.0,
    settings: Optional[IntegratorSettings] = None,
) -> RoundtripReport:
    """Integrate ``spray`` from each state and compare with the family curve.

    The comparison window is half of the curve's parameter interval (capped
    by ``horizon``) on each side of ``t = 0``.
    """
    settings = settings or IntegratorSettings(rtol=1e-11, atol=1e-11, residual_bound=1e-6)
    worst = 0.0
    rad = 0.0
    spans = []
    for st in initials:
        st = _as_state(st)
        c, t0, p = _fit_state(family, st.x, st.y)
        if family.form == "path":
            lo, hi = family.t_domain(p)
            a, b = (lo - t0) / c, (hi - t0) / c
        else:
            a, b = -math.inf, math.inf
        a, b = max(a, -2.0 * horizon), min(b, 2.0 * horizon)
        spans.append((a / 2.0, b / 2.0))
        curve = _curve(family, c, t0, p)
        for end in (b / 2.0, a / 2.0):
            traj = integrate(spray, st, end, settings)
            for t, x in zip(traj.t, traj.x):
                worst = max(worst, float(np.max(np.abs(x - curve(t)))))
                if family.circle is not None:
                    centre, r = family.circle(p)
                    rad = max(rad, abs(float(np.linalg.norm(x - centre)) - float(r)))
    return RoundtripReport(worst, rad, len(spans), tuple(spans))


# -- built-in families ----------------------------------------------------


def lines(n: int = 2) -> PathFamily:
    """Straight lines in graph form ``x^1 = t, x^a = u^a + v^a t``; reachable cone ``y^1 > 0``."""

    def sigma(t, p):
        u, v = p[: n - 1], p[n - 1 :]
        return jet.vec([t] + [u[i] + v[i] * t for i in range(n - 1)])

    def sigma_t(t, p):
        v = p[n - 1 :]
        return jet.vec([1.0 + 0.0 * t] + [v[i] + 0.0 * t for i in range(n - 1)])

    def sigma_tt(t, p):
        return np.zeros(n)

    def seed(x, y):
        if not y[0] > 0:
            return None
        v = y[1:] / y[0]
        return y[0], x[0], np.concatenate([x[1:] - v * x[0], v])

    dom = ConicalDomain(n, lambda x, y: bool(y[0] > 0 and np.all(np.isfinite(x))), None, "y1>0")
    return PathFamily("lines", n, 2 * (n - 1), dom, "path", sigma, sigma_t, sigma_tt, seed=seed)


def semicircles() -> PathFamily:
    """Semicircles centred on the horizontal axis.

    ``sigma(t; u, w) = (u - w sin t, |w| cos t)`` for ``|t| < pi/2``; the sign
    of ``w`` selects the direction of travel.
    """

    def sigma(t, p):
        u, w = p
        return jet.vec([u - w * jet.sin(t), _abs(w) * jet.cos(t)])

    def sigma_t(t, p):
        u, w = p
        return jet.vec([-w * jet.cos(t), -_abs(w) * jet.sin(t)])

    def sigma_tt(t, p):
        u, w = p
        return np.array([w * math.sin(t), -abs(w) * math.cos(t)])

    def seed(x, y):
        if abs(y[0]) <= VERTICAL_TOL * np.linalg.norm(y):
            return None
        a = x[0] + x[1] * y[1] / y[0]
        R = math.hypot(x[0] - a, x[1])
        w = -math.copysign(R, y[0])
        t = math.atan2((a - x[0]) / w, x[1] / R)
        return float(np.linalg.norm(y)) / R, t, np.array([a, w])

    def limit(x, y):
        if abs(y[0]) <= VERTICAL_TOL * np.linalg.norm(y):
            # vertical lines are geodesics with zero coefficients
            return np.zeros(2)
        return None

    def circle(p):
        return np.array([p[0], 0.0]), abs(p[1])

    return PathFamily(
        "semicircles",
        2,
        2,
        upper_half_plane(),
        "path",
        sigma,
        sigma_t,
        sigma_tt,
        lambda p: (-math.pi / 2, math.pi / 2),
        seed,
        limit,
        circle,
    )


def circles(r: float = 1.0, n: int = 2) -> PathFamily:
    """Counter-clockwise circles of fixed radius ``r``: ``(a + r cos t, b + r sin t)``."""
    if not r > 0:
        raise ValueError("radius must be positive")
    if n != 2:
        # centre (n) plus the plane of the circle (2n - 4 angles)
        raise ParamCountMismatch(
            f"circles of fixed radius in dimension {n} form a {3 * n - 4}-parameter family, not {2 * (n - 1)}"
        )

    def sigma(t, p):
        return jet.vec([p[0] + r * jet.cos(t), p[1] + r * jet.sin(t)])

    def sigma_t(t, p):
        return jet.vec([-r * jet.sin(t), r * jet.cos(t)])

    def sigma_tt(t, p):
        return np.array([-r * math.cos(t), -r * math.sin(t)])

    def seed(x, y):
        ny = float(np.linalg.norm(y))
        centre = x + r * np.array([-y[1], y[0]]) / ny
        t = math.atan2(x[1] - centre[1], x[0] - centre[0])
        return ny / r, t, centre

    def circle(p):
        return np.asarray(p, dtype=float), r

    return PathFamily(
        f"circles(r={r:g})", 2, 2, whole_space(2), "path", sigma, sigma_t, sigma_tt, seed=seed, circle=circle, params={"r": r}
    )


def _sphere_point(angles):
    """Unit vector from hyperspherical angles (jet friendly)."""
    m = len(angles)
    coords = []
    prod = 1.0
    for i in range(m):
        coords.append(prod * jet.cos(angles[i]))
        prod = prod * jet.sin(angles[i])
    coords.append(prod)
    return coords


def _sphere_angles(v):
    v = np.asarray(v, dtype=float)
    n = v.size
    ang = []
    for i in range(n - 2):
        ang.append(math.atan2(float(np.linalg.norm(v[i + 1 :])), v[i]))
    ang.append(math.atan2(v[-1], v[-2]))
    return np.array(ang)


def _arc_geometry(pv, qv):
    """Centre ``m`` and radius ``rho`` of the circle through p, q orthogonal to the sphere.

    Uses ``1 + p.q = |p + q|^2 / 2`` and ``rho = |p - q| / |p + q|``, which stay
    accurate for nearly antipodal endpoints.
    """
    s = [a + b for a, b in zip(pv, qv)]
    d = [a - b for a, b in zip(pv, qv)]
    s2 = sum(e * e for e in s)
    m = [2.0 * e / s2 for e in s]
    rho = jet.sqrt(sum(e * e for e in d) / s2)
    return m, rho


def ball_arcs(n: int = 2) -> PathFamily:
    """Circle arcs in the unit ball meeting the boundary orthogonally.

    ``sigma(t; p, q) = m + (p - m) cos t + rho p sin t`` with ``m = (p + q)/(1 + p.q)``
    and ``rho = |p - m|``; ``p, q`` are boundary points given by hyperspherical
    angles.  The arc inside the ball is ``t in (t_q, 0)``, travelled towards ``p``.
    """
    k = n - 1

    def split(p):
        return _sphere_point(p[:k]), _sphere_point(p[k:])

    def sigma(t, p):
        pv, qv = split(p)
        m, rho = _arc_geometry(pv, qv)
        ct, st, sh = jet.cos(t), jet.sin(t), jet.sin(0.5 * t)
        vers = 2.0 * sh * sh
        return jet.vec([m[i] * vers + pv[i] * ct + rho * pv[i] * st for i in range(n)])

    def sigma_t(t, p):
        pv, qv = split(p)
        m, rho = _arc_geometry(pv, qv)
        ct, st = jet.cos(t), jet.sin(t)
        return jet.vec([(m[i] - pv[i]) * st + rho * pv[i] * ct for i in range(n)])

    def sigma_tt(t, p):
        pv, qv = (np.array(v, dtype=float) for v in split(np.asarray(p, dtype=float)))
        m, rho = _arc_geometry(pv, qv)
        m = np.array(m, dtype=float)
        return (m - pv) * math.cos(t) - rho * pv * math.sin(t)

    def t_domain(p):
        pv, qv = (np.array(v, dtype=float) for v in split(np.asarray(p, dtype=float)))
        m, rho = _arc_geometry(pv, qv)
        m = np.array(m, dtype=float)
        e1 = (pv - m) / rho
        d = qv - m
        tq = math.atan2(float(d @ pv), float(d @ e1))
        if tq > 0:
            tq -= 2.0 * math.pi
        return tq, 0.0

    def _perp(x, y):
        yh = y / np.linalg.norm(y)
        return x - (x @ yh) * yh, yh

    def seed(x, y):
        xp, yh = _perp(x, y)
        if np.linalg.norm(xp) <= DIAMETER_TOL:
            return None
        w = xp / np.linalg.norm(xp)
        alpha = (1.0 - x @ x) / (2.0 * (x @ w))
        m = x + alpha * w
        rho = abs(alpha)
        rhat = (x - m) / rho
        A, B = float(m @ rhat), float(m @ yh)
        R = math.hypot(A, B)
        phi0 = math.atan2(B, A)
        delta = math.acos(max(-1.0, min(1.0, -rho / R)))
        roots = [(phi0 + delta) % (2 * math.pi), (phi0 - delta) % (2 * math.pi)]
        phi_p = min(roots)
        phi_q = max(roots) - 2 * math.pi

        def pt(phi):
            return m + rho * (rhat * math.cos(phi) + yh * math.sin(phi))

        pv, qv = pt(phi_p), pt(phi_q)
        pv, qv = pv / np.linalg.norm(pv), qv / np.linalg.norm(qv)
        return float(np.linalg.norm(y)) / rho, -phi_p, np.concatenate([_sphere_angles(pv), _sphere_angles(qv)])

    def limit(x, y):
        xp, _ = _perp(x, y)
        if np.linalg.norm(xp) <= DIAMETER_TOL:
            # diameters: the arcs degenerate to straight chords through the centre
            return np.zeros(n)
        return None

    def circle(p):
        pv, qv = (np.array(v, dtype=float) for v in split(np.asarray(p, dtype=float)))
        m, rho = _arc_geometry(pv, qv)
        return np.array(m, dtype=float), float(rho)

    return PathFamily(
        f"ball_arcs(n={n})" if n != 2 else "ball_arcs",
        n,
        2 * k,
        unit_ball(n),
        "path",
        sigma,
        sigma_t,
        sigma_tt,
        t_domain,
        seed,
        limit,
        circle,
        params={"n": n},
    )


def cubic2d() -> PathFamily:
    """Planar cubics ``(a, b) + (u, v) s - (0, 1)(u^3 s^3 / 3 + a u^2 s^2)``."""

    def f(s, xo, yo):
        a, u = xo[0], yo[0]
        return jet.vec([0.0 * s, -(u**3 * s**3 / 3.0 + a * u**2 * s**2)])

    def f_s(s, xo, yo):
        a, u = xo[0], yo[0]
        return jet.vec([0.0 * s, -(u**3 * s**2 + 2.0 * a * u**2 * s)])

    def f_ss(s, xo, yo):
        a, u = xo[0], yo[0]
        return jet.vec([0.0 * s, -(2.0 * u**3 * s + 2.0 * a * u**2)])

    def g_sigma(t, p):
        b, v = p
        return jet.vec([t, b + v * t - t**3 / 3.0])

    def g_sigma_t(t, p):
        b, v = p
        return jet.vec([1.0 + 0.0 * t, v - t**2])

    def g_sigma_tt(t, p):
        return np.array([0.0, -2.0 * t])

    def g_seed(x, y):
        if not y[0] > 0:
            return None
        t = x[0]
        v = y[1] / y[0] + t**2
        b = x[1] - v * t + t**3 / 3.0
        return y[0], t, np.array([b, v])

    graph = PathFamily(
        "cubic2d_graph",
        2,
        2,
        ConicalDomain(2, lambda x, y: bool(y[0] > 0), None, "y1>0"),
        "path",
        g_sigma,
        g_sigma_t,
        g_sigma_tt,
        seed=g_seed,
    )
    return PathFamily("cubic2d", 2, 4, whole_space(2), "offset", f=f, f_s=f_s, f_ss=f_ss, graph_form=graph)


def cubic2d_closure_map(xo, yo, lam, so):
    """Explicit reparameterized data ``(a, b, u, v) -> (a^, b^, u^, v^)`` for the planar cubics."""
    a, b = xo
    u, v = yo
    ah = a + u * so
    bh = b + v * so - u**2 * (3.0 * a + u * so) * so**2 / 3.0
    uh = lam * u
    vh = lam * v - lam * u**2 * so * (2.0 * a + u * so)
    return np.array([ah, bh]), np.array([uh, vh])


def cubic3d() -> PathFamily:
    """Cubics in R^3: ``(a,b,c) + (u,v,w) s - (0,1,0) h(s)`` with
    ``h = -(u^3 + w^3) s^3 / 3 - (a u^2 + c w^2) s^2``."""

    def f(s, xo, yo):
        a, c = xo[0], xo[2]
        u, w = yo[0], yo[2]
        h = -(u**3 + w**3) * s**3 / 3.0 - (a * u**2 + c * w**2) * s**2
        return jet.vec([0.0 * s, -h, 0.0 * s])

    def f_s(s, xo, yo):
        a, c = xo[0], xo[2]
        u, w = yo[0], yo[2]
        return jet.vec([0.0 * s, (u**3 + w**3) * s**2 + 2.0 * (a * u**2 + c * w**2) * s, 0.0 * s])

    def f_ss(s, xo, yo):
        a, c = xo[0], xo[2]
        u, w = yo[0], yo[2]
        return jet.vec([0.0 * s, 2.0 * (u**3 + w**3) * s + 2.0 * (a * u**2 + c * w**2), 0.0 * s])

    # graph form: gauge a = 0, u = 1 leaves (b, c, v, w)
    def g_sigma(t, p):
        b, c, v, w = p
        return jet.vec([t, b + v * t + (1.0 + w**3) * t**3 / 3.0 + c * w**2 * t**2, c + w * t])

    def g_sigma_t(t, p):
        b, c, v, w = p
        return jet.vec([1.0 + 0.0 * t, v + (1.0 + w**3) * t**2 + 2.0 * c * w**2 * t, w + 0.0 * t])

    def g_sigma_tt(t, p):
        b, c, v, w = p
        return np.array([0.0, 2.0 * (1.0 + w**3) * t + 2.0 * c * w**2, 0.0])

    def g_seed(x, y):
        if not y[0] > 0:
            return None
        t = x[0]
        w = y[2] / y[0]
        c = x[2] - w * t
        v = y[1] / y[0] - (1.0 + w**3) * t**2 - 2.0 * c * w**2 * t
        b = x[1] - v * t - (1.0 + w**3) * t**3 / 3.0 - c * w**2 * t**2
        return y[0], t, np.array([b, c, v, w])

    graph = PathFamily(
        "cubic3d_graph",
        3,
        4,
        ConicalDomain(3, lambda x, y: bool(y[0] > 0), None, "y1>0"),
        "path",
        g_sigma,
        g_sigma_t,
        g_sigma_tt,
        seed=g_seed,
    )
    return PathFamily("cubic3d", 3, 6, whole_space(3), "offset", f=f, f_s=f_s, f_ss=f_ss, graph_form=graph)


FAMILIES = {
    "lines": lambda n=2: lines(int(n)),
    "semicircles": lambda: semicircles(),
    "circles": lambda r=1.0, n=2: circles(float(r), int(n)),
    "ball_arcs": lambda n=2: ball_arcs(int(n)),
    "cubic2d": lambda: cubic2d(),
    "cubic3d": lambda: cubic3d(),
}


def named_family(label: str, **params) -> PathFamily:
    from .errors import BadParams, UnknownLabel

    if label not in FAMILIES:
        raise UnknownLabel(f"unknown family {label!r}; known: {sorted(FAMILIES)}")
    try:
        return FAMILIES[label](**params)
    except TypeError as exc:
        raise BadParams(str(exc)) from None
