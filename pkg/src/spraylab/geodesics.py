"""Geodesic integration, residual audits and maximal-interval probing.

Geodesics solve the first-order system ``x' = y, y' = -2 G(x, y)``.  The
integrator is an embedded Dormand-Prince 5(4) pair with FSAL and a quartic
dense output.  Any stage that leaves the spray's domain rejects the step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import jet
from .core import SprayField, TangentState, _as_state
from .errors import (
    DimensionMismatch,
    DomainViolation,
    ImmediateDomainViolation,
    NotAGeodesicPointSet,
    ProbeFailure,
    StepUnderflow,
    TooFewSamples,
)
from .numdiff import sample_derivatives

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# quartic dense output: z(t0 + th*h) = z0 + h * (K.T @ _P) @ [th, th^2, th^3, th^4]
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
TOLERANCE_FLOOR = 1e-13


@dataclass(frozen=True)
class IntegratorSettings:
    rtol: float = 1e-10
    atol: float = 1e-10
    residual_bound: float = 1e-8
    max_step: Optional[float] = None  # default |t_end| / 32
    min_step: float = 1e-14
    max_steps: int = 200_000
    blowup_norm: float = 1e8
    # stop when the domain level function falls below this depth
    boundary_depth: float = 1e-11
    auto_tighten: bool = True


@dataclass(frozen=True)
class ProbeSettings:
    horizon: float = 1e4
    blowup_norm: float = 1e8
    rtol: float = 1e-10
    atol: float = 1e-300
    min_step: float = 1e-14
    max_steps: int = 500_000
    layer_depth: float = 1e-6
    final_depth: float = 1e-11
    # boundary-approach exponent q within this distance of 1 means infinite time
    infinite_gap: float = 0.02
    drift_ratio: float = 0.25
    # coefficients lose accuracy like eps/d near the boundary; the exponent
    # analysis only needs a few digits there
    layer_rtol: float = 1e-7


@dataclass
class _Segment:
    t0: float
    h: float
    z0: np.ndarray
    Q: np.ndarray

    def state(self, t):
        th = (t - self.t0) / self.h
        return self.z0 + self.h * (self.Q @ np.array([th, th**2, th**3, th**4]))

    def rate(self, t):
        th = (t - self.t0) / self.h
        return self.Q @ np.array([1.0, 2 * th, 3 * th**2, 4 * th**3])


@dataclass
class Trajectory:
    """Accepted steps of a geodesic, stored with ``t`` increasing."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    spray_label: str
    tolerances: dict = field(default_factory=dict)
    max_residual: float = 0.0
    truncated: bool = False
    status: str = "complete"
    segments: list = field(default_factory=list, repr=False)

    @property
    def samples(self):
        return [(float(t), x, y) for t, x, y in zip(self.t, self.x, self.y)]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def __len__(self):
        return self.t.size

    @classmethod
    def from_samples(cls, t, x, y=None, spray_label="samples"):
        """Wrap a sampled curve; velocities are differentiated if omitted."""
        t = np.asarray(t, dtype=float)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if y is None:
            (y,) = sample_derivatives(t, x, orders=(1,))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        order = np.argsort(t)
        return cls(t[order], x[order], y[order], spray_label)

    def state_at(self, t: float):
        """Dense-output ``(x, y)`` at time ``t`` inside the sampled range."""
        if not self.segments:
            raise ValueError("trajectory has no dense output")
        if not (self.t[0] - 1e-12 <= t <= self.t[-1] + 1e-12):
            raise ValueError(f"t={t} outside [{self.t[0]}, {self.t[-1]}]")
        i = int(np.searchsorted(self.t, t, side="right")) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        z = self.segments[i].state(t)
        n = self.n
        return z[:n], z[n:]

    def resample(self, ts):
        ts = np.asarray(ts, dtype=float)
        xs = np.empty((ts.size, self.n))
        ys = np.empty((ts.size, self.n))
        for k, t in enumerate(ts):
            xs[k], ys[k] = self.state_at(t)
        return xs, ys


@dataclass(frozen=True)
class IntervalEstimate:
    a: float
    b: float
    left_status: str
    right_status: str
    refinement_error: float


# -- stepping core --------------------------------------------------------


class _System:
    def __init__(self, spray: SprayField):
        self.spray = spray
        self.n = spray.dimension
        self.G = spray.coefficients
        self.contains = spray.domain.contains

    def rhs(self, z):
        n = self.n
        x, y = z[:n], z[n:]
        if not (np.all(np.isfinite(z)) and self.contains(x, y)):
            return None
        try:
            g = np.asarray(jet.value(self.G(x, y)), dtype=float)
        except (DomainViolation, ZeroDivisionError, ValueError, OverflowError):
            return None
        if not np.all(np.isfinite(g)):
            return None
        return np.concatenate([y, -2.0 * g])


def _try_step(system: _System, z, k0, h):
    """One DP45 attempt; returns (z_new, K, err_vec) or None on a domain failure."""
    K = np.empty((7, z.size))
    K[0] = k0
    for s in range(1, 6):
        zs = z + h * (np.dot(_A[s], K[:s]))
        ks = system.rhs(zs)
        if ks is None:
            return None
        K[s] = ks
    z_new = z + h * (_B @ K[:6])
    k_new = system.rhs(z_new)
    if k_new is None:
        return None
    K[6] = k_new
    return z_new, K, h * (_E @ K)


def _error_norm(err, z, z_new, n, rtol, atol):
    sx = atol + rtol * max(np.max(np.abs(z[:n])), np.max(np.abs(z_new[:n])))
    sy = atol + rtol * max(np.max(np.abs(z[n:])), np.max(np.abs(z_new[n:])))
    return max(np.max(np.abs(err[:n])) / sx, np.max(np.abs(err[n:])) / sy)


def _initial_step(z, k0, n, rtol, atol):
    scale = atol + rtol * np.abs(z)
    d0 = np.sqrt(np.mean((z / scale) ** 2))
    d1 = np.sqrt(np.mean((k0 / scale) ** 2))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return max(h, 1e-12)


def _integrate_once(spray, state, t_end, settings: IntegratorSettings):
    system = _System(spray)
    n = state.n
    z = np.concatenate([state.x, state.y])
    k = system.rhs(z)
    if k is None:
        raise ImmediateDomainViolation(f"initial state is outside the domain of {spray.label}")
    level = spray.domain.level
    sign = 1.0 if t_end > 0 else -1.0
    span = abs(t_end)
    max_step = settings.max_step if settings.max_step is not None else span / 32.0
    h = min(_initial_step(z, k, n, settings.rtol, settings.atol), max_step, span)
    t = 0.0
    ts, zs, segs = [0.0], [z.copy()], []
    status, truncated = "complete", False
    rejected_last = False
    for _ in range(settings.max_steps):
        if abs(t) >= span * (1 - 1e-15):
            break
        h = min(h, span - abs(t), max_step)
        attempt = _try_step(system, z, k, sign * h)
        if attempt is None:
            h *= 0.25
            rejected_last = True
            if h < settings.min_step * max(1.0, abs(t)):
                status, truncated = "domain_exit", True
                break
            continue
        z_new, K, err = attempt
        en = _error_norm(err, z, z_new, n, settings.rtol, settings.atol)
        if en > 1.0:
            h *= max(MIN_FACTOR, SAFETY * en**-0.2)
            rejected_last = True
            if h < settings.min_step * max(1.0, abs(t)):
                raise StepUnderflow(f"step size fell below {settings.min_step:g} at t={t}")
            continue
        segs.append(_Segment(t, sign * h, z.copy(), K.T @ _P))
        t = t + sign * h
        z, k = z_new, K[6]
        ts.append(t)
        zs.append(z.copy())
        grow = MAX_FACTOR if not rejected_last else 1.0
        h *= min(grow, SAFETY * en**-0.2) if en > 0 else grow
        rejected_last = False
        if np.linalg.norm(z[n:]) > settings.blowup_norm:
            status, truncated = "blowup", True
            break
        if level is not None and float(jet.value(level(z[:n]))) < settings.boundary_depth:
            status, truncated = "domain_exit", True
            break
    else:
        raise StepUnderflow(f"exceeded {settings.max_steps} steps before reaching t={t_end}")
    ts = np.array(ts)
    zs = np.array(zs)
    if sign < 0:
        ts, zs, segs = ts[::-1], zs[::-1], segs[::-1]
    traj = Trajectory(
        ts,
        zs[:, :n].copy(),
        zs[:, n:].copy(),
        spray.label,
        {"rtol": settings.rtol, "atol": settings.atol, "residual_bound": settings.residual_bound},
        0.0,
        truncated,
        status,
        segs,
    )
    traj.max_residual = _dense_residual(traj, system)
    return traj


def _dense_residual(traj: Trajectory, system: _System) -> float:
    """Max of ``|x'' + 2G(x, x')|`` at segment midpoints of the dense output."""
    n = traj.n
    worst = 0.0
    for seg in traj.segments:
        tm = seg.t0 + 0.5 * seg.h
        z = seg.state(tm)
        rate = seg.rate(tm)
        g = np.asarray(jet.value(system.G(z[:n], z[n:])), dtype=float)
        worst = max(worst, float(np.linalg.norm(rate[n:] + 2.0 * g)))
    return worst


def integrate(spray: SprayField, initial, t_end: float, settings: Optional[IntegratorSettings] = None) -> Trajectory:
    """Integrate the geodesic through ``initial`` from ``t = 0`` to ``t_end``.

    If the dense-output residual exceeds ``settings.residual_bound`` the run is
    repeated with tolerances tightened a hundredfold, down to 1e-13.
    """
    settings = settings or IntegratorSettings()
    state = _as_state(initial)
    if state.n != spray.dimension:
        raise DimensionMismatch(f"spray {spray.label} has dimension {spray.dimension}, state has {state.n}")
    if not spray.domain.contains(state.x, state.y):
        raise ImmediateDomainViolation(f"initial state is outside the domain of {spray.label}")
    if t_end == 0:
        raise ValueError("t_end must be nonzero")
    traj = _integrate_once(spray, state, float(t_end), settings)
    current = settings
    while (
        settings.auto_tighten
        and traj.max_residual > settings.residual_bound
        and current.rtol > TOLERANCE_FLOOR
    ):
        current = replace(
            current,
            rtol=max(current.rtol * 0.01, TOLERANCE_FLOOR),
            atol=max(current.atol * 0.01, TOLERANCE_FLOOR),
        )
        traj = _integrate_once(spray, state, float(t_end), current)
    return traj


def geodesic_residual(traj: Trajectory, spray: SprayField) -> float:
    """Max ``|x'' + 2G(x, x')|`` with ``x''`` from local polynomial fits of the samples."""
    if len(traj) < 5:
        raise TooFewSamples(f"need at least 5 samples, got {len(traj)}")
    (xpp,) = sample_derivatives(traj.t, traj.x, orders=(2,))
    worst = 0.0
    for i in range(len(traj)):
        x, y = traj.x[i], traj.y[i]
        spray.domain.check(x, y)
        g = np.asarray(jet.value(spray.coefficients(x, y)), dtype=float)
        worst = max(worst, float(np.linalg.norm(xpp[i] + 2.0 * g)))
    return worst


# -- maximal interval -----------------------------------------------------


def _boundary_jets(spray: SprayField, x, y, g):
    """Level ``d`` and its first two derivatives along the geodesic."""
    n = x.size
    z = jet.seed(x)
    _, grad, hess = jet.unpack([spray.domain.level(z)], n)
    d = float(jet.value(spray.domain.level(x)))
    d1 = float(grad[0] @ y)
    d2 = float(y @ hess[0] @ y - 2.0 * grad[0] @ g)
    return d, d1, d2


def _probe_direction(spray: SprayField, state: TangentState, sign: float, settings: ProbeSettings):
    system = _System(spray)
    n = state.n
    level = spray.domain.level
    z = np.concatenate([state.x, state.y])
    k = system.rhs(z)
    if k is None:
        raise ImmediateDomainViolation(f"initial state is outside the domain of {spray.label}")
    h = _initial_step(z, k, n, settings.rtol, 1e-12)
    t = 0.0
    layer_q = []
    last = None
    blow_hist = []
    rejected_last = False
    rtol = settings.rtol
    for _ in range(settings.max_steps):
        if t >= settings.horizon:
            return settings.horizon, "horizon_reached", 0.0
        h = min(h, settings.horizon - t)
        attempt = _try_step(system, z, k, sign * h)
        if attempt is None:
            h *= 0.25
            rejected_last = True
            if h < settings.min_step * max(1.0, t):
                return _finish_underflow(t, h, layer_q, last, settings, spray)
            continue
        z_new, K, err = attempt
        en = _error_norm(err, z, z_new, n, rtol, settings.atol)
        if en > 1.0:
            h *= max(MIN_FACTOR, SAFETY * en**-0.2)
            rejected_last = True
            if h < settings.min_step * max(1.0, t):
                return _finish_underflow(t, h, layer_q, last, settings, spray)
            continue
        t += h
        z, k = z_new, K[6]
        grow = MAX_FACTOR if not rejected_last else 1.0
        h *= min(grow, SAFETY * en**-0.2) if en > 0 else grow
        rejected_last = False
        x, y = z[:n], z[n:]
        g = -0.5 * k[n:]
        # velocity with respect to the probing time |t|
        ys = sign * y
        ynorm = float(np.linalg.norm(y))
        if ynorm > math.sqrt(settings.blowup_norm):
            # d ln|y| / dt; for |y| ~ C/(T-t)^p its reciprocal is (T-t)/p
            r = float(ys @ (-2.0 * g)) / ynorm**2
            if r > 0:
                blow_hist.append((t, 1.0 / r))
        if ynorm > settings.blowup_norm:
            return _finish_blowup(t, blow_hist)
        in_layer = level is not None and float(jet.value(level(x))) < settings.layer_depth
        rtol = max(settings.rtol, settings.layer_rtol) if in_layer else settings.rtol
        if in_layer:
            d, d1, d2 = _boundary_jets(spray, x, ys, g)
            if d1 < 0:
                q = d * d2 / (d1 * d1)
                layer_q.append(q)
                last = (t, d, d1, q)
                if d < settings.final_depth:
                    return _classify_boundary(layer_q, last, settings)
        elif layer_q:
            layer_q = []
    raise ProbeFailure(f"probe exceeded {settings.max_steps} steps at t={t}")


def _classify_boundary(layer_q, last, settings: ProbeSettings):
    t, d, d1, qf = last
    q0 = layer_q[0]
    gap = 1.0 - qf
    if gap <= settings.infinite_gap or abs(qf - q0) > settings.drift_ratio * gap:
        return settings.horizon, "horizon_reached", 0.0
    remaining = d / (abs(d1) * gap)
    tail = layer_q[-min(len(layer_q), 8):]
    spread = max(tail) - min(tail)
    err = remaining * max(spread / gap, 1e-12) + 1e-15 * max(1.0, t)
    return t + remaining, "domain_exit", err


def _finish_underflow(t, h, layer_q, last, settings, spray):
    if last is not None and layer_q:
        return _classify_boundary(layer_q, last, settings)
    if spray.domain.level is None:
        return t, "domain_exit", max(h, 1e-15 * max(1.0, t))
    raise StepUnderflow(f"step size underflow at t={t} away from the boundary")


def _finish_blowup(t, hist):
    pts = np.array(hist[-8:])
    if len(pts) < 3:
        return t, "blowup", abs(t) * 1e-6
    fit = np.polyfit(pts[:, 0], pts[:, 1], 1)
    T = -fit[1] / fit[0] if fit[0] != 0 else t
    pts4 = pts[-4:]
    fit4 = np.polyfit(pts4[:, 0], pts4[:, 1], 1)
    T4 = -fit4[1] / fit4[0] if fit4[0] != 0 else t
    T = max(T, t)
    return T, "blowup", abs(T - T4) + 1e-15 * max(1.0, t)


def probe_maximal_interval(spray: SprayField, initial, settings: Optional[ProbeSettings] = None) -> IntervalEstimate:
    """Estimate the maximal interval ``(a, b)`` of the geodesic through ``initial``.

    Finite endpoints at the spatial boundary are located by the asymptotics
    of the level function ``d`` of the domain: along a geodesic that reaches
    the boundary like ``d ~ (T - t)^p`` the ratio ``q = d d'' / d'^2`` tends to
    ``1 - 1/p < 1``, and ``T = t + d / (|d'| (1 - q))``.  Exponential or faster
    approach (``q -> 1`` or still drifting upward at the final depth) means the
    boundary is never reached, which is reported as ``horizon_reached``.
    """
    settings = settings or ProbeSettings()
    state = _as_state(initial)
    if state.n != spray.dimension:
        raise DimensionMismatch(f"spray {spray.label} has dimension {spray.dimension}, state has {state.n}")
    if not spray.domain.contains(state.x, state.y):
        raise ImmediateDomainViolation(f"initial state is outside the domain of {spray.label}")
    b, rs, eb = _probe_direction(spray, state, 1.0, settings)
    a, ls, ea = _probe_direction(spray, state, -1.0, settings)
    # global integration error grows roughly like rtol per unit time
    if rs != "horizon_reached":
        eb += 10.0 * settings.rtol * b
    if ls != "horizon_reached":
        ea += 10.0 * settings.rtol * a
    return IntervalEstimate(-float(a), float(b), ls, rs, float(max(ea, eb)))


# -- general parameters ---------------------------------------------------


@dataclass(frozen=True)
class GammaReport:
    t: np.ndarray
    gamma: np.ndarray
    orthogonal_residual: float
    s_prime: np.ndarray
    s: np.ndarray
    clock_residual: float


def gamma_of_general_parameter(curve, spray: SprayField, tol: float = 1e-5) -> GammaReport:
    """Recover ``gamma(t)`` in ``x'' + 2G(x, x') = gamma(t) x'`` from a sampled curve.

    ``gamma`` is the least-squares projection of ``x'' + 2G`` onto ``x'``.
    Integrating it gives the affine clock ``s' = exp(int gamma)`` (normalised to
    ``s'(t_0) = 1``), and the rescaled velocity ``w = x'/s'`` is then audited
    against ``dw/dt = -2 G(x, w) s'``.
    """
    if not isinstance(curve, Trajectory):
        t, x = curve[0], curve[1]
        y = curve[2] if len(curve) > 2 else None
        curve = Trajectory.from_samples(t, x, y)
    if len(curve) < 5:
        raise TooFewSamples(f"need at least 5 samples, got {len(curve)}")
    t = curve.t
    xp, xpp = sample_derivatives(t, curve.x, orders=(1, 2))
    m = t.size
    gamma = np.empty(m)
    worst = 0.0
    for i in range(m):
        g = np.asarray(jet.value(spray.coefficients(curve.x[i], xp[i])), dtype=float)
        r = xpp[i] + 2.0 * g
        gi = float(r @ xp[i]) / float(xp[i] @ xp[i])
        gamma[i] = gi
        orth = float(np.linalg.norm(r - gi * xp[i])) / (1.0 + float(np.linalg.norm(xpp[i])))
        worst = max(worst, orth)
    if worst > tol:
        raise NotAGeodesicPointSet(f"orthogonal residual {worst:.2e} exceeds {tol:g}")
    s_prime = np.exp(CubicSpline(t, gamma).antiderivative()(t))
    s = CubicSpline(t, s_prime).antiderivative()(t)
    w = xp / s_prime[:, None]
    (wp,) = sample_derivatives(t, w, orders=(1,))
    clock = 0.0
    for i in range(m):
        g = np.asarray(jet.value(spray.coefficients(curve.x[i], w[i])), dtype=float)
        dev = wp[i] + 2.0 * g * s_prime[i]
        clock = max(clock, float(np.linalg.norm(dev)) / (1.0 + float(np.linalg.norm(wp[i]))))
    return GammaReport(t, gamma, worst, s_prime, s, clock)


# -- CSV ------------------------------------------------------------------


def trajectory_rows(traj: Trajectory):
    n = traj.n
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    rows = [[repr(float(v)) for v in (t, *x, *y)] for t, x, y in zip(traj.t, traj.x, traj.y)]
    return header, rows


def write_csv(traj: Trajectory, path) -> None:
    header, rows = trajectory_rows(traj)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_csv(path, spray_label: str = "csv") -> Trajectory:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(v) for v in row] for row in r])
    n = (len(header) - 1) // 2
    if header[0] != "t" or len(header) != 2 * n + 1:
        raise ValueError(f"unexpected trajectory header {header}")
    return Trajectory(data[:, 0], data[:, 1 : n + 1], data[:, n + 1 :], spray_label)
