"""Berwald connection, Riemann and Ricci curvature of a spray.

The primary scheme evaluates the coefficient map once on second-order jets
seeded at ``z = (x, y)``, which yields every first and second partial
derivative exactly up to rounding.  Sprays that are only available
numerically (``ad_capable = False``) fall back to Richardson-extrapolated
central differences; the same routine serves as the cross-check oracle.

Index conventions for the derivative arrays returned by
:func:`spray_derivatives`: ``J[i, a]`` is the derivative of ``G^i`` in the
``a``-th entry of ``z`` and ``H[i, a, b]`` the second derivative, where
``z[:n] = x`` and ``z[n:] = y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet, numdiff
from .core import ProjectiveFactor, SprayField, TangentState, _as_state, projective_deform
from .errors import DifferentiationFailure, DimensionMismatch

FD_TOLERANCE = 1e-5
RIC_DERIVATIVE_TOLERANCE = 1e-4
WEAK_RICCI_THRESHOLD = 1e-5
# finite-difference stencils stay within this fraction of the distance to the boundary
BOUNDARY_STEP_FRACTION = 0.005
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class BerwaldData:
    N: np.ndarray
    Gamma: np.ndarray


@dataclass(frozen=True)
class CurvatureReport:
    R: np.ndarray
    ric: float
    state: TangentState
    scheme_error: float


@dataclass(frozen=True)
class IsotropyFit:
    R_scalar: float
    tau: np.ndarray
    residual: float


@dataclass(frozen=True)
class Derivatives:
    G: np.ndarray
    J: np.ndarray
    H: np.ndarray
    error: float
    scheme: str


def _checked(spray: SprayField, state) -> TangentState:
    state = _as_state(state)
    if state.n != spray.dimension:
        raise DimensionMismatch(f"spray {spray.label} has dimension {spray.dimension}, state has {state.n}")
    spray.domain.check(state.x, state.y)
    return state


def _fd_step(spray: SprayField, state: TangentState, base: float) -> float:
    """Shrink the stencil so it stays well inside the domain.

    Steps apply to ``(x, y / |y|)``; see :func:`_scaled_coordinates`.
    """
    h = base
    lvl = spray.domain.level
    if lvl is not None:
        d = float(jet.value(lvl(state.x)))
        h = min(h, BOUNDARY_STEP_FRACTION * d)
    return h


def _ad_derivatives(spray: SprayField, state: TangentState) -> Derivatives:
    n = state.n
    z = jet.seed(np.concatenate([state.x, state.y]))
    out = spray.coefficients(z[:n], z[n:])
    G, J, H = jet.unpack(out, 2 * n)
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(H))):
        raise DifferentiationFailure(f"non-finite derivatives of {spray.label} at x={list(state.x)}")
    scale = max(1.0, float(np.max(np.abs(H))), float(np.max(np.abs(J))))
    return Derivatives(G, J, H, 64 * _EPS * scale, "ad")


def _scaled_coordinates(state: TangentState):
    """Differences are taken in ``(x, w)`` with ``y = |y| w`` so one step size
    suits both blocks; returns ``(z0, speed, d)`` with ``d`` the diagonal of
    ``dz/d(x, y)``."""
    n = state.n
    speed = float(np.linalg.norm(state.y))
    z0 = np.concatenate([state.x, state.y / speed])
    d = np.concatenate([np.ones(n), np.full(n, 1.0 / speed)])
    return z0, speed, d


def _fd_derivatives(spray: SprayField, state: TangentState, check: bool = True) -> Derivatives:
    n = state.n
    z0, speed, d = _scaled_coordinates(state)

    def f(z):
        return np.asarray(jet.value(spray.coefficients(z[:n], speed * z[n:])), dtype=float)

    G = f(z0)
    J, ej = numdiff.gradient(f, z0, h=_fd_step(spray, state, numdiff.FIRST_STEP))
    H, eh = numdiff.hessian(f, z0, h=_fd_step(spray, state, numdiff.SECOND_STEP))
    J, ej = J * d, ej * d
    H, eh = H * np.outer(d, d), eh * np.outer(d, d)
    scale = max(1.0, float(np.max(np.abs(H))), float(np.max(np.abs(J))))
    err = max(float(np.max(ej)), float(np.max(eh))) / scale
    if check and (not np.isfinite(err) or err > FD_TOLERANCE):
        raise DifferentiationFailure(
            f"finite-difference error estimate {err:.2e} exceeds {FD_TOLERANCE:g} for {spray.label}"
        )
    return Derivatives(G, J, H, err, "fd")


def spray_derivatives(spray: SprayField, state, scheme: str = "auto") -> Derivatives:
    """First and second partials of ``G`` in ``(x, y)``.

    ``scheme`` is ``"ad"``, ``"fd"`` or ``"auto"`` (jets when the spray supports
    them, finite differences otherwise).
    """
    state = _checked(spray, state)
    if scheme == "auto":
        scheme = "ad" if spray.ad_capable else "fd"
    if scheme == "ad":
        if not spray.ad_capable:
            raise DifferentiationFailure(f"spray {spray.label} cannot be evaluated on jets")
        return _ad_derivatives(spray, state)
    if scheme == "fd":
        return _fd_derivatives(spray, state)
    raise ValueError(f"unknown differentiation scheme {scheme!r}")


def derivative_discrepancy(spray: SprayField, state) -> float:
    """Largest relative disagreement between jet and finite-difference partials.

    Entries are compared relative to ``max(1, |entry|)`` of the jet value.
    """
    state = _checked(spray, state)
    a = _ad_derivatives(spray, state)
    b = _fd_derivatives(spray, state, check=False)
    dj = np.abs(a.J - b.J) / np.maximum(1.0, np.abs(a.J))
    dh = np.abs(a.H - b.H) / np.maximum(1.0, np.abs(a.H))
    return float(max(dj.max(), dh.max()))


def _berwald(d: Derivatives, n: int) -> BerwaldData:
    N = d.J[:, n:]
    Gamma = d.H[:, n:, n:]
    return BerwaldData(N.copy(), Gamma.copy())


def berwald_data(spray: SprayField, state, scheme: str = "auto") -> BerwaldData:
    """Nonlinear connection ``N^i_j`` and Berwald coefficients ``G^i_jk``."""
    state = _as_state(state)
    return _berwald(spray_derivatives(spray, state, scheme), state.n)


def _riemann(d: Derivatives, y: np.ndarray) -> np.ndarray:
    n = y.size
    dx = d.J[:, :n]  # d_k G^i
    dy = d.J[:, n:]  # dot-d_k G^i
    mixed = d.H[:, :n, n:]  # [i, j, k] = d_j dot-d_k G^i
    yy = d.H[:, n:, n:]  # [i, j, k] = dot-d_j dot-d_k G^i
    return (
        2.0 * dx
        - np.einsum("j,ijk->ik", y, mixed)
        + 2.0 * np.einsum("j,ijk->ik", d.G, yy)
        - dy @ dy
    )


def riemann_curvature(spray: SprayField, state, scheme: str = "auto") -> CurvatureReport:
    state = _as_state(state)
    d = spray_derivatives(spray, state, scheme)
    R = _riemann(d, state.y)
    ric = float(np.trace(R))
    return CurvatureReport(R, ric, state, d.error * max(1.0, float(np.max(np.abs(R)))))


def ricci(spray: SprayField, state, scheme: str = "auto") -> float:
    return riemann_curvature(spray, state, scheme).ric


def ricci_horizontal_derivative(spray: SprayField, state, scheme: str = "auto", with_error: bool = False):
    """``Ric_{;0} = y^j (d_j Ric - N^m_j dot-d_m Ric)``.

    By the Euler identity ``N y = 2G`` this is the derivative of ``Ric`` along
    the spray vector field ``(y, -2G)``, computed here as one
    Richardson-extrapolated central difference over jet-computed ``Ric``.
    """
    state = _checked(spray, state)
    n = state.n
    G = eval_G(spray, state)
    v = np.concatenate([state.y, -2.0 * G])
    z0 = np.concatenate([state.x, state.y])
    vnorm = float(np.linalg.norm(v))
    h = _fd_step(spray, state, numdiff.FIRST_STEP) / max(1.0, vnorm)

    def f(z):
        return ricci(spray, TangentState(z[:n], z[n:]), scheme)

    d, err = numdiff.directional(f, z0, v, h=h)
    d, err = float(d), float(err)
    if not np.isfinite(d) or err > RIC_DERIVATIVE_TOLERANCE:
        raise DifferentiationFailure(f"Ric_;0 error estimate {err:.2e} exceeds {RIC_DERIVATIVE_TOLERANCE:g}")
    return (d, err) if with_error else d


def eval_G(spray: SprayField, state: TangentState) -> np.ndarray:
    return np.asarray(jet.value(spray.coefficients(state.x, state.y)), dtype=float)


def is_weakly_ricci_constant(spray: SprayField, states, threshold: float = WEAK_RICCI_THRESHOLD):
    """Sampled test of ``Ric_{;0} = 0`` at the given states with ``|y|`` normalised to 1.

    Returns ``(verdict, worst)`` where ``worst`` is the largest ``|Ric_{;0}|`` seen.
    """
    worst = 0.0
    for st in states:
        st = _as_state(st)
        unit = TangentState(st.x, st.y / np.linalg.norm(st.y))
        worst = max(worst, abs(ricci_horizontal_derivative(spray, unit)))
    return worst <= threshold, worst


def isotropy_decompose(report: CurvatureReport) -> IsotropyFit:
    """Least-squares fit of ``R^i_k ~ R delta^i_k - tau_k y^i``."""
    R = np.asarray(report.R, dtype=float)
    y = report.state.y
    n = y.size
    # unknowns: [R_scalar, tau_0..tau_{n-1}], one equation per (i, k)
    A = np.zeros((n * n, n + 1))
    b = np.zeros(n * n)
    for i in range(n):
        for k in range(n):
            row = i * n + k
            A[row, 0] = 1.0 if i == k else 0.0
            A[row, 1 + k] = -y[i]
            b[row] = R[i, k]
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    R_scalar = float(sol[0])
    tau = sol[1:]
    model = R_scalar * np.eye(n) - np.outer(y, tau)
    return IsotropyFit(R_scalar, tau, float(np.max(np.abs(R - model))))


def factor_horizontal_derivative(base: SprayField, factor: ProjectiveFactor, state) -> float:
    """``P_{;0} = y^j (d_j P - N^m_j dot-d_m P)`` with the base connection."""
    state = _checked(base, state)
    n = state.n
    N = berwald_data(base, state).N
    if factor.ad_capable:
        z = jet.seed(np.concatenate([state.x, state.y]), order=1)
        _, dP, _ = jet.unpack([factor.value(z[:n], z[n:])], 2 * n, order=1)
        dP = dP[0]
    else:
        z0, speed, d = _scaled_coordinates(state)

        def f(z):
            return np.array([float(jet.value(factor.value(z[:n], speed * z[n:])))])

        dP = numdiff.gradient(f, z0, h=_fd_step(base, state, numdiff.FIRST_STEP))[0][0] * d
    dxP, dyP = dP[:n], dP[n:]
    return float(state.y @ dxP - state.y @ (N.T @ dyP))


def verify_projective_ricci_relation(base: SprayField, factor: ProjectiveFactor, state) -> float:
    """``|Ric_bar - [Ric - (n-1)(P_{;0} - P^2)]|`` at one state."""
    state = _checked(base, state)
    if factor.domain is not None:
        factor.domain.check(state.x, state.y)
    n = state.n
    deformed = projective_deform(base, factor)
    ric_bar = ricci(deformed, state)
    ric = ricci(base, state)
    P = float(jet.value(factor.value(state.x, state.y)))
    P0 = factor_horizontal_derivative(base, factor, state)
    return abs(ric_bar - (ric - (n - 1) * (P0 - P * P)))
