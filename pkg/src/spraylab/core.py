"""Tangent states, conical domains, spray fields and projective factors.

Everything lives in a single coordinate chart.  A spray is represented by
its coefficient map ``(x, y) -> G(x, y)`` which must be positively
homogeneous of degree two in ``y``; the geodesic equation is
``x'' + 2 G(x, x') = 0``.

Coefficient maps receive raw arrays.  Closed-form maps also accept object
arrays of :class:`~spraylab.jet.Jet` and are flagged ``ad_capable``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jet
from .errors import DimensionMismatch, DomainViolation, ZeroVelocity

DEFAULT_MARGIN = 1e-12


@dataclass(frozen=True)
class TangentState:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.size != y.size:
            raise DimensionMismatch(f"x has length {x.size}, y has length {y.size}")
        if x.size < 2:
            raise DimensionMismatch("dimension must be at least 2")
        if not np.linalg.norm(y) > 0.0:
            raise ZeroVelocity("velocity must be nonzero")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def scaled(self, lam: float) -> "TangentState":
        return TangentState(self.x, lam * self.y)


@dataclass(frozen=True)
class ConicalDomain:
    """Open region of the slit tangent bundle closed under ``y -> lam*y``.

    ``contains`` is the hard membership predicate and must respect the
    interior ``margin``.  ``level`` is an optional smooth function of the
    position only, positive inside and vanishing on the spatial boundary;
    the probe uses it to analyse how a geodesic approaches the boundary.
    It must be written with :mod:`spraylab.jet` helpers.
    """

    dimension: int
    contains: Callable[[np.ndarray, np.ndarray], bool]
    level: Optional[Callable] = None
    label: str = "domain"
    margin: float = DEFAULT_MARGIN

    def __call__(self, state: TangentState) -> bool:
        return self.contains(state.x, state.y)

    def check(self, x, y):
        if len(x) != self.dimension or len(y) != self.dimension:
            raise DimensionMismatch(
                f"{self.label} has dimension {self.dimension}, got state of length {len(x)}"
            )
        if not self.contains(x, y):
            raise DomainViolation(f"state x={[float(v) for v in x]}, y={[float(v) for v in y]} is outside {self.label}")

    def intersect(self, other: "ConicalDomain") -> "ConicalDomain":
        if other is None or other is self:
            return self
        if other.dimension != self.dimension:
            raise DimensionMismatch("cannot intersect domains of different dimension")
        a, b = self, other

        def contains(x, y):
            return a.contains(x, y) and b.contains(x, y)

        level = None
        if a.level is not None and b.level is not None:
            la, lb = a.level, b.level

            def level(x):
                va, vb = la(x), lb(x)
                return va if jet.value(va) <= jet.value(vb) else vb

        elif a.level is not None or b.level is not None:
            level = a.level or b.level
        return ConicalDomain(self.dimension, contains, level, f"{a.label}&{b.label}", min(a.margin, b.margin))


def whole_space(n: int) -> ConicalDomain:
    return ConicalDomain(n, lambda x, y: bool(np.all(np.isfinite(x))), None, f"R^{n}")


def unit_ball(n: int, margin: float = DEFAULT_MARGIN) -> ConicalDomain:
    def contains(x, y):
        return float(np.dot(x, x)) < 1.0 - margin

    def level(x):
        return 1.0 - jet.norm2(x)

    return ConicalDomain(n, contains, level, f"B^{n}", margin)


def upper_half_plane(margin: float = DEFAULT_MARGIN, exclude_vertical: bool = False) -> ConicalDomain:
    """``x^2 > 0``; optionally drop the vertical directions ``(0, +-1)``."""

    def contains(x, y):
        if not x[1] > margin:
            return False
        if exclude_vertical and abs(y[0]) <= margin * float(np.hypot(y[0], y[1])):
            return False
        return True

    def level(x):
        return x[1]

    label = "R^2_+ minus vertical" if exclude_vertical else "R^2_+"
    return ConicalDomain(2, contains, level, label, margin)


@dataclass(frozen=True)
class SprayField:
    dimension: int
    domain: ConicalDomain
    coefficients: Callable
    label: str
    params: dict = field(default_factory=dict)
    ad_capable: bool = True

    def __call__(self, x, y):
        return self.coefficients(x, y)


@dataclass(frozen=True)
class ProjectiveFactor:
    dimension: int
    value: Callable
    label: str
    domain: Optional[ConicalDomain] = None
    ad_capable: bool = True

    def __call__(self, x, y):
        return self.value(x, y)


def _as_state(state):
    if isinstance(state, TangentState):
        return state
    x, y = state
    return TangentState(x, y)


def eval_spray(spray: SprayField, state) -> np.ndarray:
    """Coefficients ``G^i(x, y)`` at a member state."""
    state = _as_state(state)
    if state.n != spray.dimension:
        raise DimensionMismatch(f"spray {spray.label} has dimension {spray.dimension}, state has {state.n}")
    spray.domain.check(state.x, state.y)
    return np.asarray(jet.value(spray.coefficients(state.x, state.y)), dtype=float)


def eval_factor(factor: ProjectiveFactor, state) -> float:
    state = _as_state(state)
    if state.n != factor.dimension:
        raise DimensionMismatch(f"factor {factor.label} has dimension {factor.dimension}, state has {state.n}")
    if factor.domain is not None:
        factor.domain.check(state.x, state.y)
    return float(jet.value(factor.value(state.x, state.y)))


def check_homogeneity(spray: SprayField, states, lambdas=(0.5, 2.0, 10.0)) -> float:
    """Max relative deviation ``|G(x, ly) - l^2 G(x, y)| / (1 + |l^2 G(x, y)|)``."""
    worst = 0.0
    for st in states:
        st = _as_state(st)
        g = eval_spray(spray, st)
        for lam in lambdas:
            if not lam > 0:
                raise ValueError("lambdas must be positive")
            gl = eval_spray(spray, st.scaled(lam))
            ref = lam**2 * g
            dev = np.linalg.norm(gl - ref) / (1.0 + np.linalg.norm(ref))
            worst = max(worst, float(dev))
    return worst


def check_factor_homogeneity(factor: ProjectiveFactor, states, lambdas=(0.5, 2.0, 10.0)) -> float:
    worst = 0.0
    for st in states:
        st = _as_state(st)
        p = eval_factor(factor, st)
        for lam in lambdas:
            pl = eval_factor(factor, st.scaled(lam))
            worst = max(worst, abs(pl - lam * p) / (1.0 + abs(lam * p)))
    return worst


def check_cone_property(domain: ConicalDomain, states, lambdas=(0.5, 2.0, 10.0)) -> bool:
    for st in states:
        st = _as_state(st)
        inside = domain.contains(st.x, st.y)
        for lam in lambdas:
            if domain.contains(st.x, lam * st.y) != inside:
                return False
    return True


def projective_deform(spray: SprayField, factor: ProjectiveFactor, label: Optional[str] = None) -> SprayField:
    """The spray with coefficients ``G^i + P y^i``."""
    if spray.dimension != factor.dimension:
        raise DimensionMismatch(f"spray dimension {spray.dimension} != factor dimension {factor.dimension}")
    G, P = spray.coefficients, factor.value

    def coefficients(x, y):
        return G(x, y) + P(x, y) * y

    domain = spray.domain.intersect(factor.domain) if factor.domain is not None else spray.domain
    return SprayField(
        spray.dimension,
        domain,
        coefficients,
        label or f"{spray.label}+({factor.label})y",
        dict(spray.params),
        spray.ad_capable and factor.ad_capable,
    )


def scale_factor(factor: ProjectiveFactor, c: float, label: Optional[str] = None) -> ProjectiveFactor:
    P = factor.value

    def value(x, y):
        return c * P(x, y)

    return ProjectiveFactor(factor.dimension, value, label or f"{c}*{factor.label}", factor.domain, factor.ad_capable)


def zero_factor(n: int) -> ProjectiveFactor:
    return ProjectiveFactor(n, lambda x, y: 0.0, "zero")
