"""Closed-form norms, sprays and projective factors.

The Funk metric is taken on the unit ball, where the defining relation
``|x + y/F| = 1`` has the explicit positive root

    F(x, y) = (<x,y> + sqrt(<x,y>^2 + |y|^2 (1 - |x|^2))) / (1 - |x|^2).

All evaluators accept float arrays or jet arrays (see :mod:`spraylab.jet`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jet
from .core import (
    ConicalDomain,
    ProjectiveFactor,
    SprayField,
    TangentState,
    unit_ball,
    upper_half_plane,
    whole_space,
)
from .errors import BadParams, DomainViolation, UnknownLabel, ZeroVelocity


@dataclass(frozen=True)
class FinslerNorm:
    dimension: int
    value: Callable
    label: str
    domain: ConicalDomain

    def __call__(self, x, y):
        return self.value(x, y)


def funk(x, y):
    """Funk metric of the unit ball (no domain checks; jet friendly)."""
    xy = jet.dot(x, y)
    yy = jet.norm2(y)
    d = 1.0 - jet.norm2(x)
    return (xy + jet.sqrt(xy * xy + yy * d)) / d


def klein(x, y):
    return 0.5 * (funk(x, y) + funk(x, -y))


def funk_metric_ball(state, margin: float = 1e-12) -> float:
    if not isinstance(state, TangentState):
        x, y = (np.asarray(v, dtype=float) for v in state)
        if not np.linalg.norm(y) > 0:
            raise ZeroVelocity("y must be nonzero")
        state = TangentState(x, y)
    if not float(np.dot(state.x, state.x)) < 1.0 - margin:
        raise DomainViolation("Funk metric of the unit ball needs |x| < 1")
    return float(funk(state.x, state.y))


def funk_norm(n: int) -> FinslerNorm:
    return FinslerNorm(n, funk, "funk", unit_ball(n))


def klein_norm(n: int) -> FinslerNorm:
    return FinslerNorm(n, klein, "klein", unit_ball(n))


def verify_funk_translation_identity(u, v, t: float):
    """Residuals of ``F(u+tv, v) = F/(1-tF)`` and ``F(u+tv, -v) = F-/(1+tF-)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    p = u + t * v
    if not (np.dot(u, u) < 1.0 and np.dot(p, p) < 1.0):
        raise DomainViolation("u and u + t v must lie in the unit ball")
    fp, fm = funk(u, v), funk(u, -v)
    if not (1.0 - t * fp > 0.0 and 1.0 + t * fm > 0.0):
        raise DomainViolation("t lies outside the chord interval")
    r_plus = abs(funk(p, v) - fp / (1.0 - t * fp))
    r_minus = abs(funk(p, -v) - fm / (1.0 + t * fm))
    return float(r_plus), float(r_minus)


# -- projective factors ---------------------------------------------------


def funk_factor(n: int, c: float = 1.0) -> ProjectiveFactor:
    return ProjectiveFactor(n, lambda x, y: c * funk(x, y), f"{c}*F", unit_ball(n))


def funk_reversible_factor(n: int, c: float = 0.5) -> ProjectiveFactor:
    return ProjectiveFactor(n, lambda x, y: c * (funk(x, y) - funk(x, -y)), f"{c}*(F(y)-F(-y))", unit_ball(n))


def sphere_factor(n: int) -> ProjectiveFactor:
    def value(x, y):
        return -jet.dot(x, y) / (1.0 + jet.norm2(x))

    return ProjectiveFactor(n, value, "-<x,y>/(1+|x|^2)", whole_space(n))


def semicircle_factor() -> ProjectiveFactor:
    return ProjectiveFactor(2, lambda x, y: -y[1] / x[1], "-y2/x2", upper_half_plane())


FACTORS = {
    "zero": lambda n=2, **kw: ProjectiveFactor(n, lambda x, y: 0.0, "zero"),
    "funk": lambda n=2, c=1.0: funk_factor(n, c),
    "funk_reversible": lambda n=2, c=0.5: funk_reversible_factor(n, c),
    "sphere_proj": lambda n=2: sphere_factor(n),
    "semicircle": lambda: semicircle_factor(),
}


def named_factor(label: str, **params) -> ProjectiveFactor:
    if label not in FACTORS:
        raise UnknownLabel(f"unknown factor {label!r}; known: {sorted(FACTORS)}")
    try:
        return FACTORS[label](**{k: _param(k, v) for k, v in params.items()})
    except TypeError as exc:
        raise BadParams(str(exc)) from None


# -- sprays ---------------------------------------------------------------


def _flat(n):
    def G(x, y):
        return np.zeros(n)

    return G


def _funk_scaled(c):
    def G(x, y):
        return (c * funk(x, y)) * y

    return G


def _funk_reversible(c):
    def G(x, y):
        return (c * (funk(x, y) - funk(x, -y))) * y

    return G


def _sphere_proj(x, y):
    return (-jet.dot(x, y) / (1.0 + jet.norm2(x))) * y


def _hyperbolic_ball(x, y):
    return (jet.dot(x, y) * y - jet.norm2(y) * x) / (1.0 - jet.norm2(x))


def _semicircle(x, y):
    return jet.vec([-y[0] * y[1] / (2.0 * x[1]), y[0] * y[0] / (2.0 * x[1])])


def _semicircle_complete(x, y):
    return jet.vec(
        [-3.0 * y[0] * y[1] / (2.0 * x[1]), (y[0] * y[0] - 2.0 * y[1] * y[1]) / (2.0 * x[1])]
    )


def _klein_finsler(x, y):
    return (0.5 * (funk(x, y) - funk(x, -y))) * y


def _funk_log(x, y):
    fp = funk(x, y)
    fm = funk(x, -y)
    return (0.5 * fp + 0.5 * fp / jet.log(fm / (fp + fm))) * y


def _param(name, v):
    try:
        return float(v) if name != "n" else int(v)
    except (TypeError, ValueError):
        raise BadParams(f"parameter {name} must be numeric, got {v!r}") from None


# label -> (builder(n, params) -> (G, domain), allowed params, fixed dimension or None)
def _b_flat(n, p):
    return _flat(n), whole_space(n)


def _b_flat_ball(n, p):
    return _flat(n), unit_ball(n)


def _b_funk_scaled(n, p):
    return _funk_scaled(p.get("c", 1.0)), unit_ball(n)


def _b_funk_reversible(n, p):
    return _funk_reversible(p.get("c", 0.5)), unit_ball(n)


def _b_sphere(n, p):
    return _sphere_proj, whole_space(n)


def _b_hyp(n, p):
    return _hyperbolic_ball, unit_ball(n)


def _b_semi(n, p):
    return _semicircle, upper_half_plane()


def _b_semi_complete(n, p):
    return _semicircle_complete, upper_half_plane(exclude_vertical=True)


def _b_klein(n, p):
    return _klein_finsler, unit_ball(n)


def _b_funk_log(n, p):
    return _funk_log, unit_ball(n)


SPRAYS = {
    "flat": (_b_flat, (), None),
    "flat_ball": (_b_flat_ball, (), None),
    "funk_scaled": (_b_funk_scaled, ("c",), None),
    "funk_reversible": (_b_funk_reversible, ("c",), None),
    "sphere_proj": (_b_sphere, (), None),
    "hyperbolic_ball": (_b_hyp, (), None),
    "semicircle": (_b_semi, (), 2),
    "semicircle_complete": (_b_semi_complete, (), 2),
    "klein_finsler": (_b_klein, (), None),
    "funk_log": (_b_funk_log, (), None),
}


def named_spray(label: str, n: int = 2, **params) -> SprayField:
    """Build one of the catalog sprays.

    ``n`` is the dimension (ignored for the planar semicircle sprays);
    ``c`` is the scale constant of the Funk-based sprays.
    """
    if label not in SPRAYS:
        raise UnknownLabel(f"unknown spray {label!r}; known: {sorted(SPRAYS)}")
    builder, allowed, fixed_n = SPRAYS[label]
    unknown = set(params) - set(allowed)
    if unknown:
        raise BadParams(f"spray {label} does not take parameters {sorted(unknown)}")
    p = {k: _param(k, v) for k, v in params.items()}
    n = fixed_n or int(n)
    if n < 2:
        raise BadParams("dimension must be at least 2")
    G, domain = builder(n, p)
    return SprayField(n, domain, G, label, p, True)
