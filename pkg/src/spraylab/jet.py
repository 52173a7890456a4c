"""Truncated second-order forward-mode automatic differentiation.

A :class:`Jet` carries a value together with its gradient and (optionally)
its Hessian with respect to ``m`` seeded input variables.  Arithmetic
propagates the second-order Taylor coefficients exactly, so one evaluation
of a closed-form spray on seeded ``(x, y)`` yields every first and second
partial derivative the curvature formulas need.

Evaluators in :mod:`spraylab.catalog` are written against the helper
functions in this module (:func:`sqrt`, :func:`log`, :func:`dot`, ...) which
dispatch on plain floats and on jets alike.
"""

from __future__ import annotations

import math

import numpy as np


class Jet:
    __slots__ = ("v", "g", "h")
    # keep numpy from swallowing Jets into ufunc loops
    __array_ufunc__ = None

    def __init__(self, v, g, h=None):
        self.v = float(v)
        self.g = g
        self.h = h

    # -- construction helpers -------------------------------------------
    def _const(self, c):
        return Jet(c, np.zeros_like(self.g), None if self.h is None else np.zeros_like(self.h))

    def _apply(self, f0, f1, f2):
        """Chain rule for a scalar function with derivatives f1, f2 at self.v."""
        g = f1 * self.g
        h = None
        if self.h is not None:
            h = f1 * self.h + f2 * np.outer(self.g, self.g)
        return Jet(f0, g, h)

    # -- arithmetic -------------------------------------------------------
    # Jet (op) ndarray broadcasts elementwise into an object array.
    def __neg__(self):
        return Jet(-self.v, -self.g, None if self.h is None else -self.h)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return _broadcast(self, other, "__add__")
        if isinstance(other, Jet):
            h = None if self.h is None else self.h + other.h
            return Jet(self.v + other.v, self.g + other.g, h)
        return Jet(self.v + other, self.g, self.h)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return _broadcast(self, other, "__sub__")
        if isinstance(other, Jet):
            h = None if self.h is None else self.h - other.h
            return Jet(self.v - other.v, self.g - other.g, h)
        return Jet(self.v - other, self.g, self.h)

    def __rsub__(self, other):
        if isinstance(other, np.ndarray):
            return _broadcast(self, other, "__rsub__")
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return _broadcast(self, other, "__mul__")
        if isinstance(other, Jet):
            a, b = self, other
            g = a.v * b.g + b.v * a.g
            h = None
            if a.h is not None:
                cross = np.outer(a.g, b.g)
                h = a.v * b.h + b.v * a.h + cross + cross.T
            return Jet(a.v * b.v, g, h)
        other = float(other)
        return Jet(self.v * other, self.g * other, None if self.h is None else self.h * other)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.v
        return self._apply(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, np.ndarray):
            return _broadcast(self, other, "__truediv__")
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / float(other))

    def __rtruediv__(self, other):
        if isinstance(other, np.ndarray):
            return _broadcast(self, other, "__rtruediv__")
        if isinstance(other, Jet):
            return other * self.reciprocal()
        return self.reciprocal() * float(other)

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        p = float(p)
        if p == 2.0:
            return self * self
        v = self.v
        return self._apply(v**p, p * v ** (p - 1.0), p * (p - 1.0) * v ** (p - 2.0))

    def __float__(self):
        return self.v

    def __repr__(self):
        return f"Jet({self.v!r}, g={self.g!r})"


def _broadcast(jet, arr, op):
    flat = [getattr(jet, op)(e) for e in arr.ravel()]
    out = np.empty(arr.shape, dtype=object)
    out.ravel()[:] = flat
    return out


# -- seeding and extraction ----------------------------------------------


def seed(z, order=2):
    """Return an object array of jets, one independent variable per entry."""
    z = np.asarray(z, dtype=float)
    m = z.size
    eye = np.eye(m)
    out = np.empty(m, dtype=object)
    for i in range(m):
        h = np.zeros((m, m)) if order >= 2 else None
        out[i] = Jet(z[i], eye[i].copy(), h)
    return out


def value(a):
    """Strip derivative information from a scalar or array."""
    if isinstance(a, Jet):
        return a.v
    if isinstance(a, np.ndarray) and a.dtype == object:
        return np.array([value(e) for e in a.ravel()], dtype=float).reshape(a.shape)
    return a


def unpack(out, m, order=2):
    """Split an evaluator output into value, Jacobian and Hessian arrays.

    Entries that are plain numbers (no dependence on the seeded variables)
    contribute zero derivatives.
    """
    out = np.asarray(out, dtype=object).ravel()
    k = out.size
    val = np.zeros(k)
    jac = np.zeros((k, m))
    hess = np.zeros((k, m, m)) if order >= 2 else None
    for i, e in enumerate(out):
        if isinstance(e, Jet):
            val[i] = e.v
            jac[i] = e.g
            if hess is not None and e.h is not None:
                hess[i] = e.h
        else:
            val[i] = float(e)
    return val, jac, hess


def is_jet_array(a):
    return isinstance(a, np.ndarray) and a.dtype == object


# -- elementary functions (float or jet) ----------------------------------


def _unary(f0, f1, f2, fn):
    def wrapped(a):
        if isinstance(a, Jet):
            v = a.v
            return a._apply(f0(v), f1(v), f2(v))
        if isinstance(a, np.ndarray) and a.dtype == object:
            return np.array([wrapped(e) for e in a], dtype=object)
        return fn(a)

    return wrapped


sqrt = _unary(math.sqrt, lambda v: 0.5 / math.sqrt(v), lambda v: -0.25 / v**1.5, np.sqrt)
exp = _unary(math.exp, math.exp, math.exp, np.exp)
log = _unary(math.log, lambda v: 1.0 / v, lambda v: -1.0 / v**2, np.log)
sin = _unary(math.sin, math.cos, lambda v: -math.sin(v), np.sin)
cos = _unary(math.cos, lambda v: -math.sin(v), lambda v: -math.cos(v), np.cos)
tan = _unary(
    math.tan,
    lambda v: 1.0 / math.cos(v) ** 2,
    lambda v: 2.0 * math.tan(v) / math.cos(v) ** 2,
    np.tan,
)
arctan = _unary(math.atan, lambda v: 1.0 / (1.0 + v * v), lambda v: -2.0 * v / (1.0 + v * v) ** 2, np.arctan)


def dot(a, b):
    if getattr(a, "dtype", None) == np.float64 and getattr(b, "dtype", None) == np.float64:
        return float(a @ b)
    if is_jet_array(a) or is_jet_array(b) or any(isinstance(e, Jet) for e in (*a, *b)):
        total = 0.0
        for ai, bi in zip(a, b):
            total = total + ai * bi
        return total
    return float(np.dot(a, b))


def norm2(a):
    return dot(a, a)


def vec(items):
    """Pack scalars into a float array, or an object array if any is a jet."""
    if any(isinstance(e, Jet) for e in items):
        return np.array(list(items), dtype=object)
    return np.array([float(e) for e in items])
