"""Finite-difference and sampled-data differentiation.

Two independent tools live here:

* Richardson-extrapolated central differences of a vector function, used as
  the cross-check oracle for the jet derivatives and as the fallback scheme
  for numerically backed sprays.
* Local polynomial differentiation of sampled curves on arbitrary grids.
"""

from __future__ import annotations

import numpy as np

from .errors import TooFewSamples

# Steps balance O(h^4) truncation against roundoff in double precision.
FIRST_STEP = 1e-3
SECOND_STEP = 2e-3


def _richardson(d_h, d_h2):
    est = (4.0 * d_h2 - d_h) / 3.0
    return est, np.abs(est - d_h2)


def gradient(f, z, h=FIRST_STEP):
    """Jacobian of ``f: R^m -> R^k`` at ``z``; returns ``(J, err)`` of shape (k, m)."""
    z = np.asarray(z, dtype=float)
    m = z.size

    def central(step):
        cols = []
        for i in range(m):
            e = np.zeros(m)
            e[i] = step
            cols.append((np.asarray(f(z + e)) - np.asarray(f(z - e))) / (2.0 * step))
        return np.stack(cols, axis=-1)

    return _richardson(central(h), central(h / 2.0))


def hessian(f, z, h=SECOND_STEP):
    """Second derivatives of ``f`` at ``z``; returns ``(H, err)`` of shape (k, m, m)."""
    z = np.asarray(z, dtype=float)
    m = z.size
    f0 = np.asarray(f(z), dtype=float)

    def central(step):
        H = np.zeros(f0.shape + (m, m))
        E = np.eye(m) * step
        for i in range(m):
            fp = np.asarray(f(z + E[i]))
            fm = np.asarray(f(z - E[i]))
            H[..., i, i] = (fp - 2.0 * f0 + fm) / step**2
            for j in range(i + 1, m):
                d = (
                    np.asarray(f(z + E[i] + E[j]))
                    - np.asarray(f(z + E[i] - E[j]))
                    - np.asarray(f(z - E[i] + E[j]))
                    + np.asarray(f(z - E[i] - E[j]))
                ) / (4.0 * step**2)
                H[..., i, j] = d
                H[..., j, i] = d
        return H

    return _richardson(central(h), central(h / 2.0))


def directional(f, z, v, h=FIRST_STEP):
    """Richardson central difference of ``f`` along ``v``; returns ``(d, err)``."""
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)

    def central(step):
        return (np.asarray(f(z + step * v)) - np.asarray(f(z - step * v))) / (2.0 * step)

    d1 = central(h)
    d2 = central(h / 2.0)
    d4 = central(h / 4.0)
    r1, _ = _richardson(d1, d2)
    r2, _ = _richardson(d2, d4)
    # second Richardson level removes the h^4 term
    est = (16.0 * r2 - r1) / 15.0
    return est, np.abs(est - r2)


def sample_derivatives(t, values, orders=(1, 2), half_window=4, degree=6):
    """Derivatives of sampled data by sliding least-squares polynomials.

    ``values`` may be 1-D (one function) or 2-D with samples along axis 0.
    Windows are shifted inward at the ends so every fit uses
    ``2*half_window + 1`` points.  Returns a list aligned with ``orders``.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    squeeze = v.ndim == 1
    if squeeze:
        v = v[:, None]
    m = t.size
    width = 2 * half_window + 1
    if m < 5:
        raise TooFewSamples(f"need at least 5 samples, got {m}")
    width = min(width, m)
    deg = min(degree, width - 1)
    out = [np.zeros_like(v) for _ in orders]
    for i in range(m):
        lo = min(max(0, i - width // 2), m - width)
        idx = slice(lo, lo + width)
        tw = t[idx]
        scale = max(tw[-1] - tw[0], 1e-300)
        u = (tw - t[i]) / scale
        V = np.vander(u, deg + 1, increasing=True)
        coef, *_ = np.linalg.lstsq(V, v[idx], rcond=None)
        for k, order in enumerate(orders):
            fact = float(np.prod(np.arange(1, order + 1)))
            out[k][i] = coef[order] * fact / scale**order
    if squeeze:
        out = [o[:, 0] for o in out]
    return out
