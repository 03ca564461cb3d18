"""Lower incomplete gamma function, vectorized over the integration limit.

The power series converges quickly below ``z = a + 1``; above it a modified
Lentz continued fraction for the upper tail is used and subtracted from the
complete gamma function.
"""

from __future__ import annotations

import math

import numpy as np

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 1000


def _series(a: float, z: np.ndarray) -> np.ndarray:
    # gamma(a, z) = z^a e^-z sum_k z^k / (a (a+1) ... (a+k))
    term = np.full_like(z, 1.0 / a)
    total = term.copy()
    denom = a
    active = np.ones(z.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        denom += 1.0
        term = np.where(active, term * z / denom, 0.0)
        total += term
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    log_pref = a * np.log(z) - z
    return total * np.exp(log_pref)


def _upper_cf(a: float, z: np.ndarray) -> np.ndarray:
    # Gamma(a, z) = e^-z z^a / (z + 1 - a - 1(1-a)/(z + 3 - a - ...)), Lentz
    b = z + 1.0 - a
    c = np.full_like(z, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(z.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = np.where(active, d * c, 1.0)
        h = h * delta
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.exp(a * np.log(z) - z) * h


def lower_incomplete_gamma(z, a: float) -> np.ndarray:
    """Unregularized lower incomplete gamma, the integral of t^(a-1) e^-t over [0, z]."""
    if a <= 0:
        raise ValueError("shape parameter a must be positive")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise ValueError("z must be non-negative")
    flat = np.atleast_1d(z).ravel()
    out = np.zeros_like(flat)
    complete = math.gamma(a)
    small = (flat > 0) & (flat < a + 1.0)
    large = flat >= a + 1.0
    if small.any():
        out[small] = _series(a, flat[small])
    if large.any():
        finite = large & np.isfinite(flat)
        out[large & ~finite] = complete
        if finite.any():
            out[finite] = complete - _upper_cf(a, flat[finite])
    return out.reshape(z.shape) if z.ndim else out[0]
