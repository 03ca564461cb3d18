"""Calibrators: non-decreasing maps on [0, 1] whose reciprocals integrate to one.

A calibrator inflates a possibility contour so that the reciprocal of the
inflated contour has unit upper expectation, which is what turns a prior
contour into a regularizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .special import lower_incomplete_gamma

# below this a calibrator value is treated as zero and its reciprocal as +inf
GAMMA_FLOOR = 1e-300
ADMISSIBILITY_TOL = 1e-4
_SCAN_NODES = 1001


@dataclass(frozen=True)
class Calibrator:
    """A calibrator u -> gamma(u) on [0, 1].

    ``log_scale_density`` optionally gives the density of -log U when U has
    density 1/gamma.  It lets the admissibility quadrature reach the region
    u < 1e-300, where heavy-tailed calibrators still carry visible mass.
    """

    func: Callable[[np.ndarray], np.ndarray]
    name: str
    params: dict = field(default_factory=dict)
    log_scale_density: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)):
            raise ValueError("calibrator argument must lie in [0, 1]")
        return self.func(u)

    def reciprocal(self, u) -> np.ndarray:
        """1/gamma(u), with +inf wherever gamma falls below the floor."""
        g = np.asarray(self(u), dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(g < GAMMA_FLOOR, np.inf, 1.0 / np.maximum(g, GAMMA_FLOOR))
        return out


def _log_beta_mixture(u: np.ndarray, kappa: float) -> np.ndarray:
    a = 1.0 + kappa
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    at_one = u >= 1.0
    at_zero = u <= 0.0
    mid = ~(at_one | at_zero)
    out[at_one] = math.log(a / kappa)
    out[at_zero] = -np.inf
    if mid.any():
        t = -np.log(u[mid])
        # t can round to zero for u within an ulp of one
        tiny = t <= 0
        t = np.where(tiny, 1e-300, t)
        lg = np.log(u[mid]) + a * np.log(t) - math.log(kappa) - np.log(lower_incomplete_gamma(t, a))
        out[mid] = np.where(tiny, math.log(a / kappa), lg)
    return out


def beta_mixture_calibrator(kappa: float = 1.0) -> Calibrator:
    """gamma(u) = u (-log u)^(1+kappa) / (kappa * lower_gamma(-log u, 1+kappa)).

    gamma(1) = (1+kappa)/kappa and gamma(0) = 0.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    kappa = float(kappa)
    a = 1.0 + kappa

    def func(u):
        return np.exp(_log_beta_mixture(u, kappa))

    def log_scale_density(t):
        # e^-t / gamma(e^-t) = kappa * lower_gamma(t, a) / t^a
        t = np.asarray(t, dtype=float)
        safe = np.maximum(t, 1e-300)
        val = kappa * lower_incomplete_gamma(safe, a) * np.exp(-a * np.log(safe))
        return np.where(t <= 0, kappa / a, val)

    return Calibrator(func=func, name=f"beta_mixture(kappa={kappa:g})",
                      params={"kappa": kappa}, log_scale_density=log_scale_density)


def admissibility_residual(cal: Calibrator, quad_nodes: int = 10_000) -> float:
    """|integral of 1/gamma over [0, 1] - 1| by a midpoint rule.

    The rule runs in x with u = exp(-e^x), x in [-40, 690]; the double
    exponential spreads the near-zero singularity of 1/gamma over many nodes.
    """
    if quad_nodes < 1001:
        raise ValueError("quad_nodes must be at least 1001")
    lo, hi = -40.0, 690.0
    h = (hi - lo) / quad_nodes
    x = lo + h * (np.arange(quad_nodes) + 0.5)
    t = np.exp(x)
    if cal.log_scale_density is not None:
        integrand = np.asarray(cal.log_scale_density(t), dtype=float) * t
    else:
        u = np.exp(-t)
        inv = cal.reciprocal(u)
        with np.errstate(invalid="ignore"):
            integrand = np.where(u > 0, inv * u * t, 0.0)
    total = float(np.sum(integrand) * h)
    # the slice u in (1 - e^lo, 1] is below 1e-17 in width; add it at gamma(1)
    total += math.exp(lo) * float(cal.reciprocal(1.0))
    if not math.isfinite(total):
        return math.inf
    return abs(total - 1.0)


def is_non_decreasing(cal: Calibrator, nodes: int = _SCAN_NODES) -> bool:
    u = np.linspace(0.0, 1.0, nodes)
    g = np.asarray(cal(u), dtype=float)
    slack = 1e-12 * np.where(np.isfinite(g[:-1]), np.maximum(1.0, np.abs(g[:-1])), 0.0)
    return bool(np.all(g[1:] >= g[:-1] - slack))


def validate(cal: Calibrator, tol: float = ADMISSIBILITY_TOL) -> Calibrator:
    """Gate used for user-supplied calibrators: monotone scan plus unit integral."""
    if not is_non_decreasing(cal):
        raise ValueError(f"{cal.name} is not non-decreasing on [0, 1]")
    res = admissibility_residual(cal)
    if not res < tol:
        raise ValueError(f"{cal.name} fails admissibility: residual {res:.3g}")
    return cal


def reciprocal_density_calibrator(density: Callable[[np.ndarray], np.ndarray],
                                  name: str = "reciprocal_density") -> Calibrator:
    """gamma = 1/density for a non-increasing probability density on [0, 1]."""
    u = np.linspace(0.0, 1.0, _SCAN_NODES)
    with np.errstate(divide="ignore"):
        d = np.asarray(density(u), dtype=float) * np.ones_like(u)
    if np.any(d[1:-1] <= 0) or np.any(np.isnan(d)) or np.any(d < 0):
        raise ValueError("density must be positive on (0, 1)")

    def func(v):
        with np.errstate(divide="ignore"):
            dv = np.asarray(density(v), dtype=float) * np.ones_like(v)
            return np.where(np.isinf(dv), 0.0, np.where(dv == 0, np.inf, 1.0 / np.where(dv == 0, 1.0, dv)))

    return validate(Calibrator(func=func, name=name))
