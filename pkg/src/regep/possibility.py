"""Possibility contours on grids and the operations built on them.

Every supremum over the parameter space is a maximum over grid nodes.  Points
are arrays of shape (m,) for a scalar parameter and (m, 2) for a pair.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import stats

NORMALIZATION_TOL = 1e-9
DEFAULT_S_NODES = 2001


@dataclass(frozen=True)
class Grid:
    """Evenly spaced nodes on [lower, upper]."""

    lower: float
    upper: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("grid bounds must be finite")
        if not self.upper > self.lower:
            raise ValueError("grid upper bound must exceed lower bound")
        if int(self.n) < 2:
            raise ValueError("a grid needs at least two nodes")

    ndim = 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, int(self.n))

    @property
    def spacing(self) -> float:
        return (self.upper - self.lower) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return self.nodes

    @property
    def shape(self) -> tuple:
        return (int(self.n),)

    def contains(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return (theta >= self.lower) & (theta <= self.upper)


@dataclass(frozen=True)
class Grid2D:
    """Product of two 1D grids; points are flattened in row-major order."""

    first: Grid
    second: Grid

    ndim = 2

    @property
    def shape(self) -> tuple:
        return (int(self.first.n), int(self.second.n))

    @property
    def points(self) -> np.ndarray:
        a, b = np.meshgrid(self.first.nodes, self.second.nodes, indexing="ij")
        return np.column_stack([a.ravel(), b.ravel()])

    def contains(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return self.first.contains(theta[..., 0]) & self.second.contains(theta[..., 1])


AnyGrid = Union[Grid, Grid2D]


class Contour:
    """A possibility contour evaluated on a grid.

    ``func`` maps an array of points to values in [0, 1].  Values on the grid
    are computed once at construction.  Normalization (grid max within 1e-9
    of one) is enforced unless ``require_normalized`` is false, in which case
    the outcome is recorded in ``normalized``.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], grid: AnyGrid,
                 label: str = "contour", require_normalized: bool = True,
                 meta: Optional[dict] = None):
        self.func = func
        self.grid = grid
        self.label = label
        self.meta = dict(meta or {})
        values = np.asarray(func(grid.points), dtype=float)
        if values.shape != (grid.points.shape[0],):
            raise ValueError("contour evaluator must return one value per point")
        if np.any(np.isnan(values)) or np.any(values < 0) or np.any(values > 1 + 1e-12):
            raise ValueError("contour values must lie in [0, 1]")
        values = np.clip(values, 0.0, 1.0)
        values.setflags(write=False)
        self._values = values
        self.normalized = bool(values.max() >= 1.0 - NORMALIZATION_TOL)
        if require_normalized and not self.normalized:
            raise ValueError(f"contour {label!r} is not normalized: grid max {values.max():.6g}")

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __call__(self, theta) -> np.ndarray:
        return np.clip(np.asarray(self.func(np.asarray(theta, dtype=float)), dtype=float), 0.0, 1.0)

    def __repr__(self) -> str:
        return f"Contour({self.label!r}, grid={self.grid})"


@dataclass(frozen=True)
class PriorSampler:
    """One probability Q on the parameter space, as a seeded sampler.

    ``draw(rng, size)`` returns an array of ``size`` points.
    """

    draw: Callable[[np.random.Generator, int], np.ndarray]
    label: str = "prior"
    params: dict = field(default_factory=dict)


def point_mass(theta0) -> PriorSampler:
    t0 = np.asarray(theta0, dtype=float)

    def draw(rng, size):
        return np.broadcast_to(t0, (size,) + t0.shape).copy()

    return PriorSampler(draw, label=f"point_mass({theta0})", params={"at": theta0})


def normal_sampler(mean: float, variance: float) -> PriorSampler:
    sd = math.sqrt(variance)

    def draw(rng, size):
        return mean + sd * rng.standard_normal(size)

    return PriorSampler(draw, label=f"normal({mean:g},{variance:g})",
                        params={"mean": mean, "variance": variance})


# ---------------------------------------------------------------- hypotheses

Hypothesis = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def hypothesis_mask(grid: AnyGrid, hypothesis: Hypothesis) -> np.ndarray:
    """Boolean mask over grid points from a mask or a point predicate."""
    if callable(hypothesis):
        mask = np.asarray(hypothesis(grid.points), dtype=bool)
    else:
        mask = np.asarray(hypothesis, dtype=bool).ravel()
    if mask.shape != (grid.points.shape[0],):
        raise ValueError("hypothesis mask does not match the grid")
    return mask


def upper_probability(contour: Contour, hypothesis: Hypothesis) -> float:
    mask = hypothesis_mask(contour.grid, hypothesis)
    if not mask.any():
        raise ValueError("hypothesis is empty on the grid (vacuous query)")
    return float(contour.values[mask].max())


def lower_probability(contour: Contour, hypothesis: Hypothesis) -> float:
    """1 - upper probability of the complement; 1 when the complement is empty."""
    mask = hypothesis_mask(contour.grid, hypothesis)
    if not mask.any():
        raise ValueError("hypothesis is empty on the grid (vacuous query)")
    comp = ~mask
    if not comp.any():
        return 1.0
    return 1.0 - float(contour.values[comp].max())


# ---------------------------------------------------------------- Choquet

def _grid_function(contour: Contour, g) -> np.ndarray:
    vals = g(contour.grid.points) if callable(g) else g
    vals = np.asarray(vals, dtype=float).ravel()
    if vals.shape != contour.values.shape:
        raise ValueError("function values do not match the grid")
    if np.any(np.isnan(vals)):
        raise ValueError("function has NaN values on the grid")
    return vals


def level_set_sup(q: np.ndarray, g: np.ndarray, s: np.ndarray,
                  empty_value: float = 0.0) -> np.ndarray:
    """sup{g : q > s} for each level s, and ``empty_value`` on empty level sets."""
    order = np.argsort(-q, kind="stable")
    q_desc = q[order]
    running = np.maximum.accumulate(g[order])
    # number of nodes with q > s, found on the ascending copy
    count = q.size - np.searchsorted(q_desc[::-1], s, side="right")
    out = np.full(np.shape(s), empty_value, dtype=float)
    hit = count > 0
    out[hit] = running[count[hit] - 1]
    return out


def choquet_upper_expectation(contour: Contour, g, s_nodes: int = DEFAULT_S_NODES,
                              return_error: bool = False):
    """Integral over s in (0, 1) of sup{g : q > s}, by the midpoint rule.

    Sign-changing g is shifted by -min g and the shift undone afterwards.
    An infinite g on a node with positive possibility gives +inf.  With
    ``return_error`` the result is paired with the node-spacing bound
    (range of g) / s_nodes on the quadrature error of the step integrand.
    """
    vals = _grid_function(contour, g)
    q = contour.values
    live = q > 0
    if not live.any():
        raise ValueError("contour vanishes on the grid")
    if np.any(np.isposinf(vals[live])):
        return (math.inf, math.inf) if return_error else math.inf
    if np.any(np.isneginf(vals[live])):
        raise ValueError("function is unbounded below on the support")
    vals = np.where(live, vals, 0.0)
    shift = -float(vals[live].min()) if vals[live].min() < 0 else 0.0
    shifted = np.where(live, vals + shift, 0.0)
    s = (np.arange(s_nodes) + 0.5) / s_nodes
    integral = float(level_set_sup(q, shifted, s).mean()) - shift
    if return_error:
        span = float(shifted[live].max() - shifted[live].min())
        return integral, span / s_nodes
    return integral


def choquet_lower_expectation(contour: Contour, g, s_nodes: int = DEFAULT_S_NODES) -> float:
    vals = _grid_function(contour, g)
    return -choquet_upper_expectation(contour, -vals, s_nodes)


# ---------------------------------------------------------------- credal sets

@dataclass(frozen=True)
class MembershipResult:
    verdict: str
    worst_alpha: float
    margin: float
    alphas: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray


def credal_membership(contour: Contour, candidate: PriorSampler, alpha_nodes: int = 100,
                      reps: int = 10_000, seed: int = 0) -> MembershipResult:
    """Monte Carlo check of Q{q(Theta) <= alpha} <= alpha on an alpha grid.

    Member: every estimate lies within alpha + 3 stderr.  Non-member: some
    estimate exceeds alpha by more than three standard errors under both the
    estimate's own stderr and the boundary stderr sqrt(alpha(1-alpha)/reps).
    Anything else is inconclusive.  The margin is min(alpha + 3 stderr - est).
    """
    if reps < 1000:
        raise ValueError("credal_membership needs at least 1000 replications")
    rng = np.random.default_rng(seed)
    draws = np.asarray(candidate.draw(rng, reps), dtype=float)
    if not np.all(contour.grid.contains(draws)):
        raise ValueError(f"sampler {candidate.label} draws outside the contour's domain")
    qv = contour(draws)
    alphas = np.arange(1, alpha_nodes + 1) / alpha_nodes
    est = np.searchsorted(np.sort(qv), alphas, side="right") / reps
    se = np.sqrt(est * (1 - est) / reps)
    se_null = np.sqrt(alphas * (1 - alphas) / reps)
    slack = alphas + 3 * se - est
    worst = int(np.argmin(slack))
    if np.all(slack >= 0):
        verdict = "member"
    elif np.any((slack < 0) & (est > alphas + 3 * se_null)):
        verdict = "non-member"
    else:
        verdict = "inconclusive"
    return MembershipResult(verdict, float(alphas[worst]), float(slack[worst]), alphas, est, se)


# ---------------------------------------------------------------- transforms

def prob_to_possibility(density: Callable[[np.ndarray], np.ndarray], sampler: PriorSampler,
                        grid: Grid, reps: int = 1_000_000, seed: int = 0,
                        level_cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                        label: str = "transform") -> Contour:
    """psi(y) = P{f(Y) <= f(y)} for Y ~ sampler, with f the density.

    ``level_cdf`` maps a density level t to P{f(Y) <= t} exactly and replaces
    the Monte Carlo estimate when given.  The result is rescaled so its grid
    max is one.
    """
    fy = np.asarray(density(grid.points), dtype=float)
    if not np.any(fy > 0):
        raise ValueError("density is zero everywhere on the grid")
    if level_cdf is not None:
        psi = np.asarray(level_cdf(fy), dtype=float)
    else:
        rng = np.random.default_rng(seed)
        levels = np.sort(np.asarray(density(sampler.draw(rng, reps)), dtype=float))
        # relative tolerance so equal densities (flat regions) tie exactly
        psi = np.searchsorted(levels, fy * (1 + 1e-12), side="right") / reps
    top = psi.max()
    if top <= 0:
        raise ValueError("transform vanishes on the grid")
    psi = np.clip(psi / top, 0.0, 1.0)
    nodes = grid.nodes
    return Contour(lambda t: np.interp(t, nodes, psi, left=0.0, right=0.0), grid, label=label,
                   meta={"rescale": float(top)})


def extension_marginal(contour2d: Contour, delta_grid: Grid,
                       feature: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                       label: str = "marginal") -> Contour:
    """Contour of a scalar feature of a 2D parameter by the extension principle.

    The default feature is second minus first coordinate.  Each delta node takes
    the max of the 2D contour over nodes whose feature lies within half a
    delta spacing; nodes exactly halfway contribute to both neighbours.
    """
    if contour2d.grid.ndim != 2:
        raise ValueError("extension_marginal needs a contour over a 2D grid")
    if min(contour2d.grid.shape) < 101:
        raise ValueError("2D grid resolution must be at least 101 per axis")
    pts = contour2d.grid.points
    f = feature(pts) if feature is not None else pts[:, 1] - pts[:, 0]
    f = np.asarray(f, dtype=float)
    h = delta_grid.spacing
    pos = (f - delta_grid.lower) / h
    lo_idx = np.ceil(pos - 0.5 - 1e-9).astype(int)
    hi_idx = np.floor(pos + 0.5 + 1e-9).astype(int)
    n = int(delta_grid.n)
    phi = np.full(n, -1.0)
    for idx in (lo_idx, hi_idx):
        ok = (idx >= 0) & (idx < n)
        np.maximum.at(phi, idx[ok], contour2d.values[ok])
    empty = np.flatnonzero(phi < 0)
    meta = {}
    if empty.size:
        meta["empty_bands"] = delta_grid.nodes[empty].tolist()
        warnings.warn(f"{empty.size} delta nodes have empty bands and were set to 0")
    phi = np.where(phi < 0, 0.0, phi)
    top = phi.max()
    if top <= 0:
        raise ValueError("marginal contour vanishes")
    meta["rescale"] = float(top)
    phi = phi / top
    nodes = delta_grid.nodes
    return Contour(lambda t: np.interp(t, nodes, phi, left=0.0, right=0.0), delta_grid,
                   label=label, meta=meta)


# ---------------------------------------------------------------- priors

def _gaussian_surprise(K):
    return lambda t: stats.chi2.sf(np.asarray(t, dtype=float) ** 2 / K, df=1)


def _mean_bound(K):
    def q(t):
        a = np.abs(np.asarray(t, dtype=float))
        with np.errstate(divide="ignore"):
            return np.minimum(1.0, K / a)
    return q


def _event_bound(K):
    def q(t):
        a = np.abs(np.asarray(t, dtype=float))
        return np.where(a <= 2 * K, 1.0, K / 5.0)
    return q


def _median_prior(t):
    t = np.asarray(t, dtype=float)
    return np.where(t >= 0, 1.0, 0.05) / (1.0 + np.abs(t))


def _ware_joint(t):
    t = np.asarray(t, dtype=float)
    cmt, ecmo = t[..., 0], t[..., 1]
    return (0.5 + 0.5 * (cmt <= 0.3)) * (0.1 + 0.9 * (ecmo >= 0.8))


def _vacuous(t):
    t = np.asarray(t, dtype=float)
    return np.ones(t.shape[:1] if t.ndim else ())


PRIOR_KINDS = ("gaussian_surprise", "mean_bound", "event_bound", "median_prior",
               "ware_joint", "vacuous")


def make_prior(kind: str, grid: AnyGrid, K: Optional[float] = None) -> Contour:
    """Named prior contours.

    gaussian_surprise: chi-square(1) survival of theta^2/K; mean_bound:
    min(1, K/|theta|); event_bound: 1 on |theta| <= 2K and K/5 outside;
    median_prior: (1 on theta >= 0, 0.05 below) / (1 + |theta|); ware_joint:
    product of (0.5 + 0.5 1{cmt <= 0.3}) and (0.1 + 0.9 1{ecmo >= 0.8});
    vacuous: 1.
    """
    if kind not in PRIOR_KINDS:
        raise ValueError(f"unknown prior kind {kind!r}; expected one of {PRIOR_KINDS}")
    needs_k = kind in ("gaussian_surprise", "mean_bound", "event_bound")
    if needs_k:
        if K is None or not K > 0:
            raise ValueError(f"{kind} needs K > 0")
    if kind == "ware_joint" and grid.ndim != 2:
        raise ValueError("ware_joint lives on a 2D grid")
    if kind != "ware_joint" and kind != "vacuous" and grid.ndim != 1:
        raise ValueError(f"{kind} lives on a 1D grid")
    func = {
        "gaussian_surprise": lambda: _gaussian_surprise(K),
        "mean_bound": lambda: _mean_bound(K),
        "event_bound": lambda: _event_bound(K),
        "median_prior": lambda: _median_prior,
        "ware_joint": lambda: _ware_joint,
        "vacuous": lambda: _vacuous,
    }[kind]()
    label = f"{kind}(K={K:g})" if needs_k else kind
    return Contour(func, grid, label=label, meta={"kind": kind, "K": K})


# ---------------------------------------------------------------- export

def write_contour_csv(contour: Contour, path) -> None:
    """Two columns (theta,value) in 1D, three (theta1,theta2,value) in 2D."""
    pts = contour.grid.points
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if contour.grid.ndim == 1:
            w.writerow(["theta", "value"])
            for t, v in zip(pts, contour.values):
                w.writerow([repr(float(t)), repr(float(v))])
        else:
            w.writerow(["theta1", "theta2", "value"])
            for (a, b), v in zip(pts, contour.values):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(v))])
