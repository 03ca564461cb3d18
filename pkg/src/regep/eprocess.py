"""E-process families, the regularized product, and the tests and confidence regions they induce.

All e-values live in the log domain; +inf is a legitimate value.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import special

from .possibility import AnyGrid, Hypothesis, hypothesis_mask
from .regularization import Regularizer


# ---------------------------------------------------------------- data

class Counts(NamedTuple):
    survivals_cmt: int
    deaths_cmt: int
    survivals_ecmo: int
    deaths_ecmo: int


WARE_COUNTS = Counts(6, 4, 9, 0)

CMT, ECMO = 0, 1


def records_from_counts(counts: Counts) -> np.ndarray:
    """Canonical record array (arm, survived): CMT rows first, survivors first within an arm."""
    rows = ([(CMT, 1)] * counts.survivals_cmt + [(CMT, 0)] * counts.deaths_cmt
            + [(ECMO, 1)] * counts.survivals_ecmo + [(ECMO, 0)] * counts.deaths_ecmo)
    return np.asarray(rows, dtype=int).reshape(-1, 2)


def counts_from_records(records) -> Counts:
    r = np.asarray(records, dtype=int).reshape(-1, 2)
    arm, ok = r[:, 0], r[:, 1]
    return Counts(int(np.sum((arm == CMT) & (ok == 1))), int(np.sum((arm == CMT) & (ok == 0))),
                  int(np.sum((arm == ECMO) & (ok == 1))), int(np.sum((arm == ECMO) & (ok == 0))))


class Dataset:
    """Append-only observation log with immutable prefix snapshots.

    ``record_width`` is 0 for scalar observations and 2 for (arm, survived)
    records.
    """

    def __init__(self, values: Optional[Sequence] = None, record_width: int = 0):
        self.record_width = record_width
        self._rows: list = []
        if values is not None:
            self.extend(values)

    def append(self, obs) -> None:
        if self.record_width:
            row = tuple(int(x) for x in obs)
            if len(row) != self.record_width or row[0] not in (CMT, ECMO) or row[1] not in (0, 1):
                raise ValueError(f"bad record {obs!r}")
            self._rows.append(row)
        else:
            x = float(obs)
            if not math.isfinite(x):
                raise ValueError(f"non-finite observation {obs!r}")
            self._rows.append(x)

    def extend(self, values) -> None:
        for v in (values.tolist() if isinstance(values, np.ndarray) else values):
            self.append(v)

    def __len__(self) -> int:
        return len(self._rows)

    def prefix(self, n: Optional[int] = None) -> np.ndarray:
        n = len(self._rows) if n is None else n
        if not 0 <= n <= len(self._rows):
            raise IndexError(f"prefix length {n} outside 0..{len(self._rows)}")
        if self.record_width:
            out = np.asarray(self._rows[:n], dtype=int).reshape(-1, self.record_width)
        else:
            out = np.asarray(self._rows[:n], dtype=float)
        out.setflags(write=False)
        return out


def _as_array(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.prefix()
    return np.asarray(data)


# ---------------------------------------------------------------- e-processes

class EProcess:
    """Base class: ``log_value(data, theta)`` for a data prefix and an array of points."""

    family = "eprocess"
    param_dim = 1

    def __init__(self, **params):
        self.params = params

    def log_value(self, data, theta) -> np.ndarray:
        raise NotImplementedError

    def value(self, data, theta) -> np.ndarray:
        return np.exp(self.log_value(data, theta))

    def n_obs(self, data) -> int:
        return int(len(_as_array(data)))

    def log_path(self, data, theta) -> np.ndarray:
        """log e over prefixes 0..n, shape (n+1,) + shape of the evaluated points."""
        arr = _as_array(data)
        return np.stack([np.asarray(self.log_value(arr[:k], theta), dtype=float)
                         for k in range(len(arr) + 1)])

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"


class SavageDickeyGaussian(EProcess):
    """Bayes factor of a N(0, v) mixture against the point theta, unit-variance Gaussian data.

    log e = -1/2 log(nv+1) + (n/2)(theta - zbar)^2 - (1/2) n zbar^2/(nv+1).
    """

    family = "savage_dickey_gaussian"

    def __init__(self, v: float):
        if not v > 0:
            raise ValueError("mixture variance v must be positive")
        super().__init__(v=float(v))
        self.v = float(v)

    def log_from_stats(self, n, zbar, theta) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        zbar = np.asarray(zbar, dtype=float)
        theta = np.asarray(theta, dtype=float)
        nv1 = n * self.v + 1.0
        return -0.5 * np.log(nv1) + 0.5 * n * (theta - zbar) ** 2 - 0.5 * n * zbar ** 2 / nv1

    def log_value(self, data, theta) -> np.ndarray:
        z = np.asarray(_as_array(data), dtype=float)
        n = z.size
        zbar = z.mean() if n else 0.0
        return self.log_from_stats(n, zbar, theta)

    def log_path(self, data, theta) -> np.ndarray:
        z = np.asarray(_as_array(data), dtype=float)
        theta = np.asarray(theta, dtype=float)
        n = np.arange(z.size + 1, dtype=float)
        sums = np.concatenate([[0.0], np.cumsum(z)])
        zbar = sums / np.maximum(n, 1)
        shape = (-1,) + (1,) * theta.ndim
        return self.log_from_stats(n.reshape(shape), zbar.reshape(shape), theta)

    def log_path_batch(self, data: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Paths for many streams at once: data (reps, N), theta (reps,) -> (reps, N+1)."""
        data = np.asarray(data, dtype=float)
        reps, N = data.shape
        n = np.arange(N + 1, dtype=float)[None, :]
        sums = np.concatenate([np.zeros((reps, 1)), np.cumsum(data, axis=1)], axis=1)
        zbar = sums / np.maximum(n, 1)
        return self.log_from_stats(n, zbar, np.asarray(theta, dtype=float)[:, None])


def savage_dickey_gaussian(v: float = 10.0) -> SavageDickeyGaussian:
    return SavageDickeyGaussian(v)


def savage_dickey_quadrature_oracle(v: float, data, theta: float, quad_nodes: int = 20_001,
                                    log: bool = False) -> float:
    """Mixture likelihood over point likelihood by composite Simpson quadrature.

    Integrates N(zbar | t, 1/n) N(t | 0, v) over t in zbar +- 10 sqrt(v+1) and
    divides by N(zbar | theta, 1/n); computed with a log-sum shift.
    """
    if quad_nodes < 10_000:
        raise ValueError("quad_nodes must be at least 10^4")
    z = np.asarray(_as_array(data), dtype=float)
    n = z.size
    if n == 0:
        return 0.0 if log else 1.0
    zbar = z.mean()
    if quad_nodes % 2 == 0:
        quad_nodes += 1
    half = 10.0 * math.sqrt(v + 1.0)
    t = np.linspace(zbar - half, zbar + half, quad_nodes)
    h = t[1] - t[0]

    def log_normal(x, mean, var):
        return -0.5 * math.log(2 * math.pi * var) - 0.5 * (x - mean) ** 2 / var

    logf = log_normal(zbar, t, 1.0 / n) + log_normal(t, 0.0, v)
    top = logf.max()
    w = np.ones(quad_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    log_int = top + math.log(h / 3.0 * float(np.sum(w * np.exp(logf - top))))
    out = log_int - log_normal(zbar, theta, 1.0 / n)
    return out if log else math.exp(out)


class MedianQuasiLikelihood(EProcess):
    """Universal-inference style e-process for the median under absolute-error loss.

    log e = -eta * sum_i (|z_i - m_{i-1}| - |z_i - theta|), with m_k the median of
    the first k observations (midpoint of the middle pair for even k) and m_0
    a fixed starting guess.
    """

    family = "median_quasi"

    def __init__(self, eta: float, theta_hat_0: float = 0.0):
        if not eta > 0:
            raise ValueError("eta must be positive")
        super().__init__(eta=float(eta), theta_hat_0=float(theta_hat_0))
        self.eta = float(eta)
        self.theta_hat_0 = float(theta_hat_0)

    def predictions(self, z: np.ndarray) -> np.ndarray:
        preds = np.empty(z.size)
        if z.size:
            preds[0] = self.theta_hat_0
        for k in range(1, z.size):
            preds[k] = np.median(z[:k])
        return preds

    def increments(self, data, theta) -> np.ndarray:
        z = np.asarray(_as_array(data), dtype=float)
        theta = np.asarray(theta, dtype=float)
        pred = self.predictions(z)
        shape = (-1,) + (1,) * theta.ndim
        zz = z.reshape(shape)
        return -self.eta * (np.abs(zz - pred.reshape(shape)) - np.abs(zz - theta))

    def log_value(self, data, theta) -> np.ndarray:
        inc = self.increments(data, theta)
        return inc.sum(axis=0) if inc.shape[0] else np.zeros(np.shape(theta))

    def log_path(self, data, theta) -> np.ndarray:
        inc = self.increments(data, theta)
        zero = np.zeros((1,) + np.shape(theta))
        return np.concatenate([zero, np.cumsum(inc, axis=0)])


def median_quasi_eprocess(eta: float = 0.2, theta_hat_0: float = 0.0) -> MedianQuasiLikelihood:
    return MedianQuasiLikelihood(eta, theta_hat_0)


def eta_upper_bound(epsilon: float) -> float:
    """Largest learning rate 2 * epsilon that keeps the median quasi-likelihood an e-process."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return 2.0 * epsilon


class WareBinomial(EProcess):
    """Two-arm binomial likelihood ratio with shrunken plug-in estimates in the numerator.

    Points are (theta_cmt, theta_ecmo); data are Counts or (arm, survived)
    records.  The plug-in for an arm is (s + beta)/(s + d + 2 beta).
    """

    family = "ware_binomial"
    param_dim = 2

    def __init__(self, beta: float = 0.18):
        if not beta > 0:
            raise ValueError("beta must be positive")
        super().__init__(beta=float(beta))
        self.beta = float(beta)

    @staticmethod
    def counts(data) -> Counts:
        if isinstance(data, Counts):
            return data
        if isinstance(data, tuple) and len(data) == 4:
            return Counts(*data)
        return counts_from_records(_as_array(data))

    def n_obs(self, data) -> int:
        return int(sum(self.counts(data)))

    def estimates(self, data) -> tuple:
        c = self.counts(data)
        b = self.beta
        return ((c.survivals_cmt + b) / (c.survivals_cmt + c.deaths_cmt + 2 * b),
                (c.survivals_ecmo + b) / (c.survivals_ecmo + c.deaths_ecmo + 2 * b))

    def log_value(self, data, theta) -> np.ndarray:
        c = self.counts(data)
        if any(x < 0 for x in c):
            raise ValueError("counts must be non-negative")
        theta = np.asarray(theta, dtype=float)
        tc, te = theta[..., 0], theta[..., 1]
        hc, he = self.estimates(c)
        xl = special.xlogy
        num = (xl(c.survivals_cmt, hc) + xl(c.deaths_cmt, 1 - hc)
               + xl(c.survivals_ecmo, he) + xl(c.deaths_ecmo, 1 - he))
        with np.errstate(divide="ignore"):
            den = (xl(c.survivals_cmt, tc) + xl(c.deaths_cmt, 1 - tc)
                   + xl(c.survivals_ecmo, te) + xl(c.deaths_ecmo, 1 - te))
        return num - den

    def log_path(self, data, theta) -> np.ndarray:
        if isinstance(data, (Counts, tuple)):
            data = records_from_counts(self.counts(data))
        return super().log_path(data, theta)


def ware_binomial(beta: float = 0.18) -> WareBinomial:
    return WareBinomial(beta)


# ---------------------------------------------------------------- regularized product

class RegularizedEProcess(EProcess):
    """rho(theta) * e_theta(data), added in the log domain."""

    def __init__(self, base: EProcess, rho: Regularizer):
        super().__init__(base=repr(base), rho=rho.provenance)
        self.base = base
        self.rho = rho
        self.family = f"regularized({base.family})"
        self.param_dim = base.param_dim

    def _combine(self, log_rho, log_e):
        with np.errstate(invalid="ignore"):
            total = log_rho + log_e
        # rho = 0 beats any evidence, including an infinite one
        return np.where(np.isneginf(log_rho), -np.inf, total)

    def log_value(self, data, theta) -> np.ndarray:
        return self._combine(self.rho.log(theta), self.base.log_value(data, theta))

    def log_path(self, data, theta) -> np.ndarray:
        return self._combine(self.rho.log(theta), self.base.log_path(data, theta))

    def n_obs(self, data) -> int:
        return self.base.n_obs(data)


def regularize(base: EProcess, rho: Regularizer) -> RegularizedEProcess:
    model = rho.model
    if model is not None and model.contour is not None:
        if model.contour.grid.ndim != base.param_dim:
            raise ValueError("regularizer and e-process live on different parameter spaces")
    return RegularizedEProcess(base, rho)


# ---------------------------------------------------------------- tests and regions

@dataclass(frozen=True)
class Region:
    mask: np.ndarray
    points: np.ndarray
    log_values: np.ndarray
    hull: Optional[tuple]

    @property
    def empty(self) -> bool:
        return not self.mask.any()


def confidence_region(ereg: EProcess, data, alpha: float, grid: AnyGrid) -> Region:
    """Grid nodes with e <= 1/alpha, plus the interval hull for a scalar parameter."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    pts = grid.points
    loge = np.asarray(ereg.log_value(data, pts), dtype=float)
    mask = loge <= math.log(1.0 / alpha)
    hull = None
    if not mask.any():
        warnings.warn("confidence region is empty on the grid")
    elif grid.ndim == 1:
        hull = (float(pts[mask].min()), float(pts[mask].max()))
    return Region(mask, pts[mask], loge, hull)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keeps pytest from collecting it

    reject: bool
    min_log_e: float
    argmin: np.ndarray

    @property
    def decision(self) -> str:
        return "reject" if self.reject else "retain"


def composite_test(ereg: EProcess, data, hypothesis: Hypothesis, alpha: float,
                   grid: AnyGrid) -> TestResult:
    """Reject when the smallest e-value over the hypothesis exceeds 1/alpha."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    mask = hypothesis_mask(grid, hypothesis)
    if not mask.any():
        raise ValueError("hypothesis is empty on the grid")
    pts = grid.points[mask]
    loge = np.asarray(ereg.log_value(data, pts), dtype=float)
    i = int(np.argmin(loge))
    return TestResult(bool(loge[i] > math.log(1.0 / alpha)), float(loge[i]), pts[i])


# ---------------------------------------------------------------- stopping rules

@dataclass(frozen=True)
class StoppingRule:
    kind: str
    n: Optional[int] = None
    c: Optional[float] = None
    horizon: Optional[int] = None

    def __post_init__(self):
        if self.kind == "fixed":
            if self.n is None or self.n < 0:
                raise ValueError("fixed rule needs n >= 0")
        elif self.kind == "threshold":
            if not (self.c is not None and self.c > 0):
                raise ValueError("threshold rule needs c > 0")
            if self.horizon is None or self.horizon < 1:
                raise ValueError("threshold rule needs horizon >= 1")
        elif self.kind == "horizon":
            if self.horizon is None or self.horizon < 1:
                raise ValueError("horizon rule needs horizon >= 1")
        else:
            raise ValueError(f"unknown stopping rule {self.kind!r}")

    @property
    def max_n(self) -> int:
        return self.n if self.kind == "fixed" else self.horizon

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed({self.n})"
        if self.kind == "threshold":
            return f"threshold({self.c:g},{self.horizon})"
        return f"horizon({self.horizon})"


def fixed(n: int) -> StoppingRule:
    return StoppingRule("fixed", n=n)


def threshold(c: float, horizon: int) -> StoppingRule:
    return StoppingRule("threshold", c=c, horizon=horizon)


def horizon(n_max: int) -> StoppingRule:
    return StoppingRule("horizon", horizon=n_max)


def stop_index(rule: StoppingRule, epath: Sequence[float]) -> int:
    """Sample size at which the rule stops; epath[i-1] is the e-value after i observations.

    A threshold rule that never fires stops at its horizon, cut to the path length.
    """
    path = np.asarray(epath, dtype=float)
    if rule.kind == "fixed":
        if rule.n > path.size:
            raise ValueError(f"fixed({rule.n}) beyond a path of length {path.size}")
        return rule.n
    if path.size == 0:
        raise ValueError("empty e-value path")
    if rule.kind == "threshold":
        hits = np.flatnonzero(path[: rule.horizon] >= rule.c)
        if hits.size:
            return int(hits[0]) + 1
    return int(min(rule.horizon, path.size))


def stop_indices(rule: StoppingRule, log_paths: np.ndarray) -> np.ndarray:
    """Vectorized stop sizes for log paths of shape (reps, N+1) that include n = 0."""
    reps, width = log_paths.shape
    if rule.kind == "fixed":
        if rule.n > width - 1:
            raise ValueError("path too short for the fixed rule")
        return np.full(reps, rule.n)
    cap = min(rule.horizon, width - 1)
    if rule.kind == "horizon":
        return np.full(reps, cap)
    hit = log_paths[:, 1: cap + 1] >= math.log(rule.c)
    first = np.argmax(hit, axis=1) + 1
    return np.where(hit.any(axis=1), first, cap)


# ---------------------------------------------------------------- I/O

def read_observations_csv(path, records: bool = False) -> Dataset:
    """One observation per row, or one four-field count record for the two-arm data.

    A non-numeric first row is treated as a header.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(x.strip() for x in r)]
    if rows:
        try:
            [float(x) for x in rows[0]]
        except ValueError:
            rows = rows[1:]
    if records:
        if len(rows) != 1 or len(rows[0]) != 4:
            raise ValueError("expected a single record survivals_cmt,deaths_cmt,survivals_ecmo,deaths_ecmo")
        c = Counts(*(int(x) for x in rows[0]))
        if any(x < 0 for x in c):
            raise ValueError("counts must be non-negative")
        return Dataset(records_from_counts(c), record_width=2)
    return Dataset([float(r[0]) for r in rows])


def write_path_csv(path, theta, log_path: np.ndarray) -> None:
    """Columns n, theta, log_e for a single parameter value."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "theta", "log_e"])
        for n, v in enumerate(np.asarray(log_path, dtype=float).ravel()):
            w.writerow([n, repr(float(theta)), repr(float(v))])


__all__ = [
    "CMT", "ECMO", "Counts", "Dataset", "EProcess", "MedianQuasiLikelihood", "Region",
    "RegularizedEProcess", "SavageDickeyGaussian", "StoppingRule", "TestResult", "WARE_COUNTS",
    "WareBinomial", "composite_test", "confidence_region", "counts_from_records", "eta_upper_bound",
    "fixed", "horizon", "median_quasi_eprocess", "read_observations_csv", "records_from_counts",
    "regularize", "savage_dickey_gaussian", "savage_dickey_quadrature_oracle", "stop_index",
    "stop_indices", "threshold", "ware_binomial", "write_path_csv",
]
