"""Monte Carlo audits of the regularized Ville inequality, the expectation bound,
the decision bound and one-sided contraction, plus growth curves.

Replication r draws everything from ``default_rng([seed, r])`` so results do
not depend on execution order or on how replications are split across workers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .eprocess import EProcess, RegularizedEProcess, SavageDickeyGaussian, stop_indices
from .im import IMContour, LossFunction, _risk_matrix
from .possibility import (Contour, Grid, PriorSampler, credal_membership, lower_probability,
                          upper_probability)

Model = Callable[[np.random.Generator, float, int], np.ndarray]


def gaussian_model(rng: np.random.Generator, theta: float, n: int) -> np.ndarray:
    """n draws from N(theta, 1)."""
    return theta + rng.standard_normal(n)


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


@dataclass(frozen=True)
class SimConfig:
    ereg: RegularizedEProcess
    prior: PriorSampler
    rules: tuple
    alphas: tuple = (0.01, 0.05, 0.1)
    reps: int = 10_000
    seed: int = 0
    model: Model = gaussian_model
    label: str = "config"
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be positive")
        if not all(0 < a <= 1 for a in self.alphas):
            raise ValueError("alphas must lie in (0, 1]")
        if not self.rules:
            raise ValueError("at least one stopping rule is required")

    def describe(self) -> dict:
        return {
            "label": self.label,
            "eprocess": repr(self.ereg.base),
            "regularizer": self.ereg.rho.provenance,
            "prior": self.prior.label,
            "rules": [r.label for r in self.rules],
            "alphas": list(self.alphas),
            "reps": self.reps,
            "seed": self.seed,
            "model": getattr(self.model, "__name__", "model"),
        }

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SimReport:
    check: str
    rows: list = field(default_factory=list)
    expectations: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows) and all(e["pass"] for e in self.expectations)

    def to_dict(self) -> dict:
        return {"check": self.check, "passed": self.passed, "rows": self.rows,
                "expectations": self.expectations, "provenance": self.provenance,
                "notes": self.notes}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def rate_row(label: str, alpha: float, hits: np.ndarray) -> dict:
    reps = hits.size
    rate = float(hits.mean())
    se = math.sqrt(rate * (1 - rate) / reps)
    return {"rule": label, "alpha": alpha, "rate": rate, "stderr": se,
            "pass": bool(rate <= alpha + 3 * se)}


def mean_row(label: str, values: np.ndarray) -> dict:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    ok = math.isfinite(mean) and mean <= 1 + 3 * se
    return {"rule": label, "mean": mean, "stderr": se, "pass": bool(ok)}


def _gate(config: SimConfig) -> None:
    model = config.ereg.rho.model
    if model is None or model.kind != "possibilistic":
        return
    verdict = credal_membership(model.contour, config.prior, reps=10_000, seed=config.seed)
    if verdict.verdict == "non-member":
        raise ValueError(f"prior {config.prior.label} is not in the credal set of "
                         f"{model.contour.label} (margin {verdict.margin:.3g} at alpha={verdict.worst_alpha:g})")


def _simulate_block(config: SimConfig, indices: np.ndarray, n_max: int):
    thetas = np.empty(indices.size)
    data = np.empty((indices.size, n_max))
    for j, r in enumerate(indices):
        rng = replication_rng(config.seed, r)
        thetas[j] = float(np.asarray(config.prior.draw(rng, 1)).ravel()[0])
        data[j] = config.model(rng, thetas[j], n_max)
    return thetas, data


def simulate(config: SimConfig, n_max: int):
    """Draw (Theta, data stream) for every replication; deterministic in (seed, index)."""
    idx = np.arange(config.reps)
    blocks = np.array_split(idx, max(1, config.workers))
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            parts = list(pool.map(lambda b: _simulate_block(config, b, n_max), blocks))
    else:
        parts = [_simulate_block(config, b, n_max) for b in blocks]
    thetas = np.concatenate([p[0] for p in parts])
    data = np.concatenate([p[1] for p in parts]) if n_max else np.empty((config.reps, 0))
    return thetas, data


def regularized_log_paths(ereg: RegularizedEProcess, data: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """log e_reg(z^n, Theta) for n = 0..N per replication, shape (reps, N+1)."""
    base = ereg.base
    if isinstance(base, SavageDickeyGaussian):
        base_paths = base.log_path_batch(data, thetas)
    else:
        base_paths = np.stack([np.asarray(base.log_path(row, np.asarray(t)), dtype=float).ravel()
                               for row, t in zip(data, thetas)])
    log_rho = np.asarray(ereg.rho.log(thetas), dtype=float)[:, None]
    with np.errstate(invalid="ignore"):
        out = log_rho + base_paths
    return np.where(np.isneginf(log_rho), -np.inf, out)


def _stopped_values(config: SimConfig):
    n_max = max(r.max_n for r in config.rules)
    thetas, data = simulate(config, n_max)
    paths = regularized_log_paths(config.ereg, data, thetas)
    out = {}
    for rule in config.rules:
        stops = stop_indices(rule, paths)
        out[rule.label] = (paths[np.arange(config.reps), stops], stops)
    return thetas, data, out


def _provenance(config: SimConfig) -> dict:
    return {"seed": config.seed, "config_hash": config.config_hash, "config": config.describe()}


def run_ville_check(config: SimConfig) -> SimReport:
    """Rate of e_reg(Z^N, Theta) >= 1/alpha for each stopping rule and alpha."""
    _gate(config)
    _, _, stopped = _stopped_values(config)
    report = SimReport("ville", provenance=_provenance(config))
    for rule in config.rules:
        logv, _ = stopped[rule.label]
        for a in config.alphas:
            report.rows.append(rate_row(rule.label, a, logv >= math.log(1 / a)))
    return report


def run_expectation_check(config: SimConfig) -> SimReport:
    """Mean of e_reg(Z^N, Theta) against 1 + 3 stderr for each stopping rule."""
    _gate(config)
    _, _, stopped = _stopped_values(config)
    report = SimReport("expectation", provenance=_provenance(config))
    for rule in config.rules:
        logv, _ = stopped[rule.label]
        report.expectations.append(mean_row(rule.label, np.exp(logv)))
    return report


def run_decision_bound_check(config: SimConfig, loss: LossFunction, grid: Grid,
                             s_nodes: int = 2001) -> SimReport:
    """Monte Carlo of R = max_a loss_a(Theta) / upper expected loss of a.

    Rows: P{R >= 1/alpha} per rule and alpha; expectations: mean R per rule.
    Pointwise certificates (R <= e_reg(Theta), and the corrected
    R <= max(1, e_reg(Theta))) are counted in the notes and in
    ``certificate`` rows whose pass flag requires every replication to hold.
    """
    _gate(config)
    thetas, data, stopped = _stopped_values(config)
    report = SimReport("decision", provenance=_provenance(config))
    pts = grid.points
    losses = np.stack([loss(a, pts) for a in loss.actions])
    for rule in config.rules:
        logv, stops = stopped[rule.label]
        ratios = np.empty(config.reps)
        strict = np.empty(config.reps, dtype=bool)
        floored = np.empty(config.reps, dtype=bool)
        for j in range(config.reps):
            prefix = data[j, : stops[j]]
            contour = IMContour(config.ereg, prefix, grid)
            risks = _risk_matrix(contour, losses, s_nodes)
            num = np.array([float(loss(a, np.array([thetas[j]]))[0]) for a in loss.actions])
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(num == 0, 0.0, num / risks)
            ratios[j] = r.max()
            e = math.exp(min(float(logv[j]), 700.0))
            strict[j] = ratios[j] <= e * (1 + 1e-9)
            floored[j] = ratios[j] <= max(1.0, e) * (1 + 1e-9)
        for a in config.alphas:
            report.rows.append(rate_row(rule.label, a, ratios >= 1 / a))
        report.expectations.append(mean_row(rule.label, ratios))
        report.rows.append({"rule": rule.label, "alpha": None, "certificate": "ratio<=e_reg",
                            "holds": int(strict.sum()), "total": config.reps,
                            "pass": bool(strict.all())})
        report.notes.append(f"{rule.label}: corrected certificate ratio<=max(1,e_reg) held in "
                            f"{int(floored.sum())}/{config.reps} replications")
    return report


# ---------------------------------------------------------------- growth curves

@dataclass(frozen=True)
class GrowthTable:
    ns: np.ndarray
    labels: tuple
    means: np.ndarray
    stderrs: np.ndarray
    samples: np.ndarray  # (reps, n_max+1, columns) log e_reg values

    def column(self, label: str) -> np.ndarray:
        return self.means[:, self.labels.index(label)]

    def ordering_slack(self, n: int, order: Sequence[str], z: float = 2.0) -> list:
        """For consecutive pairs (hi, lo) in ``order``: mean(hi - lo) + z * stderr of the paired difference."""
        out = []
        for hi, lo in zip(order[:-1], order[1:]):
            d = self.samples[:, n, self.labels.index(hi)] - self.samples[:, n, self.labels.index(lo)]
            se = float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else 0.0
            out.append((hi, lo, float(d.mean()), se, float(d.mean() + z * se)))
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", *self.labels])
            for i, n in enumerate(self.ns):
                w.writerow([int(n), *[repr(float(x)) for x in self.means[i]]])


def run_growth_curve(base: EProcess, regularizers: dict, theta_star: float, truth: float = 0.0,
                     n_max: int = 50, reps: int = 500, seed: int = 0,
                     model: Model = gaussian_model) -> GrowthTable:
    """Average log e_reg(z^n, theta*) for n = 0..n_max, one column per regularizer.

    All columns share the same simulated streams, so differences between
    columns are exact paired differences.
    """
    if n_max < 10:
        raise ValueError("n_max must be at least 10")
    data = np.stack([model(replication_rng(seed, r), truth, n_max) for r in range(reps)])
    theta = np.full(reps, float(theta_star))
    if isinstance(base, SavageDickeyGaussian):
        base_paths = base.log_path_batch(data, theta)
    else:
        base_paths = np.stack([np.asarray(base.log_path(row, np.asarray(theta_star)), dtype=float).ravel()
                               for row in data])
    labels = tuple(regularizers)
    cols = []
    for lab in labels:
        log_rho = float(np.asarray(regularizers[lab].log(np.array([theta_star])))[0])
        cols.append(base_paths + log_rho)
    samples = np.stack(cols, axis=2)
    means = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.zeros_like(means)
    return GrowthTable(np.arange(n_max + 1), labels, means, se, samples)


# ---------------------------------------------------------------- contraction

def run_contraction_check(prior: Contour, ereg: EProcess, datasets: Sequence,
                          hypotheses: Sequence, tol: float = 1e-9) -> SimReport:
    """Upper probabilities after data never all fall below the prior's, and lowers never all rise.

    ``hypotheses`` are grid masks or predicates; ``datasets`` any data the
    e-process accepts.  Each hypothesis gets one row.
    """
    grid = prior.grid
    contours = [IMContour(ereg, d, grid) for d in datasets]
    report = SimReport("contraction", provenance={"datasets": len(datasets),
                                                  "hypotheses": len(hypotheses)})
    for k, h in enumerate(hypotheses):
        prior_up = upper_probability(prior, h)
        prior_low = lower_probability(prior, h)
        post_up = max(upper_probability(c, h) for c in contours)
        post_low = min(lower_probability(c, h) for c in contours)
        report.rows.append({
            "rule": f"H{k}", "alpha": None, "prior_upper": prior_up, "max_post_upper": post_up,
            "prior_lower": prior_low, "min_post_lower": post_low,
            "pass": bool(post_up >= prior_up - tol and post_low <= prior_low + tol),
        })
    return report


__all__ = [
    "GrowthTable", "SimConfig", "SimReport", "gaussian_model", "mean_row", "rate_row",
    "regularized_log_paths", "replication_rng", "run_contraction_check",
    "run_decision_bound_check", "run_expectation_check", "run_growth_curve", "run_ville_check",
    "simulate",
]
