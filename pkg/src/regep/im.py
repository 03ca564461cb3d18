"""The e-possibilistic inferential model: contour pi = min(1, 1/e), its upper and
lower probabilities, marginalization and Choquet decision theory."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .eprocess import EProcess
from .possibility import (DEFAULT_S_NODES, AnyGrid, Contour, Grid, Hypothesis,
                          choquet_upper_expectation, extension_marginal, hypothesis_mask,
                          lower_probability, upper_probability)


class IMContour(Contour):
    """pi(theta) = min(1, 1/e_reg(data, theta)); sub-normalized contours are flagged, not rejected."""

    def __init__(self, ereg: EProcess, data, grid: AnyGrid, label: str = "im"):
        self.ereg = ereg
        self.data = data

        def func(theta):
            return np.exp(-np.maximum(ereg.log_value(data, theta), 0.0))

        super().__init__(func, grid, label=label, require_normalized=False)

    def log_e(self, theta) -> np.ndarray:
        return np.asarray(self.ereg.log_value(self.data, theta), dtype=float)


def im_contour(ereg: EProcess, data, grid: AnyGrid) -> IMContour:
    return IMContour(ereg, data, grid)


def im_upper_lower(contour: Contour, hypothesis: Hypothesis) -> tuple:
    """(lower, upper) probability of the hypothesis; lower is 1 when the complement is empty."""
    return lower_probability(contour, hypothesis), upper_probability(contour, hypothesis)


@dataclass(frozen=True)
class LossFunction:
    """loss(a, points) >= 0 evaluated for each action on an ascending action grid."""

    func: Callable[[float, np.ndarray], np.ndarray]
    actions: np.ndarray
    label: str = "loss"

    def __call__(self, a: float, theta) -> np.ndarray:
        out = np.asarray(self.func(a, np.asarray(theta, dtype=float)), dtype=float)
        if np.any(out < 0):
            raise ValueError("losses must be non-negative")
        return out


def squared_error(actions) -> LossFunction:
    return LossFunction(lambda a, t: (t - a) ** 2, np.asarray(actions, dtype=float), "squared_error")


def upper_expected_loss(contour: Contour, loss: LossFunction, a: float,
                        s_nodes: int = DEFAULT_S_NODES) -> float:
    return choquet_upper_expectation(contour, loss(a, contour.grid.points), s_nodes)


def lower_expected_loss(contour: Contour, loss: LossFunction, a: float,
                        s_nodes: int = DEFAULT_S_NODES) -> float:
    vals = loss(a, contour.grid.points)
    return 0.0 - choquet_upper_expectation(contour, -vals, s_nodes)


def _risk_matrix(contour: Contour, losses: np.ndarray, s_nodes: int) -> np.ndarray:
    """Choquet integrals of many non-negative functions against one contour (rows of ``losses``)."""
    q = contour.values
    live = q > 0
    if np.any(np.isposinf(losses[:, live])):
        bad = np.isposinf(losses[:, live]).any(axis=1)
    else:
        bad = np.zeros(losses.shape[0], dtype=bool)
    order = np.argsort(-q, kind="stable")
    q_desc = q[order]
    s = (np.arange(s_nodes) + 0.5) / s_nodes
    count = q.size - np.searchsorted(q_desc[::-1], s, side="right")
    sorted_losses = np.where(live[order][None, :], losses[:, order], 0.0)
    running = np.maximum.accumulate(sorted_losses, axis=1)
    hit = count > 0
    picks = running[:, count[hit] - 1]
    risks = picks.sum(axis=1) / s_nodes
    return np.where(bad, math.inf, risks)


def risk_curve(contour: Contour, loss: LossFunction, s_nodes: int = DEFAULT_S_NODES) -> np.ndarray:
    """Upper expected loss for every action on the loss's action grid."""
    pts = contour.grid.points
    losses = np.stack([loss(a, pts) for a in loss.actions])
    return _risk_matrix(contour, losses, s_nodes)


@dataclass(frozen=True)
class DecisionReport:
    action: float
    upper_risk: float
    lower_risk: float
    actions: np.ndarray
    risks: np.ndarray

    def to_json(self) -> str:
        return json.dumps({
            "action": self.action,
            "upper_risk": self.upper_risk,
            "lower_risk": self.lower_risk,
            "risk_curve": [{"action": float(a), "upper_risk": float(r)}
                           for a, r in zip(self.actions, self.risks)],
        }, indent=2)


def optimal_action(contour: Contour, loss: LossFunction,
                   s_nodes: int = DEFAULT_S_NODES) -> DecisionReport:
    """Minimizer of the upper expected loss over the action grid; ties go to the smallest action."""
    if loss.actions.size == 0:
        raise ValueError("empty action grid")
    risks = risk_curve(contour, loss, s_nodes)
    if not np.isfinite(risks).any():
        raise ValueError("every action has infinite upper risk")
    order = np.argsort(loss.actions, kind="stable")
    i = order[int(np.argmin(risks[order]))]
    a = float(loss.actions[i])
    return DecisionReport(a, float(risks[i]), lower_expected_loss(contour, loss, a, s_nodes),
                          loss.actions.copy(), risks)


@dataclass(frozen=True)
class ExpectationInterval:
    lower: float
    upper: float
    marginal: Contour


def marginal_expectation_interval(contour2d: Contour, delta_grid: Grid,
                                  feature: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                                  s_nodes: int = DEFAULT_S_NODES) -> ExpectationInterval:
    """Lower and upper expectation of a bounded scalar feature under its marginal contour.

    The feature is shifted by the bound B = max |delta| so the Choquet
    integrand is non-negative: upper = U(delta + B) - B, lower = B - U(B - delta).
    """
    if not contour2d.normalized:
        raise ValueError("2D contour must be normalized")
    phi = extension_marginal(contour2d, delta_grid, feature)
    d = delta_grid.nodes
    bound = float(np.max(np.abs(d)))
    upper = choquet_upper_expectation(phi, d + bound, s_nodes) - bound
    lower = bound - choquet_upper_expectation(phi, bound - d, s_nodes)
    return ExpectationInterval(lower, upper, phi)


# ---------------------------------------------------------------- decision bound

@dataclass(frozen=True)
class BoundCheck:
    holds: bool
    max_ratio: float
    e_reg: float
    worst_action: float


def decision_ratios(contour: IMContour, loss: LossFunction, theta,
                    s_nodes: int = DEFAULT_S_NODES, risks: Optional[np.ndarray] = None) -> np.ndarray:
    """loss_a(theta) / upper expected loss of a, for every action."""
    theta = np.asarray(theta, dtype=float)
    if risks is None:
        risks = risk_curve(contour, loss, s_nodes)
    point = theta.reshape(1, -1) if contour.grid.ndim == 2 else theta.reshape(1)
    num = np.array([float(loss(a, point)[0]) for a in loss.actions])
    if not np.all(np.isfinite(risks)):
        raise ValueError("decision bound needs finite risks")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(num == 0, 0.0, num / risks)


def decision_bound_check(contour: IMContour, loss: LossFunction, theta,
                         s_nodes: int = DEFAULT_S_NODES, risks: Optional[np.ndarray] = None,
                         floor_at_one: bool = False) -> BoundCheck:
    """Pointwise certificate max_a loss_a(theta)/risk(a) <= e_reg(theta) * (1 + 1e-9).

    With ``floor_at_one`` the right side becomes max(1, e_reg), the bound that
    actually holds when e_reg < 1 (then pi(theta) = 1 and risk(a) >= loss_a(theta)).
    """
    ratios = decision_ratios(contour, loss, theta, s_nodes, risks)
    theta = np.asarray(theta, dtype=float)
    point = theta.reshape(1, -1) if contour.grid.ndim == 2 else theta.reshape(1)
    e = float(np.exp(contour.log_e(point)[0]))
    cap = max(1.0, e) if floor_at_one else e
    i = int(np.argmax(ratios))
    return BoundCheck(bool(ratios[i] <= cap * (1 + 1e-9)), float(ratios[i]), e,
                      float(loss.actions[i]))


__all__ = [
    "BoundCheck", "DecisionReport", "ExpectationInterval", "IMContour", "LossFunction",
    "decision_bound_check", "decision_ratios", "im_contour", "im_upper_lower",
    "lower_expected_loss", "marginal_expectation_interval", "optimal_action", "risk_curve",
    "squared_error", "upper_expected_loss",
]
