"""End-to-end analysis of a two-arm survival comparison (CMT vs ECMO counts)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import beta_mixture_calibrator
from .eprocess import WARE_COUNTS, Counts, Region, TestResult, composite_test, confidence_region, regularize, ware_binomial
from .im import ExpectationInterval, IMContour, marginal_expectation_interval
from .possibility import Grid, Grid2D, make_prior, upper_probability
from .regularization import regularizer_from_contour, vacuous


def ecmo_not_better(points: np.ndarray) -> np.ndarray:
    """The hypothesis theta_ecmo <= theta_cmt."""
    return points[:, 1] <= points[:, 0]


@dataclass(frozen=True)
class VariantResult:
    label: str
    region: Region
    test: TestResult
    contour: IMContour
    upper_prob_null: float
    interval: ExpectationInterval

    def extent(self, axis: int) -> tuple:
        pts = self.region.points
        if pts.size == 0:
            return (float("nan"), float("nan"))
        return (float(pts[:, axis].min()), float(pts[:, axis].max()))

    def to_dict(self) -> dict:
        phi = self.interval.marginal
        return {
            "region": {"nodes": int(self.region.mask.sum()),
                       "theta_cmt_extent": list(self.extent(0)),
                       "theta_ecmo_extent": list(self.extent(1))},
            "test_ecmo_not_better": {"decision": self.test.decision,
                                     "min_log_e": self.test.min_log_e,
                                     "argmin": [float(x) for x in self.test.argmin]},
            "upper_probability_ecmo_not_better": self.upper_prob_null,
            "delta_interval": [self.interval.lower, self.interval.upper],
            "delta_contour": {"delta": phi.grid.nodes.tolist(), "value": phi.values.tolist()},
        }


@dataclass(frozen=True)
class TwoArmResult:
    counts: Counts
    params: dict
    variants: dict

    def to_dict(self) -> dict:
        return {"counts": self.counts._asdict(), "params": self.params,
                "variants": {k: v.to_dict() for k, v in self.variants.items()}}


def two_arm_analysis(counts: Counts = WARE_COUNTS, beta: float = 0.18, kappa: float = 1.0,
                     grid_nodes: int = 401, delta_nodes: int = 801, alpha: float = 0.05,
                     s_nodes: int = 2001) -> TwoArmResult:
    """Confidence regions, tests of theta_ecmo <= theta_cmt, the marginal contour of
    delta = theta_ecmo - theta_cmt and its expectation interval, with and without
    the informative prior."""
    axis = Grid(0.0, 1.0, grid_nodes)
    grid = Grid2D(axis, axis)
    delta_grid = Grid(-1.0, 1.0, delta_nodes)
    base = ware_binomial(beta)
    prior = make_prior("ware_joint", grid)
    rhos = {"unregularized": vacuous(),
            "regularized": regularizer_from_contour(prior, beta_mixture_calibrator(kappa))}
    out = {}
    for label, rho in rhos.items():
        ereg = regularize(base, rho)
        region = confidence_region(ereg, counts, alpha, grid)
        test = composite_test(ereg, counts, ecmo_not_better, alpha, grid)
        contour = IMContour(ereg, counts, grid, label=label)
        interval = marginal_expectation_interval(contour, delta_grid, s_nodes=s_nodes)
        out[label] = VariantResult(label, region, test, contour,
                                   upper_probability(contour, ecmo_not_better), interval)
    params = {"beta": beta, "kappa": kappa, "grid_nodes": grid_nodes,
              "delta_nodes": delta_nodes, "alpha": alpha, "s_nodes": s_nodes}
    return TwoArmResult(counts, params, out)
