"""Regularizers: non-negative functions of the parameter with prior upper expectation at most one."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import optimize

from .calibration import Calibrator, beta_mixture_calibrator, validate
from .possibility import AnyGrid, Contour, PriorSampler, choquet_upper_expectation

UPPER_EXPECTATION_TOL = 1e-3


@dataclass(frozen=True)
class FiniteCenter:
    """A probability on finitely many atoms, used as an exact centre."""

    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
            raise ValueError("centre probabilities must be non-negative and sum to one")


@dataclass(frozen=True)
class PriorModel:
    """Declared prior uncertainty model a regularizer is checked against.

    kinds: ``possibilistic`` (contour), ``contamination`` (centre, epsilon,
    grid for the sup), ``constant_odds`` (centre, tau), ``finite`` (atoms with
    upper masses).
    """

    kind: str
    contour: Optional[Contour] = None
    center: Union[PriorSampler, FiniteCenter, None] = None
    epsilon: Optional[float] = None
    tau: Optional[float] = None
    grid: Optional[AnyGrid] = None
    atoms: Optional[np.ndarray] = None
    upper_masses: Optional[np.ndarray] = None
    draws: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("possibilistic", "contamination", "constant_odds", "finite"):
            raise ValueError(f"unknown prior model kind {self.kind!r}")
        if self.kind == "possibilistic" and self.contour is None:
            raise ValueError("possibilistic model needs a contour")
        if self.kind == "contamination":
            if self.center is None or self.grid is None:
                raise ValueError("contamination model needs a centre and a grid")
            if not (self.epsilon is not None and 0 < self.epsilon < 1):
                raise ValueError("epsilon must lie in (0, 1)")
        if self.kind == "constant_odds":
            if self.center is None:
                raise ValueError("constant-odds model needs a centre")
            if not (self.tau is not None and 0 < self.tau < 1):
                raise ValueError("tau must lie in (0, 1)")
        if self.kind == "finite":
            um = np.asarray(self.upper_masses, dtype=float)
            if self.atoms is None or um.shape[0] != len(self.atoms):
                raise ValueError("finite model needs one upper mass per atom")
            if np.any(um < 0) or np.any(um > 1):
                raise ValueError("upper masses must lie in [0, 1]")


def possibilistic(contour: Contour) -> PriorModel:
    return PriorModel("possibilistic", contour=contour)


class Regularizer:
    """theta -> rho(theta) in [0, +inf], checked against its prior model at construction."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], provenance: str,
                 model: Optional[PriorModel] = None, check: bool = True):
        if model is None and provenance != "vacuous":
            raise ValueError("a regularizer needs a declared prior model")
        self.func = func
        self.provenance = provenance
        self.model = model
        self.upper_expectation = 1.0 if model is None else math.nan
        if model is not None:
            ue = upper_expectation_under(model, self)
            self.upper_expectation = ue
            if check and not ue <= 1 + UPPER_EXPECTATION_TOL:
                raise ValueError(f"regularizer {provenance} has upper expectation {ue:.6g} > 1")

    def __call__(self, theta) -> np.ndarray:
        out = np.asarray(self.func(np.asarray(theta, dtype=float)), dtype=float)
        if np.any(out < 0) or np.any(np.isnan(out)):
            raise ValueError("regularizer returned a negative or NaN value")
        return out

    def log(self, theta) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self(theta))

    @property
    def is_vacuous(self) -> bool:
        return self.provenance == "vacuous"

    def __repr__(self) -> str:
        return f"Regularizer({self.provenance})"


def vacuous() -> Regularizer:
    def one(theta):
        theta = np.asarray(theta, dtype=float)
        return np.ones(theta.shape[:1] if theta.ndim else ())
    return Regularizer(one, "vacuous")


def regularizer_from_contour(q: Contour, gamma: Optional[Calibrator] = None) -> Regularizer:
    """rho = 1/gamma(q), with +inf where q = 0."""
    gamma = beta_mixture_calibrator(1.0) if gamma is None else validate(gamma)
    if not q.normalized:
        raise ValueError("prior contour must be normalized")

    def rho(theta):
        return gamma.reciprocal(q(theta))

    return Regularizer(rho, f"{q.label}+{gamma.name}", possibilistic(q))


def _center_mean(center, values_of: Callable[[np.ndarray], np.ndarray],
                 draws: int, seed: int) -> np.ndarray:
    if isinstance(center, FiniteCenter):
        return np.asarray(center.probs, dtype=float), values_of(np.asarray(center.atoms, dtype=float))
    rng = np.random.default_rng(seed)
    pts = center.draw(rng, draws)
    return np.full(draws, 1.0 / draws), values_of(pts)


def upper_expectation_under(model: PriorModel, rho: Regularizer) -> float:
    """Upper expectation of rho under the model's credal set."""
    if model.kind == "possibilistic":
        return choquet_upper_expectation(model.contour, rho(model.contour.grid.points))
    if model.kind == "finite":
        vals = rho(np.asarray(model.atoms, dtype=float))
        return float(np.sum(vals * np.asarray(model.upper_masses, dtype=float)))
    w, vals = _center_mean(model.center, rho, model.draws, model.seed)
    if np.any(np.isinf(vals)):
        return math.inf
    mean = float(np.sum(w * vals))
    if model.kind == "contamination":
        sup = float(np.max(rho(model.grid.points)))
        if not math.isfinite(sup):
            return math.inf
        return (1 - model.epsilon) * mean + model.epsilon * sup
    # constant odds ratio: root of tau E(rho - x)+ + (1 - tau)(E rho - x)
    tau = model.tau

    def f(x):
        return tau * float(np.sum(w * np.maximum(vals - x, 0.0))) + (1 - tau) * (mean - x)

    hi = float(vals.max())
    if f(0.0) * f(hi) > 0:
        raise ValueError(f"no sign change on [0, {hi:g}]: f(0)={f(0.0):g}, f(hi)={f(hi):g}")
    if f(hi) == 0:
        return hi
    return float(optimize.bisect(f, 0.0, hi, xtol=1e-8, maxiter=500))


def finite_support_regularizer(atoms: Sequence, eta: Sequence, upper_masses: Sequence) -> Regularizer:
    """rho = eta / upper mass on the atoms and 0 elsewhere."""
    atoms = np.asarray(atoms, dtype=float)
    eta = np.asarray(eta, dtype=float)
    um = np.asarray(upper_masses, dtype=float)
    if eta.shape[0] != atoms.shape[0] or um.shape[0] != atoms.shape[0]:
        raise ValueError("atoms, eta and upper masses must align")
    if np.any(eta < 0) or eta.sum() > 1 + 1e-12:
        raise ValueError("eta must be a sub-probability mass function")
    if np.any((eta > 0) & (um <= 0)):
        raise ValueError("upper mass is zero on an atom where eta is positive")
    ratio = np.where(eta > 0, eta / np.where(um > 0, um, 1.0), 0.0)

    def rho(theta):
        theta = np.asarray(theta, dtype=float)
        flat = theta.reshape(theta.shape[0], -1) if theta.ndim > 1 else theta.reshape(-1, 1)
        ref = atoms.reshape(atoms.shape[0], -1)
        match = np.all(np.isclose(flat[:, None, :], ref[None, :, :], rtol=0, atol=1e-12), axis=2)
        out = np.where(match.any(axis=1), ratio[np.argmax(match, axis=1)], 0.0)
        return out.reshape(theta.shape[:1]) if theta.ndim else out[0]

    model = PriorModel("finite", atoms=atoms, upper_masses=um)
    return Regularizer(rho, "finite-support", model)
