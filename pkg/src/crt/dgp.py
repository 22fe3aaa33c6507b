"""Simulation data-generating processes for the power and validity studies.

Six models over four covariates.  The control outcome is a covariate signal
plus standard normal noise; treatment adds a constant shift (plus a
proportional term in the heterogeneous model).  The effect parameters enter
only deterministically, so a fixed stream yields the same covariates and
control outcomes for every effect size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PotentialOutcomes

MODELS = (
    "main_linear",
    "pos_neg",
    "heterogeneous",
    "mixed_distributions",
    "misspec_moderate",
    "misspec_none",
)

_WEIGHTS = {
    "main_linear": (0.1, 0.2, 0.3, 0.4),
    "pos_neg": (-0.1, 0.2, 0.3, -0.4),
    "heterogeneous": (0.1, 0.2, 0.3, 0.4),
    "mixed_distributions": (0.1, 0.2, 0.3, 0.4),
    "misspec_moderate": (0.1, 0.2, 0.3, 0.4),
    "misspec_none": (0.1, 0.2, 0.3, 0.4),
}


@dataclass(frozen=True)
class DGPSpec:
    """One simulation cell: model family, covariate strength, effect size."""

    model: str = "main_linear"
    beta: float = 0.0
    tau: float = 0.0
    sigma_tau: float | None = None
    n: int = 100

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.sigma_tau is not None and self.model != "heterogeneous":
            raise ValueError("sigma_tau applies only to the heterogeneous model")
        if self.model == "heterogeneous" and self.sigma_tau is None:
            object.__setattr__(self, "sigma_tau", 0.5)
        if self.n < 4:
            raise ValueError("need at least 4 units")


def _draw_covariates(model: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if model == "mixed_distributions":
        x1 = rng.standard_normal(n)
        x2 = x1 + rng.standard_normal(n)
        x3 = rng.poisson(5.0, n).astype(np.float64)
        x4 = (rng.random(n) < 0.2).astype(np.float64)
        return np.column_stack([x1, x2, x3, x4])
    return rng.standard_normal((n, 4))


def _signal(model: str, X: np.ndarray) -> np.ndarray:
    a, b, c, d = _WEIGHTS[model]
    if model == "misspec_moderate":
        return a * X[:, 0] ** 2 + b * X[:, 1] + c * X[:, 2] ** 2 + d * X[:, 3]
    if model == "misspec_none":
        return (
            a * np.sqrt(np.abs(X[:, 0]))
            + b * X[:, 1] ** 2
            + c * np.sqrt(np.abs(X[:, 2]))
            + d * X[:, 3] ** 2
        )
    return a * X[:, 0] + b * X[:, 1] + c * X[:, 2] + d * X[:, 3]


def transformed_covariates(model: str, X: np.ndarray) -> np.ndarray:
    """The covariate functions that enter the outcome linearly (misspecified models)."""
    if model == "misspec_moderate":
        return np.column_stack([X[:, 0] ** 2, X[:, 1], X[:, 2] ** 2, X[:, 3]])
    if model == "misspec_none":
        return np.column_stack(
            [np.sqrt(np.abs(X[:, 0])), X[:, 1] ** 2, np.sqrt(np.abs(X[:, 2])), X[:, 3] ** 2]
        )
    return X


def generate(spec: DGPSpec, rng: np.random.Generator):
    """Draw covariates and potential outcomes for one simulation cell.

    Returns (X, PotentialOutcomes).  Covariates and outcomes are then held
    fixed while assignments are re-randomized.
    """
    X = _draw_covariates(spec.model, spec.n, rng)
    eps = rng.standard_normal(spec.n)
    y0 = spec.beta * _signal(spec.model, X) + eps
    if spec.model == "heterogeneous":
        y1 = y0 + spec.tau + spec.sigma_tau * y0
    else:
        y1 = y0 + spec.tau
    return X, PotentialOutcomes(y0=y0, y1=y1)
