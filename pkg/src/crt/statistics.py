"""Test statistics: mean difference, post-stratified, and regression-with-interactions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AllStrataDroppedError, EmptyArmError, RankDeficiencyError
from .validation import check_binary_vector, check_matrix, check_same_length, check_vector


@dataclass(frozen=True)
class StratumLabels:
    """Unit-to-stratum map with labels 1..S."""

    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.int64)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("labels must be a nonempty 1-d array")
        if c.min() < 1:
            raise ValueError("labels are 1-based; found label < 1")
        object.__setattr__(self, "c", c)

    @property
    def n_strata(self) -> int:
        return int(self.c.max())

    def sizes(self) -> np.ndarray:
        return np.bincount(self.c, minlength=self.n_strata + 1)[1:]

    def treated_counts(self, w) -> np.ndarray:
        w = check_binary_vector(w, "w")
        return np.bincount(self.c, weights=w, minlength=self.n_strata + 1)[1:].astype(np.int64)


@dataclass(frozen=True)
class StatisticSpec:
    """Which test statistic to evaluate; post-stratification carries its labels."""

    kind: str
    labels: StratumLabels | None = None

    def __post_init__(self):
        if self.kind not in ("sd", "ps", "int"):
            raise ValueError(f"statistic must be 'sd', 'ps' or 'int', got {self.kind!r}")
        if self.kind == "ps" and self.labels is None:
            raise ValueError("post-stratified statistic needs stratum labels")


def tau_sd(y, w) -> float:
    """Treated-minus-control mean of the outcomes."""
    y = check_vector(y, "y")
    w = check_binary_vector(w, "w")
    check_same_length("y", y, "w", w)
    treated = w == 1
    if not treated.any() or treated.all():
        raise EmptyArmError("mean difference needs at least one unit in each arm")
    return float(y[treated].mean() - y[~treated].mean())


def tau_ps(y, w, labels: StratumLabels) -> float:
    """Stratum-size-weighted mean difference.

    Strata lacking a treated or a control unit are dropped and the remaining
    weights renormalized; raises when nothing remains.
    """
    y = check_vector(y, "y")
    w = check_binary_vector(w, "w")
    check_same_length("y", y, "labels", labels.c)
    check_same_length("y", y, "w", w)
    sizes = labels.sizes()
    treated_counts = labels.treated_counts(w)
    usable = (treated_counts >= 1) & (treated_counts < sizes) & (sizes > 0)
    if not usable.any():
        raise AllStrataDroppedError("every stratum lacks a treated or a control unit")
    total = 0.0
    weight = 0.0
    for s in np.flatnonzero(usable):
        mask = labels.c == s + 1
        total += sizes[s] * tau_sd(y[mask], w[mask])
        weight += sizes[s]
    return float(total / weight)


def interaction_design(w, X) -> np.ndarray:
    """Design matrix [1, w, X, w*(X - column means of X)] used by tau_int."""
    X = check_matrix(X, "X")
    w = np.asarray(w, dtype=np.float64)
    centered = X - X.mean(axis=0)
    return np.column_stack([np.ones(len(w)), w, X, w[:, None] * centered])


def tau_int(y, w, X) -> float:
    """Coefficient on treatment from the fully interacted linear adjustment."""
    y = check_vector(y, "y")
    w = check_binary_vector(w, "w")
    check_same_length("y", y, "w", w)
    coef = least_squares(interaction_design(w, X), y)
    return float(coef[1])


def least_squares(design, response) -> np.ndarray:
    """Least-squares coefficients via QR; raises RankDeficiencyError with the bad column."""
    Z = check_matrix(design, "design")
    y = check_vector(response, "response")
    check_same_length("design rows", Z, "response", y)
    if Z.shape[1] > Z.shape[0]:
        raise RankDeficiencyError(
            f"more columns ({Z.shape[1]}) than rows ({Z.shape[0]})", column=Z.shape[0]
        )
    Q, R = np.linalg.qr(Z)
    diag = np.abs(np.diag(R))
    tol = Z.shape[0] * np.finfo(np.float64).eps * (diag.max() if diag.size else 0.0)
    bad = np.flatnonzero(diag <= tol)
    if bad.size:
        raise RankDeficiencyError(
            f"design matrix is rank deficient at column {int(bad[0])}", column=int(bad[0])
        )
    return scipy.linalg.solve_triangular(R, Q.T @ y)


# ---------------------------------------------------------------------------
# Batched evaluation over many assignments.  Used by the Monte Carlo engine;
# failed draws come back as NaN so the caller can count and drop them.
# ---------------------------------------------------------------------------


def _tau_sd_batch(W, y) -> np.ndarray:
    W = np.asarray(W)
    n = W.shape[1]
    n_t = int(W[0].sum())
    n_c = n - n_t
    c1 = 1.0 / n_t + 1.0 / n_c
    return W.astype(np.float64) @ y * c1 - y.sum() / n_c


def _tau_int_batch(W, y, X) -> np.ndarray:
    Wf = np.asarray(W, dtype=np.float64)
    b, n = Wf.shape
    p = X.shape[1]
    centered = X - X.mean(axis=0)
    Z = np.empty((b, n, 2 + 2 * p))
    Z[:, :, 0] = 1.0
    Z[:, :, 1] = Wf
    Z[:, :, 2 : 2 + p] = X
    Z[:, :, 2 + p :] = Wf[:, :, None] * centered
    Q, R = np.linalg.qr(Z)
    diag = np.abs(np.diagonal(R, axis1=1, axis2=2))
    tol = n * np.finfo(np.float64).eps * diag.max(axis=1)
    ok = (diag > tol[:, None]).all(axis=1)
    if not ok.all():
        # keep the solve well-posed for the failed rows, then blank them
        R = R.copy()
        R[~ok] = np.eye(R.shape[1])
    rhs = np.einsum("bnk,n->bk", Q, y)
    coef = np.linalg.solve(R, rhs[..., None])[..., 0]
    out = coef[:, 1]
    out[~ok] = np.nan
    return out


def _tau_ps_batch(W, y, labels: StratumLabels) -> np.ndarray:
    out = np.empty(W.shape[0])
    for i in range(W.shape[0]):
        try:
            out[i] = tau_ps(y, W[i], labels)
        except AllStrataDroppedError:
            out[i] = np.nan
    return out


def observed_statistic(spec: StatisticSpec, y, w, X) -> float:
    if spec.kind == "sd":
        return tau_sd(y, w)
    if spec.kind == "ps":
        return tau_ps(y, w, spec.labels)
    return tau_int(y, w, X)


def batch_statistic(spec: StatisticSpec, W, y, X) -> np.ndarray:
    """Statistic values for each assignment row of W; NaN marks failed evaluations."""
    if spec.kind == "sd":
        return _tau_sd_batch(W, y)
    if spec.kind == "ps":
        return _tau_ps_batch(W, y, spec.labels)
    return _tau_int_batch(W, y, X)
