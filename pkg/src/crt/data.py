"""Experiment data model, potential outcomes, and the complete-randomization sampler."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidDesignError, LengthMismatchError, SchemaError
from .validation import check_binary_vector, check_matrix, check_vector


@dataclass(frozen=True)
class ExperimentData:
    """One completely randomized experiment: fixed covariates, observed assignment, observed outcomes."""

    X: np.ndarray
    w_obs: np.ndarray
    y_obs: np.ndarray

    def __post_init__(self):
        X = check_matrix(np.asarray(self.X, dtype=np.float64), "X")
        w = check_binary_vector(self.w_obs, "w_obs")
        y = check_vector(self.y_obs, "y_obs")
        if not (X.shape[0] == w.shape[0] == y.shape[0]):
            raise LengthMismatchError(
                f"X has {X.shape[0]} rows but w_obs has {w.shape[0]} and y_obs has {y.shape[0]}"
            )
        n_t = int(w.sum())
        if X.shape[0] < 2 or n_t < 1 or n_t > X.shape[0] - 1:
            raise InvalidDesignError(
                f"need N >= 2 with 1 <= N_T <= N-1, got N={X.shape[0]}, N_T={n_t}"
            )
        constant = np.ptp(X, axis=0) == 0.0
        if constant.any():
            cols = np.flatnonzero(constant) + 1
            raise InvalidDesignError(
                f"covariate column(s) {cols.tolist()} are constant; covariance would be singular"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "w_obs", w)
        object.__setattr__(self, "y_obs", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.X.shape[1]

    @property
    def n_treated(self) -> int:
        return int(self.w_obs.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated


@dataclass(frozen=True)
class PotentialOutcomes:
    """Potential outcome vectors under control (y0) and treatment (y1)."""

    y0: np.ndarray
    y1: np.ndarray

    def __post_init__(self):
        y0 = check_vector(self.y0, "y0")
        y1 = check_vector(self.y1, "y1")
        if y0.shape != y1.shape:
            raise LengthMismatchError(f"y0 has length {y0.shape[0]} but y1 has {y1.shape[0]}")
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "y1", y1)

    @property
    def average_effect(self) -> float:
        return float(np.mean(self.y1 - self.y0))


def observe(po: PotentialOutcomes, w: np.ndarray) -> np.ndarray:
    """Observed outcomes under assignment ``w``: y_i = w_i*y1_i + (1-w_i)*y0_i."""
    w = check_binary_vector(w, "w")
    if w.shape[0] != po.y0.shape[0]:
        raise LengthMismatchError(
            f"assignment has length {w.shape[0]} but potential outcomes have {po.y0.shape[0]}"
        )
    return np.where(w == 1, po.y1, po.y0)


# ---------------------------------------------------------------------------
# Complete randomization.
#
# Assignments are drawn by a partial Fisher-Yates shuffle driven by uniforms
# from the caller's generator, so every draw is exactly uniform over the
# C(N, N_T) subsets and reproducible from the (seed, path) of the stream.
# The numba kernel below is the single implementation used by the scalar
# draw, the batched samplers, and the balance reference draws.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _subset_sums(A, n_treat, U, out_sums, out_idx):  # pragma: no cover - jitted
    # A: (N, K) float64. U: (B, n_treat) uniforms in [0, 1).
    # Writes per-draw column sums of the treated rows and the treated indices.
    N, K = A.shape
    n_draws = U.shape[0]
    idx = np.arange(N)
    swaps = np.empty(n_treat, np.int64)
    for b in range(n_draws):
        for k in range(K):
            out_sums[b, k] = 0.0
        for i in range(n_treat):
            j = i + int(U[b, i] * (N - i))
            if j >= N:
                j = N - 1
            swaps[i] = j
            tmp = idx[i]
            idx[i] = idx[j]
            idx[j] = tmp
            row = idx[i]
            out_idx[b, i] = row
            for k in range(K):
                out_sums[b, k] += A[row, k]
        # undo the partial shuffle so idx is the identity for the next draw
        for i in range(n_treat - 1, -1, -1):
            j = swaps[i]
            tmp = idx[i]
            idx[i] = idx[j]
            idx[j] = tmp


def complete_subsets(A: np.ndarray, n_treat: int, n_draws: int, rng: np.random.Generator):
    """Draw ``n_draws`` uniform N_T-subsets; return (treated column sums of A, treated indices)."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    U = rng.random((n_draws, n_treat))
    sums = np.empty((n_draws, A.shape[1]))
    idx = np.empty((n_draws, n_treat), dtype=np.int64)
    _subset_sums(A, n_treat, U, sums, idx)
    return sums, idx


def assignments_from_indices(idx: np.ndarray, n: int) -> np.ndarray:
    """Expand (B, N_T) treated-index rows into (B, N) 0/1 assignment rows."""
    W = np.zeros((idx.shape[0], n), dtype=np.int8)
    W[np.arange(idx.shape[0])[:, None], idx] = 1
    return W


def draw_complete(n: int, n_treat: int, rng: np.random.Generator) -> np.ndarray:
    """One assignment from complete randomization: exactly ``n_treat`` of ``n`` units treated."""
    if not 1 <= n_treat <= n - 1:
        raise InvalidDesignError(f"need 1 <= N_T <= N-1, got N={n}, N_T={n_treat}")
    _, idx = complete_subsets(np.zeros((n, 1)), n_treat, 1, rng)
    w = np.zeros(n, dtype=np.int8)
    w[idx[0]] = 1
    return w


# ---------------------------------------------------------------------------
# CSV ingestion: header x1..xp, w, y; every field required on every row.
# ---------------------------------------------------------------------------


def load_experiment_csv(path) -> ExperimentData:
    """Read an experiment from CSV with columns ``x1..xp, w, y``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        p = len(header) - 2
        expected = [f"x{j}" for j in range(1, p + 1)] + ["w", "y"]
        if p < 1 or header != expected:
            raise SchemaError(
                f"{path}: header must be x1..xp,w,y in order, got {header!r}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != p + 2 or any(f.strip() == "" for f in row):
                raise SchemaError(f"{path}:{lineno}: expected {p + 2} non-empty fields")
            try:
                vals = [float(f) for f in row]
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
            if vals[p] not in (0.0, 1.0):
                raise SchemaError(f"{path}:{lineno}: w must be 0 or 1, got {row[p]!r}")
            rows.append(vals)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    arr = np.asarray(rows)
    return ExperimentData(X=arr[:, :p], w_obs=arr[:, p].astype(np.int8), y_obs=arr[:, p + 1])


def save_experiment_csv(data: ExperimentData, path) -> None:
    """Write an experiment in the same ``x1..xp,w,y`` schema read by load_experiment_csv."""
    p = data.n_covariates
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(1, p + 1)] + ["w", "y"])
        for i in range(data.n):
            writer.writerow(
                [repr(float(v)) for v in data.X[i]]
                + [int(data.w_obs[i]), repr(float(data.y_obs[i]))]
            )
