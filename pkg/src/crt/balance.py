"""Mahalanobis covariate balance, mean-difference signs, and acceptance criteria."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CountMismatchError, LengthMismatchError, SingularCovarianceError
from .validation import check_binary_vector, check_matrix

DEFAULT_CONDITION_CAP = 1e12

# Bounds produced by the selection procedures are themselves Mahalanobis values
# of particular assignments, and the same assignment's distance can move by an
# ulp between evaluation paths (accumulation order).  Closed-interval checks
# therefore get a relative slack far below any gap between distinct values, so
# boundary assignments are included consistently everywhere.
BOUND_RTOL = 1e-10


@dataclass(frozen=True)
class TierSpec:
    """Disjoint groups of covariate columns, each receiving its own balance constraint.

    Indices are 0-based column positions into X.  Config files use 1-based
    lists (``tiers = [[1,2],[3,4]]``); convert with :meth:`from_one_based`.
    """

    tiers: tuple

    def __post_init__(self):
        tiers = tuple(tuple(int(i) for i in t) for t in self.tiers)
        if not tiers:
            raise ValueError("need at least one tier")
        seen = set()
        for t in tiers:
            if len(t) == 0:
                raise ValueError("every tier needs at least one covariate")
            if any(i < 0 for i in t):
                raise ValueError(f"negative covariate index in tier {t}")
            if seen.intersection(t):
                raise ValueError("tiers must be pairwise disjoint")
            seen.update(t)
        object.__setattr__(self, "tiers", tiers)

    @classmethod
    def from_one_based(cls, lists) -> "TierSpec":
        return cls(tuple(tuple(int(i) - 1 for i in t) for t in lists))

    @classmethod
    def omnibus(cls, n_covariates: int) -> "TierSpec":
        return cls((tuple(range(n_covariates)),))

    @classmethod
    def singletons(cls, n_covariates: int) -> "TierSpec":
        return cls(tuple((j,) for j in range(n_covariates)))

    @classmethod
    def contiguous(cls, n_covariates: int, n_tiers: int) -> "TierSpec":
        """Split columns into ``n_tiers`` contiguous blocks of (near-)equal size."""
        if not 1 <= n_tiers <= n_covariates:
            raise ValueError(f"need 1 <= n_tiers <= p, got {n_tiers} with p={n_covariates}")
        edges = np.linspace(0, n_covariates, n_tiers + 1).round().astype(int)
        return cls(tuple(tuple(range(edges[k], edges[k + 1])) for k in range(n_tiers)))

    @property
    def n_tiers(self) -> int:
        return len(self.tiers)

    @property
    def sizes(self) -> tuple:
        return tuple(len(t) for t in self.tiers)

    @property
    def covariates(self) -> tuple:
        """All constrained covariate indices, in tier order."""
        return tuple(i for t in self.tiers for i in t)

    def validate_for(self, n_covariates: int) -> None:
        top = max(self.covariates)
        if top >= n_covariates:
            raise LengthMismatchError(
                f"tier references covariate {top + 1} but X has only {n_covariates} columns"
            )


@dataclass(frozen=True)
class BalanceSummary:
    """Per-tier Mahalanobis distances plus the covariate mean-difference signs."""

    M: tuple
    signs: np.ndarray


def covariance_inverse(X, condition_cap: float = DEFAULT_CONDITION_CAP, tier=None) -> np.ndarray:
    """Inverse of the sample covariance (divisor N-1) of the columns of X.

    Computed once per dataset and reused across assignments.  Raises
    SingularCovarianceError when the condition number exceeds ``condition_cap``.
    """
    X = check_matrix(X, "X")
    S = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
    vals, vecs = np.linalg.eigh(S)
    v_max = vals[-1]
    v_min = vals[0]
    cond = np.inf if v_min <= 0 else v_max / v_min
    if v_min <= 0 or cond > condition_cap:
        where = "covariance" if tier is None else f"tier {tier} covariance"
        raise SingularCovarianceError(
            f"{where} is singular or ill-conditioned (condition estimate {cond:.3e})",
            tier=tier,
            condition=cond,
        )
    return (vecs / vals) @ vecs.T


def group_mean_difference(X, w) -> np.ndarray:
    """Treated-minus-control covariate means for one assignment."""
    X = check_matrix(X, "X")
    w = check_binary_vector(w, "w")
    if w.shape[0] != X.shape[0]:
        raise LengthMismatchError(f"w has length {w.shape[0]} but X has {X.shape[0]} rows")
    treated = w == 1
    return X[treated].mean(axis=0) - X[~treated].mean(axis=0)


def mahalanobis(X, w, cov_inv) -> float:
    """Balance of assignment ``w``: (N_T N_C / N) d' cov_inv d with d the group mean difference."""
    X = check_matrix(X, "X")
    w = check_binary_vector(w, "w")
    d = group_mean_difference(X, w)
    n = w.shape[0]
    n_t = int(w.sum())
    scale = n_t * (n - n_t) / n
    return float(scale * d @ cov_inv @ d)


def mean_diff_signs(X, w) -> np.ndarray:
    """Componentwise sign of the treated-minus-control covariate means (0 on exact ties)."""
    return np.sign(group_mean_difference(X, w)).astype(np.int8)


@dataclass(frozen=True)
class BalanceCriterion:
    """Acceptance region for assignments: per-tier Mahalanobis bounds plus a sign pattern.

    An assignment is acceptable when, for every tier, its tier Mahalanobis
    distance lies in [lower, upper] and every covariate in the tier has the
    same mean-difference sign as ``ref_signs``.  Covariance inverses are fixed
    at construction (one dataset, all assignments).
    """

    tiers: TierSpec
    bounds: tuple  # ((lower, upper), ...) per tier
    ref_signs: np.ndarray  # length-p sign vector; only tier members are consulted
    cov_inverses: tuple  # per-tier inverse sample covariance
    n: int
    n_treated: int
    sign_constrained: bool = True
    _tier_idx: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.bounds) != self.tiers.n_tiers or len(self.cov_inverses) != self.tiers.n_tiers:
            raise LengthMismatchError("bounds and cov_inverses must have one entry per tier")
        for lo, hi in self.bounds:
            if not (0.0 <= lo <= hi):
                raise ValueError(f"invalid bounds ({lo}, {hi}): need 0 <= lower <= upper")
        object.__setattr__(self, "ref_signs", np.asarray(self.ref_signs, dtype=np.int8))
        object.__setattr__(
            self, "_tier_idx", tuple(np.asarray(t, dtype=np.intp) for t in self.tiers.tiers)
        )

    @property
    def scale(self) -> float:
        return self.n_treated * (self.n - self.n_treated) / self.n

    def tier_distances(self, diffs: np.ndarray) -> list:
        """Per-tier Mahalanobis distances for a (B, p) matrix of group mean differences."""
        out = []
        for idx, inv in zip(self._tier_idx, self.cov_inverses):
            d = diffs[:, idx]
            m = self.scale * np.einsum("bi,ij,bj->b", d, inv, d)
            out.append(np.maximum(m, 0.0))
        return out

    def accepts_diffs(self, diffs: np.ndarray) -> np.ndarray:
        """Vectorized acceptance over a (B, p) matrix of group mean differences."""
        ok = np.ones(diffs.shape[0], dtype=bool)
        distances = self.tier_distances(diffs)
        for idx, (lo, hi), m in zip(self._tier_idx, self.bounds, distances):
            if self.sign_constrained:
                ok &= (np.sign(diffs[:, idx]) == self.ref_signs[idx]).all(axis=1)
            ok &= (m >= lo * (1.0 - BOUND_RTOL)) & (m <= hi * (1.0 + BOUND_RTOL))
        return ok

    def accepts(self, X, w) -> bool:
        w = check_binary_vector(w, "w")
        if int(w.sum()) != self.n_treated or w.shape[0] != self.n:
            raise CountMismatchError(
                f"criterion was built for N={self.n}, N_T={self.n_treated}; "
                f"got N={w.shape[0]}, N_T={int(w.sum())}"
            )
        d = group_mean_difference(X, w)
        return bool(self.accepts_diffs(d[None, :])[0])

    def accepts_batch(self, X, W) -> np.ndarray:
        """Acceptance mask for (B, N) assignment rows against covariates X."""
        X = check_matrix(X, "X")
        n_c = self.n - self.n_treated
        c1 = 1.0 / self.n_treated + 1.0 / n_c
        diffs = np.asarray(W, dtype=np.float64) @ X * c1 - X.sum(axis=0) / n_c
        return self.accepts_diffs(diffs)


def evaluate_criterion(X, w, criterion: BalanceCriterion) -> bool:
    """True iff ``w`` satisfies every tier's bound and sign clause of ``criterion``."""
    return criterion.accepts(X, w)


def balance_summary(X, w, tiers: TierSpec, cov_inverses=None) -> BalanceSummary:
    """Per-tier Mahalanobis distances and the full sign vector for one assignment."""
    X = check_matrix(X, "X")
    tiers.validate_for(X.shape[1])
    if cov_inverses is None:
        cov_inverses = tuple(
            covariance_inverse(X[:, np.asarray(t)], tier=k + 1) for k, t in enumerate(tiers.tiers)
        )
    d = group_mean_difference(X, w)
    n = len(w)
    n_t = int(np.asarray(w).sum())
    scale = n_t * (n - n_t) / n
    M = tuple(
        float(scale * d[np.asarray(t)] @ inv @ d[np.asarray(t)])
        for t, inv in zip(tiers.tiers, cov_inverses)
    )
    return BalanceSummary(M=M, signs=np.sign(d).astype(np.int8))


@dataclass(frozen=True)
class StratumCountCriterion:
    """Acceptance region of the categorical (within-strata) mechanism.

    Accepts an assignment exactly when every stratum keeps its observed
    number of treated units, so the uniform law on the accepted set equals
    random permutation within strata.  Quacks like BalanceCriterion for
    enumeration filtering.
    """

    labels: np.ndarray
    treated_counts: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        counts = np.asarray(self.treated_counts, dtype=np.int64)
        if labels.min() < 1 or counts.shape[0] != labels.max():
            raise LengthMismatchError(
                "labels must be 1..S with one treated count per stratum"
            )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "treated_counts", counts)

    @classmethod
    def from_observed(cls, labels, w_obs) -> "StratumCountCriterion":
        labels = np.asarray(labels, dtype=np.int64)
        w = check_binary_vector(w_obs, "w_obs")
        counts = np.bincount(labels, weights=w, minlength=labels.max() + 1)[1:]
        return cls(labels=labels, treated_counts=counts.astype(np.int64))

    def accepts(self, X, w) -> bool:
        w = check_binary_vector(w, "w")
        counts = np.bincount(self.labels, weights=w, minlength=len(self.treated_counts) + 1)[1:]
        return bool((counts == self.treated_counts).all())

    def accepts_batch(self, X, W) -> np.ndarray:
        ok = np.ones(np.asarray(W).shape[0], dtype=bool)
        for s, count in enumerate(self.treated_counts):
            members = self.labels == s + 1
            ok &= np.asarray(W)[:, members].sum(axis=1) == count
        return ok
