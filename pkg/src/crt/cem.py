"""Coarsened-exact-matching strata: binning rules, coarsening, and unit pruning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import AllUnitsPrunedError, ZeroRangeError
from .statistics import StratumLabels
from .validation import check_binary_vector, check_matrix


@dataclass(frozen=True)
class CoarseningSpec:
    """Builds per-covariate cutpoints: fixed quantile groups or Sturges bins from the data.

    ``mode='quantile'`` coarsens each covariate into ``groups`` cells at the
    quantiles of a reference distribution (standard normal by default).
    ``mode='sturges'`` uses ceil(log2 N)+1 equal-width bins over each
    covariate's observed range.
    """

    mode: str = "quantile"
    groups: int = 2
    reference: object = None

    def __post_init__(self):
        if self.mode not in ("quantile", "sturges"):
            raise ValueError(f"mode must be 'quantile' or 'sturges', got {self.mode!r}")
        if self.mode == "quantile" and self.groups < 2:
            raise ValueError("quantile coarsening needs at least 2 groups")

    def cutpoints_for(self, X) -> list:
        X = check_matrix(X, "X")
        if self.mode == "quantile":
            cut = quantile_cutpoints(self.groups, self.reference)
            return [cut] * X.shape[1]
        return [sturges_cutpoints(X[:, j]) for j in range(X.shape[1])]


def quantile_cutpoints(groups: int, dist=None) -> np.ndarray:
    """The groups-1 equal-probability cutpoints of ``dist`` (standard normal by default)."""
    if groups < 2:
        raise ValueError("need at least 2 groups")
    dist = norm if dist is None else dist
    return dist.ppf(np.arange(1, groups) / groups)


def sturges_cutpoints(x) -> np.ndarray:
    """Interior edges of ceil(log2 N)+1 equal-width bins over the observed range of x."""
    x = np.asarray(x, dtype=np.float64)
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        raise ZeroRangeError("covariate has zero range; cannot form equal-width bins")
    k = int(np.ceil(np.log2(x.shape[0]))) + 1
    return np.linspace(lo, hi, k + 1)[1:-1]


def coarsen(X, cutpoints) -> StratumLabels:
    """Map each unit to its cell of the per-covariate binning (labels renumbered densely).

    ``cutpoints`` is one sorted array per covariate; values exactly at a
    cutpoint fall in the lower bin.
    """
    X = check_matrix(X, "X")
    if len(cutpoints) != X.shape[1]:
        raise ValueError(f"{len(cutpoints)} cutpoint lists for {X.shape[1]} covariates")
    codes = np.zeros(X.shape[0], dtype=np.int64)
    for j, cp in enumerate(cutpoints):
        cp = np.asarray(cp, dtype=np.float64)
        if cp.size and np.any(np.diff(cp) <= 0):
            raise ValueError(f"cutpoints for covariate {j + 1} must be strictly increasing")
        codes = codes * (cp.size + 1) + np.searchsorted(cp, X[:, j], side="left")
    _, dense = np.unique(codes, return_inverse=True)
    return StratumLabels(c=dense + 1)


def cem_prune(labels: StratumLabels, w_obs) -> np.ndarray:
    """Indices of units in strata containing at least one treated and one control unit."""
    w = check_binary_vector(w_obs, "w_obs")
    sizes = labels.sizes()
    treated = labels.treated_counts(w)
    mixed = (treated >= 1) & (treated < sizes)
    keep = mixed[labels.c - 1]
    if not keep.any():
        raise AllUnitsPrunedError("no stratum contains both a treated and a control unit")
    return np.flatnonzero(keep)
