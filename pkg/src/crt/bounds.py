"""Selection of per-tier Mahalanobis bounds from sign-constrained reference draws.

Two constructions: bin the reference distribution before looking at the
observed distance ("bin"), or take the reference draws nearest the observed
distance on each side ("neighborhood").
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .balance import (
    BalanceCriterion,
    TierSpec,
    covariance_inverse,
    group_mean_difference,
    mean_diff_signs,
)
from .data import complete_subsets
from .errors import InsufficientDrawsError, SamplerStallError
from .validation import check_binary_vector, check_matrix

logger = logging.getLogger(__name__)

DEFAULT_REFERENCE_DRAWS = 1000
DEFAULT_MAX_CONSECUTIVE_REJECTIONS = 1_000_000


@dataclass(frozen=True)
class BoundsConfig:
    """How to turn reference draws into per-tier bounds.

    ``acceptance`` is the overall fraction of the sign-constrained reference
    distribution enclosed across all tiers; each tier gets acceptance**(1/T)
    unless ``per_tier_acceptance`` overrides it (useful when tiers are
    correlated and the product relation is only approximate).
    """

    procedure: str = "neighborhood"
    reference_draws: int = DEFAULT_REFERENCE_DRAWS
    acceptance: float = 0.1
    per_tier_acceptance: tuple | None = None
    bin_count: int = 10
    cutpoints: tuple | None = None
    max_consecutive_rejections: int = DEFAULT_MAX_CONSECUTIVE_REJECTIONS

    def __post_init__(self):
        if self.procedure not in ("neighborhood", "bin"):
            raise ValueError(f"procedure must be 'neighborhood' or 'bin', got {self.procedure!r}")
        if self.reference_draws < 2:
            raise ValueError("need at least 2 reference draws")
        if not 0.0 < self.acceptance <= 1.0:
            raise ValueError(f"acceptance must be in (0, 1], got {self.acceptance}")
        if self.per_tier_acceptance is not None:
            pta = tuple(float(a) for a in self.per_tier_acceptance)
            if any(not 0.0 < a <= 1.0 for a in pta):
                raise ValueError("per-tier acceptances must be in (0, 1]")
            object.__setattr__(self, "per_tier_acceptance", pta)
        if self.bin_count < 1:
            raise ValueError("bin_count must be >= 1")
        if self.cutpoints is not None:
            cp = tuple(float(c) for c in self.cutpoints)
            _check_cutpoints(cp)
            object.__setattr__(self, "cutpoints", cp)

    def tier_acceptance(self, n_tiers: int) -> tuple:
        if self.per_tier_acceptance is not None:
            if len(self.per_tier_acceptance) != n_tiers:
                raise ValueError(
                    f"per_tier_acceptance has {len(self.per_tier_acceptance)} entries "
                    f"for {n_tiers} tiers"
                )
            return self.per_tier_acceptance
        return (self.acceptance ** (1.0 / n_tiers),) * n_tiers


def _check_cutpoints(cp) -> None:
    if len(cp) < 2 or cp[0] != 0.0 or not np.isinf(cp[-1]):
        raise ValueError("cutpoints must start at 0 and end at +inf")
    if any(a > b for a, b in zip(cp, cp[1:])):
        raise ValueError("cutpoints must be sorted")


def sign_constrained_draws(
    X,
    w_obs,
    tier,
    n_draws: int,
    rng: np.random.Generator,
    cov_inv=None,
    max_consecutive_rejections: int = DEFAULT_MAX_CONSECUTIVE_REJECTIONS,
) -> np.ndarray:
    """Sample the sign-constrained reference distribution of one tier's Mahalanobis distance.

    Draws complete randomizations, keeps those whose mean-difference signs on
    the tier's covariates match the observed signs, and returns the sorted
    tier distances of the first ``n_draws`` kept.
    """
    if n_draws < 2:
        raise InsufficientDrawsError(f"need at least 2 draws, got {n_draws}")
    X = check_matrix(X, "X")
    w_obs = check_binary_vector(w_obs, "w_obs")
    cols = np.asarray(tier, dtype=np.intp)
    Xt = np.ascontiguousarray(X[:, cols])
    if cov_inv is None:
        cov_inv = covariance_inverse(Xt)
    n = X.shape[0]
    n_t = int(w_obs.sum())
    n_c = n - n_t
    scale = n_t * n_c / n
    c1 = 1.0 / n_t + 1.0 / n_c
    c2 = Xt.sum(axis=0) / n_c
    target_signs = np.sign(group_mean_difference(Xt, w_obs))

    kept = []
    n_kept = 0
    consecutive = 0
    total = 0
    batch = max(1024, 4 * n_draws)
    while n_kept < n_draws:
        sums, _ = complete_subsets(Xt, n_t, batch, rng)
        d = sums * c1 - c2
        ok = (np.sign(d) == target_signs).all(axis=1)
        total += batch
        if ok.any():
            consecutive = batch - 1 - int(np.flatnonzero(ok)[-1])
            dk = d[ok]
            m = scale * np.einsum("bi,ij,bj->b", dk, cov_inv, dk)
            kept.append(np.maximum(m, 0.0))
            n_kept += int(ok.sum())
        else:
            consecutive += batch
        if consecutive > max_consecutive_rejections:
            raise SamplerStallError(
                f"sign constraint stalled after {consecutive} consecutive rejections",
                tries=total,
                acceptance_rate=n_kept / total,
            )
        if n_kept < n_draws:
            rate = max(n_kept / total, 1.0 / batch)
            batch = int(min(65536, max(1024, 1.3 * (n_draws - n_kept) / rate)))
    out = np.concatenate(kept)[:n_draws]
    out.sort()
    return out


def quantile_bin_cutpoints(reference: np.ndarray, n_bins: int) -> tuple:
    """Equal-probability cutpoints over the reference draws, anchored at 0 and +inf."""
    if n_bins < 1:
        raise ValueError("need at least one bin")
    interior = np.quantile(np.asarray(reference), np.arange(1, n_bins) / n_bins)
    return (0.0, *[float(c) for c in interior], np.inf)


def procedure1_bounds(reference, cutpoints, m_obs: float) -> tuple:
    """Bound selection by binning: the unique bin [m_c, m_{c+1}] containing ``m_obs``.

    ``cutpoints`` may be None, in which case equal-probability cutpoints are
    derived from the reference draws (10 bins).  Ties at a cutpoint resolve
    to the lower bin.
    """
    if cutpoints is None:
        cutpoints = quantile_bin_cutpoints(reference, 10)
    cp = np.asarray(cutpoints, dtype=np.float64)
    _check_cutpoints(tuple(cp))
    if m_obs < 0:
        raise ValueError(f"Mahalanobis distance cannot be negative, got {m_obs}")
    i = int(np.searchsorted(cp, m_obs, side="left"))
    c = max(i - 1, 0)
    return float(cp[c]), float(cp[c + 1])


def procedure2_bounds(reference: np.ndarray, acceptance: float, m_obs: float) -> tuple:
    """Bound selection by neighborhood: enclose D*acceptance reference draws around ``m_obs``.

    Takes the D*acceptance/2 draws immediately below and above the observed
    distance; when one side runs short, the other side is extended so the
    total count is preserved.  The observed distance is always inside the
    returned interval.
    """
    ds = np.asarray(reference, dtype=np.float64)
    d_total = ds.shape[0]
    if np.any(np.diff(ds) < 0):
        ds = np.sort(ds)
    n_inside = d_total * acceptance
    if n_inside < 2:
        raise InsufficientDrawsError(
            f"D*acceptance = {n_inside:.3f} < 2: not enough draws for a neighborhood"
        )
    half = max(1, int(round(n_inside / 2.0)))
    n_inside = 2 * half
    k = int(np.searchsorted(ds, m_obs, side="left"))  # draws strictly below m_obs
    n_below = min(k, half)
    n_above = min(d_total - k, half)
    if n_below < half:
        n_above = min(d_total - k, n_inside - n_below)
    elif n_above < half:
        n_below = min(k, n_inside - n_above)
    lower = float(ds[k - n_below]) if n_below > 0 else m_obs
    upper = float(ds[k + n_above - 1]) if n_above > 0 else m_obs
    return min(lower, m_obs), max(upper, m_obs)


def build_tier_criterion(
    X,
    w_obs,
    tiers: TierSpec,
    config: BoundsConfig,
    rng: np.random.Generator,
) -> BalanceCriterion:
    """Construct the acceptance criterion for the observed assignment, tier by tier.

    Each tier gets its own sign-constrained reference draws (independent
    substream), its own acceptance fraction, and bounds from the configured
    procedure.  The observed assignment always satisfies the result.
    """
    X = check_matrix(X, "X")
    w_obs = check_binary_vector(w_obs, "w_obs")
    tiers.validate_for(X.shape[1])
    n = X.shape[0]
    n_t = int(w_obs.sum())
    tier_rngs = rng.spawn(tiers.n_tiers)
    acceptances = config.tier_acceptance(tiers.n_tiers)
    ref_signs = mean_diff_signs(X, w_obs)
    d_obs = group_mean_difference(X, w_obs)
    scale = n_t * (n - n_t) / n

    inverses = []
    bounds = []
    for k, (tier, pa_t, tier_rng) in enumerate(zip(tiers.tiers, acceptances, tier_rngs)):
        cols = np.asarray(tier, dtype=np.intp)
        inv = covariance_inverse(X[:, cols], tier=k + 1)
        m_obs = float(scale * d_obs[cols] @ inv @ d_obs[cols])
        reference = sign_constrained_draws(
            X,
            w_obs,
            tier,
            config.reference_draws,
            tier_rng,
            cov_inv=inv,
            max_consecutive_rejections=config.max_consecutive_rejections,
        )
        if config.procedure == "bin":
            cutpoints = config.cutpoints
            if cutpoints is None:
                cutpoints = quantile_bin_cutpoints(reference, config.bin_count)
            lo, hi = procedure1_bounds(reference, cutpoints, m_obs)
        else:
            lo, hi = procedure2_bounds(reference, pa_t, m_obs)
        if not lo <= m_obs <= hi:
            logger.warning(
                "tier %d bounds (%.6g, %.6g) missed the observed distance %.6g; widening",
                k + 1,
                lo,
                hi,
                m_obs,
            )
            lo, hi = min(lo, m_obs), max(hi, m_obs)
        inverses.append(inv)
        bounds.append((lo, hi))

    return BalanceCriterion(
        tiers=tiers,
        bounds=tuple(bounds),
        ref_signs=ref_signs,
        cov_inverses=tuple(inverses),
        n=n,
        n_treated=n_t,
    )
