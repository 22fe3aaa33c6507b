"""Scikit-learn style estimators wrapping the randomization-test engine.

``RandomizationTest.fit(X, y, treatment)`` runs one test and exposes the
p-value and diagnostics as fitted attributes, so test configurations compose
with ``get_params``/``set_params`` and the wider sklearn tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .balance import TierSpec
from .bounds import BoundsConfig, build_tier_criterion
from .cem import CoarseningSpec, cem_prune, coarsen
from .data import ExperimentData
from .engine import _mc_pvalue, randomization_pvalue
from .errors import InvalidDesignError
from .rng import as_generator
from .samplers import (
    DEFAULT_MAX_TRIES,
    CompleteSampler,
    ConditionalSampler,
    WithinStrataSampler,
)
from .statistics import StatisticSpec, StratumLabels
from .validation import check_binary_vector


def _as_labels(strata, n: int) -> StratumLabels:
    if isinstance(strata, StratumLabels):
        labels = strata
    else:
        arr = np.asarray(strata)
        if arr.shape[0] != n:
            raise InvalidDesignError(f"strata has length {arr.shape[0]} but there are {n} units")
        _, dense = np.unique(arr, return_inverse=True)
        labels = StratumLabels(c=dense + 1)
    if labels.c.shape[0] != n:
        raise InvalidDesignError(f"strata has length {labels.c.shape[0]} but there are {n} units")
    return labels


def _as_tiers(tiers, p: int) -> TierSpec:
    if tiers is None:
        return TierSpec.omnibus(p)
    if isinstance(tiers, TierSpec):
        return tiers
    if isinstance(tiers, (int, np.integer)):
        return TierSpec.contiguous(p, int(tiers))
    return TierSpec(tuple(tuple(t) for t in tiers))


class RandomizationTest(BaseEstimator):
    """Randomization test of the sharp null of no treatment effect for any unit.

    Parameters
    ----------
    statistic : {"sd", "ps", "int"}
        Mean difference, post-stratified mean difference (needs ``strata``),
        or the coefficient on treatment from the interacted regression.
    sampler : {"complete", "strata", "conditional"}
        Reference distribution: complete randomization, permutation within
        strata, or complete randomization conditioned on covariate balance
        near the observed assignment.
    draws : int
        Monte Carlo draws for the p-value.
    strata : array-like or StratumLabels, optional
        Stratum labels for ``sampler="strata"`` or ``statistic="ps"``.
    tiers : int, list of index lists, or TierSpec, optional
        Covariate tiers for the conditional sampler; an int splits the
        columns into that many contiguous blocks; indices are 0-based.
        Default: all covariates in one tier.
    procedure : {"neighborhood", "bin"}
        How tier bounds are selected from the reference draws.
    acceptance : float
        Overall fraction of the sign-constrained reference distribution
        enclosed by the bounds (split across tiers as acceptance**(1/T)).
    per_tier_acceptance : sequence of float, optional
        Explicit per-tier acceptances, overriding the equal split.
    reference_draws : int
        Sign-constrained reference draws per tier used to place bounds.
    bin_count : int
        Number of equal-probability bins for ``procedure="bin"``.
    cutpoints : sequence of float, optional
        Explicit bin cutpoints (must start at 0 and end at +inf).
    include_observed : bool
        Use the add-one p-value (1 + count) / (1 + draws).
    max_tries : int
        Consecutive-rejection budget for the conditional sampler.
    keep_draws : bool
        Retain the sampled statistic values on the result object.
    random_state : int, Generator, or None
        Seed for all Monte Carlo work inside the test.

    Attributes
    ----------
    statistic_value_ : float
        Observed test statistic.
    p_value_ : float
        Two-sided Monte Carlo p-value.
    result_ : TestResult
        Full diagnostics (acceptance rate, failed draws, wall time).
    criterion_ : BalanceCriterion or None
        The acceptance region used by the conditional sampler.
    """

    def __init__(
        self,
        statistic="sd",
        sampler="complete",
        draws=1000,
        strata=None,
        tiers=None,
        procedure="neighborhood",
        acceptance=0.1,
        per_tier_acceptance=None,
        reference_draws=1000,
        bin_count=10,
        cutpoints=None,
        include_observed=False,
        max_tries=DEFAULT_MAX_TRIES,
        keep_draws=False,
        random_state=None,
    ):
        self.statistic = statistic
        self.sampler = sampler
        self.draws = draws
        self.strata = strata
        self.tiers = tiers
        self.procedure = procedure
        self.acceptance = acceptance
        self.per_tier_acceptance = per_tier_acceptance
        self.reference_draws = reference_draws
        self.bin_count = bin_count
        self.cutpoints = cutpoints
        self.include_observed = include_observed
        self.max_tries = max_tries
        self.keep_draws = keep_draws
        self.random_state = random_state

    def fit(self, X, y, treatment):
        """Run the test on covariates X, observed outcomes y, and assignment ``treatment``."""
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        w = check_binary_vector(treatment, "treatment")
        data = ExperimentData(X=X, w_obs=w, y_obs=y)
        rng = as_generator(self.random_state)

        labels = None
        if self.strata is not None:
            labels = _as_labels(self.strata, data.n)
        if self.statistic == "ps" and labels is None:
            raise InvalidDesignError("statistic='ps' needs strata labels")
        spec = StatisticSpec(kind=self.statistic, labels=labels if self.statistic == "ps" else None)

        self.criterion_ = None
        if self.sampler == "complete":
            sampler = CompleteSampler(data.n, data.n_treated)
        elif self.sampler == "strata":
            if labels is None:
                raise InvalidDesignError("sampler='strata' needs strata labels")
            sampler = WithinStrataSampler.from_observed(labels, data.w_obs)
        elif self.sampler == "conditional":
            tiers = _as_tiers(self.tiers, data.n_covariates)
            config = BoundsConfig(
                procedure=self.procedure,
                reference_draws=self.reference_draws,
                acceptance=self.acceptance,
                per_tier_acceptance=(
                    tuple(self.per_tier_acceptance)
                    if self.per_tier_acceptance is not None
                    else None
                ),
                bin_count=self.bin_count,
                cutpoints=tuple(self.cutpoints) if self.cutpoints is not None else None,
            )
            self.criterion_ = build_tier_criterion(data.X, data.w_obs, tiers, config, rng)
            sampler = ConditionalSampler(data.X, self.criterion_, max_tries=self.max_tries)
        else:
            raise ValueError(
                f"sampler must be 'complete', 'strata' or 'conditional', got {self.sampler!r}"
            )

        result = randomization_pvalue(
            data,
            spec,
            sampler,
            self.draws,
            rng,
            include_observed=self.include_observed,
            keep_draws=self.keep_draws,
        )
        self.result_ = result
        self.statistic_value_ = result.statistic
        self.p_value_ = result.p_value
        self.n_features_in_ = data.n_covariates
        return self


class CEMRandomizationTest(BaseEstimator):
    """Coarsened-matching randomization test: bin covariates, prune unmatched strata,
    then permute treatment within the retained strata.

    Parameters
    ----------
    groups : int
        Cells per covariate for quantile coarsening.
    mode : {"quantile", "sturges"}
        Prespecified equal-probability cells of ``reference`` (standard
        normal by default), or automatic equal-width Sturges binning over
        each covariate's observed range.
    reference : frozen scipy distribution, optional
        Reference distribution for quantile cutpoints.
    statistic : {"sd", "int"}
        Statistic evaluated on the retained units.
    draws, include_observed, keep_draws, random_state
        As in RandomizationTest.

    Attributes
    ----------
    retained_ : ndarray
        Indices of units kept (strata with both arms).
    n_discarded_ : int
    labels_ : StratumLabels
        Coarsened strata over all units.
    p_value_, statistic_value_, result_ : as in RandomizationTest.
    """

    def __init__(
        self,
        groups=2,
        mode="quantile",
        reference=None,
        statistic="sd",
        draws=1000,
        include_observed=False,
        keep_draws=False,
        random_state=None,
    ):
        self.groups = groups
        self.mode = mode
        self.reference = reference
        self.statistic = statistic
        self.draws = draws
        self.include_observed = include_observed
        self.keep_draws = keep_draws
        self.random_state = random_state

    def fit(self, X, y, treatment):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        w = check_binary_vector(treatment, "treatment")
        rng = as_generator(self.random_state)

        spec = CoarseningSpec(mode=self.mode, groups=self.groups, reference=self.reference)
        labels = coarsen(X, spec.cutpoints_for(X))
        retained = cem_prune(labels, w)
        self.labels_ = labels
        self.retained_ = retained
        self.n_discarded_ = X.shape[0] - retained.shape[0]

        _, dense = np.unique(labels.c[retained], return_inverse=True)
        kept_labels = StratumLabels(c=dense + 1)
        w_kept = w[retained]
        sampler = WithinStrataSampler.from_observed(kept_labels, w_kept)
        stat = StatisticSpec(kind=self.statistic)
        result = _mc_pvalue(
            X[retained],
            w_kept,
            y[retained],
            stat,
            sampler,
            self.draws,
            rng,
            include_observed=self.include_observed,
            keep_draws=self.keep_draws,
        )
        self.result_ = result
        self.statistic_value_ = result.statistic
        self.p_value_ = result.p_value
        self.n_features_in_ = X.shape[1]
        return self
