"""Monte Carlo randomization p-values and the exact enumeration oracle."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .data import ExperimentData
from .errors import EnumerationTooLargeError, EvaluationFailureError
from .statistics import StatisticSpec, batch_statistic, observed_statistic

ENUMERATION_CAP = 1_000_000
MAX_FAILURE_FRACTION = 0.01

# Ties count as exceedances.  Exact ties (an assignment and its complement give
# equal |statistic|) land an ulp apart in floating point, so the comparison
# gets a relative slack far below any genuine gap between distinct values.
TIE_RTOL = 1e-9


def _count_exceed(values: np.ndarray, t_obs: float) -> int:
    return int((np.abs(values) >= abs(t_obs) * (1.0 - TIE_RTOL)).sum())


@dataclass(frozen=True)
class TestResult:
    """Outcome of one randomization test."""

    statistic: float
    p_value: float
    n_draws: int
    n_used: int
    n_exceed: int
    n_failed: int
    acceptance_rate: float
    tries: int
    include_observed: bool
    wall_time: float
    draws: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")
        if self.n_draws < 1:
            raise ValueError("need at least one Monte Carlo draw")


def _mc_pvalue(
    X,
    w_obs,
    y_obs,
    statistic: StatisticSpec,
    sampler,
    n_draws: int,
    rng: np.random.Generator,
    include_observed: bool = False,
    keep_draws: bool = False,
    max_failure_fraction: float = MAX_FAILURE_FRACTION,
) -> TestResult:
    """Array-level Monte Carlo p-value; see randomization_pvalue."""
    if n_draws < 1:
        raise ValueError("need at least one Monte Carlo draw")
    start = time.perf_counter()
    t_obs = observed_statistic(statistic, y_obs, w_obs, X)
    n_exceed = 0
    n_failed = 0
    tries = 0
    accepted = 0
    kept = [] if keep_draws else None
    remaining = n_draws
    while remaining > 0:
        chunk = min(remaining, 2048)
        W, diag = sampler.draw_batch(rng, chunk)
        tries += diag.tries
        accepted += diag.accepted
        values = batch_statistic(statistic, W, y_obs, X)
        failed = np.isnan(values)
        n_failed += int(failed.sum())
        good = values[~failed]
        n_exceed += _count_exceed(good, t_obs)
        if kept is not None:
            kept.append(good)
        remaining -= chunk
    if n_failed > max_failure_fraction * n_draws:
        raise EvaluationFailureError(
            f"{n_failed} of {n_draws} draws failed statistic evaluation",
            n_failed=n_failed,
            n_draws=n_draws,
        )
    n_used = n_draws - n_failed
    if n_used == 0:
        raise EvaluationFailureError("every draw failed statistic evaluation", n_failed, n_draws)
    if include_observed:
        p = (1 + n_exceed) / (1 + n_used)
    else:
        p = n_exceed / n_used
    return TestResult(
        statistic=t_obs,
        p_value=p,
        n_draws=n_draws,
        n_used=n_used,
        n_exceed=n_exceed,
        n_failed=n_failed,
        acceptance_rate=accepted / tries if tries else float("nan"),
        tries=tries,
        include_observed=include_observed,
        wall_time=time.perf_counter() - start,
        draws=np.concatenate(kept) if kept else None,
    )


def randomization_pvalue(
    data: ExperimentData,
    statistic: StatisticSpec,
    sampler,
    n_draws: int,
    rng: np.random.Generator,
    include_observed: bool = False,
    keep_draws: bool = False,
    max_failure_fraction: float = MAX_FAILURE_FRACTION,
) -> TestResult:
    """Two-sided Monte Carlo p-value for the sharp null of no effect for any unit.

    Under the null the observed outcomes are reused for every sampled
    assignment; the p-value is the fraction of draws whose |statistic|
    reaches |observed|.  ``include_observed`` switches to the add-one form
    (1 + count)/(1 + draws).  Draws whose statistic fails to evaluate are
    dropped from numerator and denominator; more than
    ``max_failure_fraction`` of them aborts the test.
    """
    return _mc_pvalue(
        data.X,
        data.w_obs,
        data.y_obs,
        statistic,
        sampler,
        n_draws,
        rng,
        include_observed=include_observed,
        keep_draws=keep_draws,
        max_failure_fraction=max_failure_fraction,
    )


def _iter_index_chunks(n: int, k: int, chunk: int):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.int64)


def exact_pvalue_enumerate(
    data: ExperimentData,
    statistic: StatisticSpec,
    criterion=None,
    max_assignments: int = ENUMERATION_CAP,
) -> float:
    """Exact two-sided p-value by enumerating every assignment (optionally filtered).

    With a criterion, the sum runs over the uniformly weighted assignments it
    accepts.  Assignments whose statistic fails to evaluate are dropped from
    the reference set, mirroring the Monte Carlo engine.
    """
    n, n_t = data.n, data.n_treated
    total = math.comb(n, n_t)
    if total > max_assignments:
        raise EnumerationTooLargeError(
            f"C({n},{n_t}) = {total} exceeds the enumeration cap {max_assignments}"
        )
    t_obs = observed_statistic(statistic, data.y_obs, data.w_obs, data.X)
    n_pass = 0
    n_exceed = 0
    observed_seen = False
    w_obs = data.w_obs.astype(np.int8)
    for idx in _iter_index_chunks(n, n_t, 8192):
        W = np.zeros((idx.shape[0], n), dtype=np.int8)
        W[np.arange(idx.shape[0])[:, None], idx] = 1
        if criterion is not None:
            W = W[criterion.accepts_batch(data.X, W)]
            if W.shape[0] == 0:
                continue
        observed_seen = observed_seen or bool((W == w_obs).all(axis=1).any())
        values = batch_statistic(statistic, W, data.y_obs, data.X)
        good = values[~np.isnan(values)]
        n_pass += good.shape[0]
        n_exceed += _count_exceed(good, t_obs)
    if n_pass == 0:
        raise EvaluationFailureError("no assignment satisfied the criterion", 0, total)
    if criterion is not None and not observed_seen:
        raise ValueError("the observed assignment does not satisfy the criterion")
    return n_exceed / n_pass
