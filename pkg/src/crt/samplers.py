"""Assignment samplers: complete randomization, within-strata permutation, and
rejection sampling against a balance criterion.

Each sampler exposes ``draw`` (one assignment) and ``draw_batch`` (a block of
assignments plus diagnostics).  All randomness comes from the caller's
generator, so any (seed, path) substream reproduces exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .balance import BalanceCriterion
from .data import assignments_from_indices, complete_subsets, draw_complete
from .errors import CountMismatchError, InvalidDesignError, SamplerStallError
from .statistics import StratumLabels
from .validation import check_binary_vector, check_matrix

DEFAULT_MAX_TRIES = 10_000_000


@dataclass
class SamplerDiagnostics:
    """Candidate counts accumulated across draw_batch calls."""

    tries: int = 0
    accepted: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.tries if self.tries else float("nan")

    def merge(self, other: "SamplerDiagnostics") -> None:
        self.tries += other.tries
        self.accepted += other.accepted


class CompleteSampler:
    """Uniform over assignments with exactly ``n_treated`` of ``n`` units treated."""

    def __init__(self, n: int, n_treated: int):
        if not 1 <= n_treated <= n - 1:
            raise InvalidDesignError(f"need 1 <= N_T <= N-1, got N={n}, N_T={n_treated}")
        self.n = n
        self.n_treated = n_treated

    def draw(self, rng) -> np.ndarray:
        return draw_complete(self.n, self.n_treated, rng)

    def draw_batch(self, rng, m: int):
        _, idx = complete_subsets(np.zeros((self.n, 1)), self.n_treated, m, rng)
        return assignments_from_indices(idx, self.n), SamplerDiagnostics(tries=m, accepted=m)


class WithinStrataSampler:
    """Uniform over assignments preserving each stratum's treated count."""

    def __init__(self, labels: StratumLabels, treated_counts):
        counts = np.asarray(treated_counts, dtype=np.int64)
        sizes = labels.sizes()
        if counts.shape[0] != labels.n_strata:
            raise CountMismatchError(
                f"{counts.shape[0]} treated counts for {labels.n_strata} strata"
            )
        if (counts < 0).any() or (counts > sizes).any():
            raise CountMismatchError("stratum treated counts outside [0, stratum size]")
        if counts.sum() < 1 or counts.sum() >= sizes.sum():
            raise InvalidDesignError("design needs at least one treated and one control unit")
        self.labels = labels
        self.treated_counts = counts
        self.n = labels.c.shape[0]
        self.n_treated = int(counts.sum())
        self._members = [np.flatnonzero(labels.c == s + 1) for s in range(labels.n_strata)]

    @classmethod
    def from_observed(cls, labels: StratumLabels, w_obs) -> "WithinStrataSampler":
        w = check_binary_vector(w_obs, "w_obs")
        return cls(labels, labels.treated_counts(w))

    def draw(self, rng) -> np.ndarray:
        W, _ = self.draw_batch(rng, 1)
        return W[0]

    def draw_batch(self, rng, m: int):
        W = np.zeros((m, self.n), dtype=np.int8)
        for members, t_s in zip(self._members, self.treated_counts):
            n_s = members.shape[0]
            if t_s == 0:
                continue
            if t_s == n_s:
                W[:, members] = 1
                continue
            _, idx = complete_subsets(np.zeros((n_s, 1)), int(t_s), m, rng)
            W[np.arange(m)[:, None], members[idx]] = 1
        return W, SamplerDiagnostics(tries=m, accepted=m)


class ConditionalSampler:
    """Rejection sampler: complete randomizations filtered by a balance criterion."""

    def __init__(self, X, criterion: BalanceCriterion, max_tries: int = DEFAULT_MAX_TRIES):
        if max_tries < 1:
            raise ValueError("max_tries must be >= 1")
        X = check_matrix(X, "X")
        if X.shape[0] != criterion.n:
            raise CountMismatchError(
                f"criterion was built for N={criterion.n}, X has {X.shape[0]} rows"
            )
        self.X = np.ascontiguousarray(X)
        self.criterion = criterion
        self.max_tries = max_tries
        self.n = criterion.n
        self.n_treated = criterion.n_treated
        n_c = self.n - self.n_treated
        self._c1 = 1.0 / self.n_treated + 1.0 / n_c
        self._c2 = self.X.sum(axis=0) / n_c
        self.diagnostics = SamplerDiagnostics()

    def draw(self, rng) -> np.ndarray:
        W, _ = self.draw_batch(rng, 1)
        return W[0]

    def draw_batch(self, rng, m: int):
        batch_diag = SamplerDiagnostics()
        kept = []
        n_kept = 0
        consecutive = 0
        batch = max(2048, 2 * m)
        while n_kept < m:
            sums, idx = complete_subsets(self.X, self.n_treated, batch, rng)
            diffs = sums * self._c1 - self._c2
            ok = self.criterion.accepts_diffs(diffs)
            batch_diag.tries += batch
            if ok.any():
                consecutive = batch - 1 - int(np.flatnonzero(ok)[-1])
                kept.append(idx[ok])
                n_kept += int(ok.sum())
                batch_diag.accepted += int(ok.sum())
            else:
                consecutive += batch
            if consecutive > self.max_tries:
                self.diagnostics.merge(batch_diag)
                raise SamplerStallError(
                    f"criterion rejected {consecutive} consecutive candidates "
                    f"(empirical acceptance {batch_diag.acceptance_rate:.3e})",
                    tries=batch_diag.tries,
                    acceptance_rate=batch_diag.acceptance_rate,
                )
            if n_kept < m:
                rate = max(batch_diag.accepted / batch_diag.tries, 0.5 / batch)
                batch = int(min(65536, max(2048, 1.3 * (m - n_kept) / rate)))
        idx_all = np.concatenate(kept)[:m]
        self.diagnostics.merge(batch_diag)
        return assignments_from_indices(idx_all, self.n), batch_diag


def draw_within_strata(labels: StratumLabels, treated_counts, rng) -> np.ndarray:
    """One assignment permuting treatment within strata, keeping per-stratum counts."""
    return WithinStrataSampler(labels, treated_counts).draw(rng)


def draw_conditional(
    X,
    criterion: BalanceCriterion,
    rng,
    max_tries: int = DEFAULT_MAX_TRIES,
) -> np.ndarray:
    """One complete randomization accepted by ``criterion`` (rejection sampling)."""
    return ConditionalSampler(X, criterion, max_tries=max_tries).draw(rng)
