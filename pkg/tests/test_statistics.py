import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crt import (
    AllStrataDroppedError,
    EmptyArmError,
    RankDeficiencyError,
    StratumLabels,
    draw_complete,
    least_squares,
    tau_int,
    tau_ps,
    tau_sd,
)
from crt.statistics import StatisticSpec, _tau_int_batch, _tau_sd_batch, batch_statistic


class TestTauSd:
    def test_arithmetic(self):
        assert tau_sd([3.0, 5.0, 1.0, 1.0], [1, 1, 0, 0]) == pytest.approx(3.0)

    def test_constant_outcomes(self):
        assert tau_sd([2.0] * 6, [1, 1, 1, 0, 0, 0]) == 0.0

    def test_complement_flips_sign(self):
        g = np.random.default_rng(0)
        y = g.standard_normal(10)
        w = draw_complete(10, 5, g)
        assert tau_sd(y, w) == pytest.approx(-tau_sd(y, 1 - w))

    def test_empty_arm(self):
        with pytest.raises(EmptyArmError):
            tau_sd([1.0, 2.0], [1, 1])

    @given(st.floats(-50, 50))
    @settings(max_examples=50, deadline=None)
    def test_shift_invariance(self, c):
        g = np.random.default_rng(1)
        y = g.standard_normal(12)
        w = draw_complete(12, 6, g)
        assert tau_sd(y + c, w) == pytest.approx(tau_sd(y, w), abs=1e-9)


class TestTauPs:
    def test_single_stratum_equals_tau_sd(self):
        g = np.random.default_rng(2)
        y = g.standard_normal(10)
        w = draw_complete(10, 4, g)
        labels = StratumLabels(c=np.ones(10, dtype=int))
        assert tau_ps(y, w, labels) == pytest.approx(tau_sd(y, w))

    def test_two_equal_strata_average(self):
        # within-stratum mean differences 1 and 3 with equal sizes average to 2
        y = np.array([1.0, 0.0, 3.0, 0.0])
        w = np.array([1, 0, 1, 0])
        labels = StratumLabels(c=[1, 1, 2, 2])
        assert tau_ps(y, w, labels) == pytest.approx(2.0)

    def test_pure_stratum_dropped_and_renormalized(self):
        y = np.array([4.0, 2.0, 9.0, 9.0])
        w = np.array([1, 0, 1, 1])
        labels = StratumLabels(c=[1, 1, 2, 2])
        assert tau_ps(y, w, labels) == pytest.approx(tau_sd(y[:2], w[:2]))

    def test_all_strata_dropped(self):
        with pytest.raises(AllStrataDroppedError):
            tau_ps([1.0, 2.0], [1, 0], StratumLabels(c=[1, 2]))

    def test_shift_invariance(self):
        g = np.random.default_rng(3)
        y = g.standard_normal(12)
        w = draw_complete(12, 6, g)
        labels = StratumLabels(c=np.repeat([1, 2, 3], 4))
        assert tau_ps(y + 11.5, w, labels) == pytest.approx(tau_ps(y, w, labels), abs=1e-9)


class TestTauInt:
    def test_exact_fit_recovers_coefficient(self):
        g = np.random.default_rng(4)
        X = g.standard_normal((20, 3))
        w = draw_complete(20, 10, g)
        y = w.astype(float)
        assert tau_int(y, w, X) == pytest.approx(1.0, abs=1e-10)

    def test_equals_tau_sd_when_arm_means_match_exactly(self):
        # mirrored covariate rows across arms: group mean difference is exactly zero
        g = np.random.default_rng(5)
        half = g.standard_normal((5, 2))
        X = np.vstack([half, half])
        w = np.array([1] * 5 + [0] * 5)
        y = g.standard_normal(10)
        assert tau_int(y, w, X) == pytest.approx(tau_sd(y, w), abs=1e-8)

    def test_lower_variance_than_tau_sd_under_covariate_signal(self):
        # strong linear covariate signal: the adjusted statistic concentrates
        g = np.random.default_rng(6)
        X = g.standard_normal((100, 4))
        y = 3.0 * (0.1 * X[:, 0] + 0.2 * X[:, 1] + 0.3 * X[:, 2] + 0.4 * X[:, 3])
        y = y + g.standard_normal(100)
        sd_vals, int_vals = [], []
        for _ in range(1000):
            w = draw_complete(100, 50, g)
            sd_vals.append(tau_sd(y, w))
            int_vals.append(tau_int(y, w, X))
        assert np.var(int_vals) < np.var(sd_vals)

    def test_affine_recoding_invariance(self):
        g = np.random.default_rng(7)
        X = g.standard_normal((30, 3))
        w = draw_complete(30, 15, g)
        y = g.standard_normal(30)
        base = tau_int(y, w, X)
        A = g.standard_normal((3, 3)) + 3 * np.eye(3)
        assert tau_int(y, w, X @ A.T + 5.0) == pytest.approx(base, abs=1e-8)

    def test_shift_invariance(self):
        g = np.random.default_rng(8)
        X = g.standard_normal((20, 2))
        w = draw_complete(20, 10, g)
        y = g.standard_normal(20)
        assert tau_int(y + 4.2, w, X) == pytest.approx(tau_int(y, w, X), abs=1e-9)

    def test_categorical_equivalence_with_tau_ps(self):
        # one binary covariate, strata = its two cells: the interacted regression
        # reproduces the post-stratified estimator exactly
        g = np.random.default_rng(9)
        x = (g.random(40) < 0.5).astype(float)
        while len(np.unique(x)) < 2:
            x = (g.random(40) < 0.5).astype(float)
        X = x[:, None]
        labels = StratumLabels(c=(x + 1).astype(int))
        for _ in range(20):
            w = draw_complete(40, 20, g)
            counts = labels.treated_counts(w)
            sizes = labels.sizes()
            if ((counts < 1) | (counts >= sizes)).any():
                continue
            y = g.standard_normal(40)
            assert tau_int(y, w, X) == pytest.approx(tau_ps(y, w, labels), abs=1e-8)


class TestLeastSquares:
    def test_identity(self):
        assert np.allclose(least_squares(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_column_of_ones_gives_mean(self):
        assert least_squares(np.ones((2, 1)), [2.0, 4.0]) == pytest.approx([3.0])

    def test_residual_orthogonal_to_column_space(self):
        g = np.random.default_rng(10)
        Z = g.standard_normal((50, 6))
        y = g.standard_normal(50)
        coef = least_squares(Z, y)
        resid = y - Z @ coef
        assert np.abs(Z.T @ resid).max() < 1e-9

    def test_rank_deficiency_names_column(self):
        Z = np.column_stack([np.ones(5), np.arange(5.0), np.arange(5.0)])
        with pytest.raises(RankDeficiencyError) as err:
            least_squares(Z, np.arange(5.0))
        assert err.value.column == 2


class TestBatchedEvaluation:
    def test_sd_batch_matches_scalar(self):
        g = np.random.default_rng(11)
        y = g.standard_normal(30)
        W = np.array([draw_complete(30, 12, g) for _ in range(50)])
        batch = _tau_sd_batch(W, y)
        scalar = [tau_sd(y, w) for w in W]
        assert np.allclose(batch, scalar, atol=1e-12)

    def test_int_batch_matches_scalar(self):
        g = np.random.default_rng(12)
        X = g.standard_normal((30, 3))
        y = g.standard_normal(30)
        W = np.array([draw_complete(30, 12, g) for _ in range(20)])
        batch = _tau_int_batch(W, y, X)
        scalar = [tau_int(y, w, X) for w in W]
        assert np.allclose(batch, scalar, atol=1e-9)

    def test_int_batch_marks_rank_deficient_rows(self):
        # a covariate identical to the assignment makes the design collinear
        g = np.random.default_rng(13)
        w = draw_complete(12, 6, g)
        X = np.column_stack([w.astype(float), g.standard_normal(12)])
        W = np.array([w, draw_complete(12, 6, g)])
        vals = _tau_int_batch(W, g.standard_normal(12), X)
        assert np.isnan(vals[0]) and not np.isnan(vals[1])

    def test_ps_batch_via_spec(self):
        g = np.random.default_rng(14)
        y = g.standard_normal(12)
        labels = StratumLabels(c=np.repeat([1, 2], 6))
        spec = StatisticSpec(kind="ps", labels=labels)
        W = np.array([draw_complete(12, 6, g) for _ in range(10)])
        vals = batch_statistic(spec, W, y, np.zeros((12, 1)))
        for v, w in zip(vals, W):
            try:
                assert v == pytest.approx(tau_ps(y, w, labels))
            except AllStrataDroppedError:
                assert np.isnan(v)
