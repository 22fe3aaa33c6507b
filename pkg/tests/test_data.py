import itertools

import numpy as np
import pytest
from scipy.stats import chisquare

from crt import (
    ExperimentData,
    InvalidDesignError,
    LengthMismatchError,
    PotentialOutcomes,
    SchemaError,
    draw_complete,
    load_experiment_csv,
    observe,
    save_experiment_csv,
)
from crt.data import assignments_from_indices, complete_subsets


def rng(seed=0):
    return np.random.default_rng(seed)


class TestDrawComplete:
    def test_n2_symmetry(self):
        draws = np.array([draw_complete(2, 1, rng(1))])
        counts = np.zeros(2)
        g = rng(1)
        for _ in range(10_000):
            counts += draw_complete(2, 1, g)
        freq = counts / 10_000
        assert abs(freq[0] - 0.5) < 0.02 and abs(freq[1] - 0.5) < 0.02
        assert draws.sum() == 1

    def test_n4_all_six_uniform(self):
        # exhaustive enumeration of C(4,2): every pattern near 1/6 over 60,000 draws
        g = rng(7)
        _, idx = complete_subsets(np.zeros((4, 1)), 2, 60_000, g)
        W = assignments_from_indices(idx, 4)
        patterns = {w: 0 for w in itertools.combinations(range(4), 2)}
        keys = [tuple(np.flatnonzero(row)) for row in W]
        for k in keys:
            patterns[k] += 1
        freqs = np.array(list(patterns.values())) / 60_000
        assert len(patterns) == 6
        assert np.all(np.abs(freqs - 1 / 6) < 0.01)

    def test_invalid_design(self):
        with pytest.raises(InvalidDesignError):
            draw_complete(4, 0, rng())
        with pytest.raises(InvalidDesignError):
            draw_complete(4, 4, rng())

    def test_chi_square_uniformity_n6(self):
        # all C(6,3)=20 assignments equally likely at the 0.001 chi-square level
        _, idx = complete_subsets(np.zeros((6, 1)), 3, 60_000, rng(11))
        W = assignments_from_indices(idx, 6)
        _, counts = np.unique(W, axis=0, return_counts=True)
        assert len(counts) == 20
        stat, p = chisquare(counts)
        assert p > 0.001

    def test_seed_reproducibility(self):
        a = draw_complete(50, 20, rng(123))
        b = draw_complete(50, 20, rng(123))
        assert np.array_equal(a, b)


class TestObserve:
    def test_direct_substitution(self):
        po = PotentialOutcomes(y0=[0.0, 0.0], y1=[1.0, 1.0])
        assert np.array_equal(observe(po, [1, 0]), [1.0, 0.0])

    def test_sharp_null_invariance(self):
        po = PotentialOutcomes(y0=[5.0, 7.0], y1=[5.0, 7.0])
        for w in ([0, 1], [1, 0]):
            assert np.array_equal(observe(po, w), [5.0, 7.0])

    def test_three_units(self):
        po = PotentialOutcomes(y0=[1.0, 2.0, 3.0], y1=[2.0, 3.0, 4.0])
        assert np.array_equal(observe(po, [0, 1, 0]), [1.0, 3.0, 3.0])

    def test_length_mismatch(self):
        po = PotentialOutcomes(y0=[1.0, 2.0], y1=[2.0, 3.0])
        with pytest.raises(LengthMismatchError):
            observe(po, [1, 0, 0])

    def test_observed_outcome_rule_any_assignment(self):
        g = rng(3)
        po = PotentialOutcomes(y0=g.standard_normal(12), y1=g.standard_normal(12))
        for _ in range(5):
            w = draw_complete(12, 5, g)
            y = observe(po, w)
            assert np.array_equal(y, w * po.y1 + (1 - w) * po.y0)


class TestExperimentData:
    def test_counts(self):
        g = rng(5)
        data = ExperimentData(X=g.standard_normal((10, 2)), w_obs=[1] * 4 + [0] * 6,
                              y_obs=g.standard_normal(10))
        assert data.n_treated == 4 and data.n_control == 6 and data.n == 10

    def test_rejects_constant_column(self):
        g = rng(5)
        X = g.standard_normal((10, 2))
        X[:, 1] = 3.0
        with pytest.raises(InvalidDesignError):
            ExperimentData(X=X, w_obs=[1] * 5 + [0] * 5, y_obs=g.standard_normal(10))

    def test_rejects_single_arm(self):
        g = rng(5)
        with pytest.raises(InvalidDesignError):
            ExperimentData(X=g.standard_normal((6, 2)), w_obs=[1] * 6, y_obs=g.standard_normal(6))


class TestCsv:
    def test_round_trip(self, tmp_path):
        g = rng(9)
        data = ExperimentData(
            X=g.standard_normal((8, 3)), w_obs=[1, 0] * 4, y_obs=g.standard_normal(8)
        )
        path = tmp_path / "exp.csv"
        save_experiment_csv(data, path)
        back = load_experiment_csv(path)
        assert np.array_equal(back.X, data.X)
        assert np.array_equal(back.w_obs, data.w_obs)
        assert np.array_equal(back.y_obs, data.y_obs)

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,w,y\n1.0,1,2.0\n2.0,,3.0\n")
        with pytest.raises(SchemaError):
            load_experiment_csv(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1.0,1,2.0\n")
        with pytest.raises(SchemaError):
            load_experiment_csv(path)

    def test_nonbinary_w_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,w,y\n1.0,2,2.0\n")
        with pytest.raises(SchemaError):
            load_experiment_csv(path)
