import numpy as np
import pytest
from sklearn.base import clone

from crt import (
    CEMRandomizationTest,
    DGPSpec,
    InvalidDesignError,
    RandomizationTest,
    draw_complete,
    generate,
    observe,
)


def experiment(seed=0, n=40, beta=1.5, tau=0.5):
    g = np.random.default_rng(seed)
    X, po = generate(DGPSpec(model="main_linear", beta=beta, tau=tau, n=n), g)
    w = draw_complete(n, n // 2, g)
    return X, observe(po, w), w


class TestRandomizationTest:
    def test_fit_sets_attributes(self):
        X, y, w = experiment()
        test = RandomizationTest(draws=400, random_state=0).fit(X, y, w)
        assert 0.0 <= test.p_value_ <= 1.0
        assert test.result_.n_draws == 400
        assert test.criterion_ is None
        assert test.n_features_in_ == 4

    def test_get_set_params_round_trip(self):
        test = RandomizationTest(sampler="conditional", acceptance=0.25, tiers=4)
        params = test.get_params()
        assert params["acceptance"] == 0.25 and params["tiers"] == 4
        cloned = clone(test)
        assert cloned.get_params() == params

    def test_conditional_builds_criterion(self):
        X, y, w = experiment(seed=1)
        test = RandomizationTest(
            sampler="conditional",
            tiers=2,
            acceptance=0.5,
            reference_draws=100,
            draws=200,
            random_state=1,
        ).fit(X, y, w)
        assert test.criterion_ is not None
        assert test.criterion_.accepts(X, w)
        assert test.result_.acceptance_rate < 1.0

    def test_strata_sampler(self):
        X, y, w = experiment(seed=2)
        strata = (X[:, 0] > 0).astype(int)
        test = RandomizationTest(sampler="strata", strata=strata, draws=200, random_state=2)
        test.fit(X, y, w)
        assert 0.0 <= test.p_value_ <= 1.0

    def test_ps_statistic_needs_strata(self):
        X, y, w = experiment(seed=3)
        with pytest.raises(InvalidDesignError):
            RandomizationTest(statistic="ps", draws=50).fit(X, y, w)

    def test_same_seed_same_result(self):
        X, y, w = experiment(seed=4)
        kwargs = dict(sampler="conditional", tiers=4, acceptance=0.5, reference_draws=100,
                      draws=300)
        a = RandomizationTest(random_state=11, **kwargs).fit(X, y, w)
        b = RandomizationTest(random_state=11, **kwargs).fit(X, y, w)
        assert a.p_value_ == b.p_value_

    def test_int_statistic(self):
        X, y, w = experiment(seed=5, tau=1.5)
        test = RandomizationTest(statistic="int", draws=300, random_state=5).fit(X, y, w)
        sd = RandomizationTest(statistic="sd", draws=300, random_state=5).fit(X, y, w)
        assert test.p_value_ <= sd.p_value_ + 0.2  # adjusted test is not wildly worse

    def test_unknown_sampler(self):
        X, y, w = experiment(seed=6)
        with pytest.raises(ValueError):
            RandomizationTest(sampler="bootstrap", draws=10).fit(X, y, w)


class TestCEMRandomizationTest:
    def test_fit_prunes_and_tests(self):
        X, y, w = experiment(seed=7, n=100)
        test = CEMRandomizationTest(groups=2, draws=300, random_state=7).fit(X, y, w)
        assert test.n_discarded_ == 100 - test.retained_.shape[0]
        assert 0.0 <= test.p_value_ <= 1.0
        assert test.labels_.n_strata <= 16

    def test_sturges_mode(self):
        X, y, w = experiment(seed=8, n=100)
        test = CEMRandomizationTest(mode="sturges", draws=100, random_state=8)
        try:
            test.fit(X, y, w)
            assert test.n_discarded_ >= 80  # eight bins per covariate prune heavily
        except Exception as exc:  # noqa: BLE001 - all-pruned is a legitimate outcome
            assert type(exc).__name__ == "AllUnitsPrunedError"

    def test_params_round_trip(self):
        test = CEMRandomizationTest(groups=3, mode="quantile", draws=50)
        assert clone(test).get_params() == test.get_params()
