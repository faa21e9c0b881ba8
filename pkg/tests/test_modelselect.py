import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superstat.densities import IGa, LogN, ModelSpec, SufficientStats, gaussian_log_likelihood, iga_log_evidence
from superstat.modelselect import (
    CHUNK,
    bayes_factor,
    bf_series,
    evidence_mc,
    fit_hyperparameters,
    log_bayes_factor,
    model_stream,
    posterior_model_probability,
    preference_summary,
    prior_draws,
)
from superstat.synthetic import GeneratorConfig, gen_superstat

IGA = ModelSpec(IGa(3.0, 2.0))
LOGN = ModelSpec(LogN(0.5))


def test_single_draw_is_likelihood_at_draw():
    x = np.random.default_rng(0).normal(0, 1, 25)
    rng = np.random.default_rng(5)
    theta = IGA.law.sample(np.random.default_rng(5), (1, 1))[0, 0]
    ev = evidence_mc(x, IGA, 1, seed=rng)
    assert ev.log_value == gaussian_log_likelihood(SufficientStats.from_data(x, 0.0), 0.0, theta)


def test_iga_evidence_matches_closed_form():
    x = np.random.default_rng(1).normal(0, 0.9, 50)
    ev = evidence_mc(x, IGA, 100_000, seed=3)
    exact = iga_log_evidence(3.0, 2.0, SufficientStats.from_data(x, 0.0))
    assert ev.log_value == pytest.approx(exact, abs=0.05)
    assert abs(ev.log_value - exact) < 4 * ev.std_error + 1e-3


def test_prior_draw_prefix():
    n = CHUNK + 100
    a = np.concatenate(list(prior_draws(LOGN, np.random.default_rng(4), n)))
    b = np.concatenate(list(prior_draws(LOGN, np.random.default_rng(4), 3 * CHUNK)))
    np.testing.assert_array_equal(a, b[:n])


def test_bayes_factor_of_model_with_itself():
    x = np.random.default_rng(2).normal(0, 1, 200)
    assert bayes_factor(x, IGA, IGA, 1000, seed=9) == 1.0


def test_bayes_factor_swap_is_reciprocal():
    x = np.random.default_rng(2).normal(0, 1, 200)
    ab = log_bayes_factor(x, IGA, LOGN, 2000, seed=4)
    ba = log_bayes_factor(x, LOGN, IGA, 2000, seed=4)
    assert ab == -ba


def test_streams_are_model_keyed():
    a = model_stream(3, IGA, 5).random(3)
    assert np.array_equal(a, model_stream(3, ModelSpec(IGa(3.0, 2.0)), 5).random(3))
    assert not np.array_equal(a, model_stream(3, LOGN, 5).random(3))
    assert not np.array_equal(a, model_stream(3, IGA, 6).random(3))


def test_block_evidence_prefers_generating_law():
    returns, _ = gen_superstat(GeneratorConfig(IGA, 5000, 100, 8))
    assert bayes_factor(returns, IGA, ModelSpec(LogN(1.2)), 4000, seed=1, block_length=100) > 1.0


def test_block_evidence_is_sum_of_block_closed_forms():
    x = np.random.default_rng(6).normal(0, 1.3, 90)
    ev = evidence_mc(x, IGA, 200_000, seed=2, block_length=30)
    exact = sum(iga_log_evidence(3.0, 2.0, SufficientStats.from_data(x[i:i + 30], 0.0))
                for i in range(0, 90, 30))
    assert abs(ev.log_value - exact) < 4 * ev.std_error


def test_single_block_depends_only_on_n_and_s():
    x = np.random.default_rng(7).normal(0, 1, 40)
    y = np.sqrt(np.mean(x * x)) * np.ones(40)
    a = evidence_mc(x, LOGN, 3000, seed=1).log_value
    b = evidence_mc(y, LOGN, 3000, seed=1).log_value
    assert a == pytest.approx(b, rel=1e-12)


def test_series_first_entry_is_bayes_factor():
    x = np.random.default_rng(3).normal(0, 1, 100)
    s = bf_series(x, IGA, LOGN, n_series=1, n_draws=500, seed=12)
    assert len(s) == 1
    assert s.values[0] == bayes_factor(x, IGA, LOGN, 500, seed=12)


def test_series_independent_of_threads():
    x = np.random.default_rng(3).normal(0, 1, 300)
    a = bf_series(x, IGA, LOGN, n_series=12, n_draws=700, seed=2, block_length=50, threads=1)
    b = bf_series(x, IGA, LOGN, n_series=12, n_draws=700, seed=2, block_length=50, threads=3)
    assert np.array_equal(a.log_values, b.log_values)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "iter,bf"


def test_preference_summary_examples():
    assert preference_summary([2.0, 0.5]) == (0.5, 1.25)
    assert preference_summary([1.0, 1.0, 1.0]) == (0.0, 1.0)
    with pytest.raises(ValueError):
        preference_summary([])
    assert posterior_model_probability(1.0) == 0.5
    assert posterior_model_probability(math.inf) == 1.0


def test_median_bayes_factor_grows_with_n():
    medians = []
    for n in (100, 1000, 10_000):
        returns, _ = gen_superstat(GeneratorConfig(IGA, n, 100, 21))
        s = bf_series(returns, IGA, ModelSpec(LogN(1.2)), n_series=15, n_draws=2000, seed=5, block_length=100)
        medians.append(float(np.median(s.log_values)))
    assert medians[0] < medians[1] < medians[2]


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-0.1, 0.1), min_size=1, max_size=50), st.floats(0.1, 3.0), st.integers(0, 1000))
def test_bayes_factors_positive_and_finite(vals, s, seed):
    v = bayes_factor(vals, IGA, ModelSpec(LogN(s)), 200, seed=seed)
    assert v > 0 and math.isfinite(v)


def test_fit_hyperparameters():
    returns, _ = gen_superstat(GeneratorConfig(IGA, 3000, 100, 4))
    fit = fit_hyperparameters(returns, "logn", n_draws=500, seed=0, block_length=100)
    assert isinstance(fit.model.law, LogN) and len(fit.grid) == 9
    assert fit.log_evidence == max(row["log_evidence"] for row in fit.grid)
    again = fit_hyperparameters(returns, "logn", n_draws=500, seed=0, block_length=100)
    assert again.to_dict() == fit.to_dict()
    with pytest.raises(ValueError):
        fit_hyperparameters(returns, "gamma")
