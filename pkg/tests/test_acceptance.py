"""End-to-end acceptance checks; each prints one [PASS]/[FAIL] line."""

import hashlib
import json
import math
import time

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import CONJ_PRIOR
from superstat.cli import main
from superstat.densities import IGa, LogN, ModelSpec, SufficientStats, conjugate_posterior_iga, iga_log_evidence
from superstat.diagnostics import acf, adf_test, periodogram
from superstat.marketdata import abs_returns, serialize_prices, serialize_returns
from superstat.mcmc import AcceptanceMode, McmcConfig, effective_sample_size, estimate_theta, run_chain
from superstat.modelselect import evidence_mc
from superstat.predictive import predictive_iga
from superstat.synthetic import GeneratorConfig, gen_prices_from_returns, gen_superstat


def _posterior(data):
    return conjugate_posterior_iga(2.0, 2.0, SufficientStats.from_data(data.values, 0.0))


def test_conjugacy_oracle(conjugate_data, acceptance_report):
    t0 = time.perf_counter()
    trace = run_chain(conjugate_data, CONJ_PRIOR, McmcConfig(seed=1))
    mean, _ = estimate_theta(trace)
    elapsed = time.perf_counter() - t0
    a, b = _posterior(conjugate_data)
    rel = abs(mean / (b / (a - 1)) - 1)
    ok = rel < 0.05 and elapsed < 10
    acceptance_report("1 conjugacy oracle", ok,
                      f"posterior mean {mean:.5f} vs {b / (a - 1):.5f} (rel {rel:.2e}), {elapsed:.2f}s")
    assert ok


def test_evidence_oracle(acceptance_report):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    zs = []
    for i in range(20):
        alpha, beta, n = rng.uniform(1.5, 6), rng.uniform(0.3, 4), int(rng.integers(5, 60))
        x = math.sqrt(beta / (alpha - 1)) * rng.standard_normal(n)
        ev = evidence_mc(x, ModelSpec(IGa(alpha, beta)), 100_000, seed=i)
        exact = iga_log_evidence(alpha, beta, SufficientStats.from_data(x, 0.0))
        zs.append((ev.log_value - exact) / ev.std_error)
    elapsed = time.perf_counter() - t0
    worst = float(np.max(np.abs(zs)))
    ok = worst < 3 and elapsed < 60
    acceptance_report("2 evidence oracle", ok, f"max |z| {worst:.2f} over 20 draws, {elapsed:.2f}s")
    assert ok


def test_predictive_oracle(acceptance_report):
    rng = np.random.default_rng(32)
    worst = 0.0
    for _ in range(32):
        x, alpha, beta = rng.uniform(-4, 4), rng.uniform(0.6, 8), rng.uniform(0.2, 5)
        law = IGa(alpha, beta)
        f = lambda t: math.exp(-0.5 * math.log(2 * math.pi * t) - x * x / (2 * t) + law.log_pdf_scalar(t))
        quad = (integrate.quad(f, 0, 1, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
                + integrate.quad(f, 1, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)[0])
        worst = max(worst, abs(predictive_iga(x, ModelSpec(law)) - quad))
    cauchy = abs(predictive_iga(0.0, ModelSpec(IGa(0.5, 0.5))) - 1 / math.pi)
    ok = worst < 1e-6 and cauchy < 1e-9
    acceptance_report("3 predictive oracle", ok, f"max |t - quad| {worst:.1e}; Cauchy error {cauchy:.1e}")
    assert ok


def _compare_fraction(model, seed, out):
    returns, _ = gen_superstat(GeneratorConfig(model, 10_000, 100, seed))
    path = out / "returns.csv"
    out.mkdir()
    path.write_text(serialize_returns(returns))
    assert main(["compare", str(path), "--block", "100", "--out-dir", str(out)]) == 0
    return json.loads((out / "summary.json").read_text())


@pytest.mark.slow
def test_model_recovery(tmp_path, acceptance_report):
    t0 = time.perf_counter()
    iga = _compare_fraction(ModelSpec(IGa(3.0, 2.0)), 41, tmp_path / "iga")
    logn = _compare_fraction(ModelSpec(LogN(1.0)), 42, tmp_path / "logn")
    elapsed = time.perf_counter() - t0
    ok = (iga["fraction_m1"] >= 0.9 and logn["fraction_m1"] <= 0.1
          and iga["n_series"] == logn["n_series"] == 1000 and elapsed < 300)
    acceptance_report("4 model recovery", ok,
                      f"fraction_m1 {iga['fraction_m1']:.3f} on IGa data, {logn['fraction_m1']:.3f} "
                      f"on LogN data (1000 repetitions each, block 100), {elapsed:.0f}s")
    assert ok


def test_greedy_behaviour(conjugate_data, acceptance_report):
    a, b = _posterior(conjugate_data)
    mode = b / (a + 1)
    greedy = AcceptanceMode.GREEDY
    monotone, near = True, True
    worst = 0.0
    for seed in range(10):
        for theta0 in (None, 0.5, 4.5):
            flat = McmcConfig(iterations=200, burn_in=50, acceptance_mode=greedy, learning_rate=0.0,
                              initial_theta=theta0, seed=seed)
            nudged = McmcConfig(iterations=200, burn_in=50, acceptance_mode=greedy,
                                initial_theta=theta0, seed=seed)
            tr = run_chain(conjugate_data, CONJ_PRIOR, flat)
            monotone &= bool(np.all(np.diff(tr.log_posterior) >= 0))
            if theta0 != 0.5:
                for t in (tr, run_chain(conjugate_data, CONJ_PRIOR, nudged)):
                    err = abs(t.theta_current[49] / mode - 1)
                    worst = max(worst, err)
                    near &= err < 0.10
    ok = monotone and near
    acceptance_report("5 greedy mode", ok,
                      f"monotone (lr=0) {monotone}; worst rel error at iteration 50 {worst:.3f}")
    assert ok


def test_sampler_goodness_of_fit(conjugate_data, acceptance_report):
    a, b = _posterior(conjugate_data)
    cfg = McmcConfig(iterations=101_000, burn_in=1000, proposal_step=0.05, seed=0)
    kept = run_chain(conjugate_data, CONJ_PRIOR, cfg).theta_current[cfg.burn_in:]
    # thin to roughly independent draws so the KS null distribution applies
    thin = max(1, math.ceil(kept.size / effective_sample_size(kept)))
    res = stats.kstest(kept[::thin], stats.invgamma(a, scale=b).cdf)
    ok = kept.size == 100_000 and res.pvalue >= 0.01
    acceptance_report("6 sampler correctness", ok,
                      f"KS p={res.pvalue:.3f} on {kept.size} samples thinned by {thin}")
    assert ok


def test_diagnostics_calibration(acceptance_report):
    white_reject = rw_keep = 0
    inside = inside_95 = total = 0
    parseval = 0.0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        e = rng.standard_normal(2000)
        rw = np.cumsum(rng.standard_normal(2000))
        white_reject += adf_test(e).reject_at[0.10]
        rw_keep += not adf_test(rw).reject_at[0.10]
        r = acf(e, 50)
        lags = np.abs(r.acf[1:])
        inside += int(np.sum(lags < 3 / math.sqrt(e.size)))
        inside_95 += int(np.sum(lags < r.ci_halfwidth))
        total += lags.size
        d = e - e.mean()
        parseval = max(parseval, abs(periodogram(e).parseval_sum() / float(d @ d) - 1))
    cover = inside / total
    ok = white_reject >= 198 and rw_keep >= 180 and cover >= 0.99 and parseval < 1e-8
    acceptance_report("7 diagnostics calibration", ok,
                      f"ADF white rejects {white_reject}/200, random walk kept {rw_keep}/200; "
                      f"ACF 3/sqrt(n) band covers {cover:.4f} (1.96 band {inside_95 / total:.4f}); "
                      f"Parseval rel error {parseval:.1e}")
    assert ok


def test_long_memory(acceptance_report):
    model = ModelSpec(IGa(3.0, 2.0))
    long_above = short_above = 0
    for seed in range(50):
        for block in (500, 1):
            r, _ = gen_superstat(GeneratorConfig(model, 10_000, block, seed))
            a = acf(abs_returns(r), 1)
            above = a.acf[1] > a.ci_halfwidth
            if block == 500:
                long_above += above
            else:
                short_above += above
    # iid series cross a one-sided 2.5% band by chance; 4/50 is the binomial 1% bound
    ok = long_above == 50 and short_above <= 4
    acceptance_report("8 long memory", ok,
                      f"acf[1] above band: block 500 {long_above}/50, block 1 {short_above}/50")
    assert ok


def _digests(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())}


def test_cli_determinism(tmp_path, conjugate_data, acceptance_report):
    r, _ = gen_superstat(GeneratorConfig(ModelSpec(IGa(3.0, 2e-8)), 3 * 1440, 60, 5))
    prices = tmp_path / "prices.csv"
    prices.write_text(serialize_prices(gen_prices_from_returns(r, 100.0, 1577836800, 60)))
    series = tmp_path / "series.csv"
    series.write_text(serialize_returns(conjugate_data))
    commands = {
        "ingest": ["ingest", str(prices)],
        "diagnose": ["diagnose", str(series)],
        "fit": ["fit", str(series), "--iterations", "800", "--chains", "3"],
        "compare": ["compare", str(series), "--n-series", "8", "--n-draws", "500",
                    "--fit-draws", "200", "--block", "100"],
        "simulate": ["simulate", "--n", "5000", "--seed", "3"],
        "predict": ["predict", "--model", "logn", "--s", "0.8", "--grid-n", "21"],
    }
    bad = []
    for name, argv in commands.items():
        runs = []
        for i, threads in enumerate(("1", "1", "4")):
            out = tmp_path / f"{name}_{i}"
            assert main(argv + ["--seed", "11", "--threads", threads, "--out-dir", str(out)]) == 0
            runs.append(_digests(out))
        if not (runs[0] == runs[1] == runs[2]):
            bad.append(name)
    ok = not bad
    acceptance_report("9 determinism", ok,
                      f"{len(commands) - len(bad)}/{len(commands)} commands byte-identical across runs and threads")
    assert ok
