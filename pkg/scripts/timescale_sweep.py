"""Multi-timescale sweep on a synthetic year of minute prices.

For each bar size: theta estimates under both priors, Bayes-factor
preference for IGa over LogN, and acf[1] of |returns|. The layout follows
the real-data study; the numbers are synthetic.

    python3 scripts/timescale_sweep.py --reps 100
"""

import argparse

from superstat.densities import IGa, LogN, ModelSpec
from superstat.diagnostics import acf
from superstat.marketdata import Timescale, abs_returns, log_returns, resample
from superstat.mcmc import McmcConfig, estimate_theta, run_chain
from superstat.modelselect import bf_series, fit_hyperparameters, preference_summary
from superstat.synthetic import GeneratorConfig, gen_prices_from_returns, gen_superstat


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--draws", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=2020)
    args = ap.parse_args()

    gen = GeneratorConfig(ModelSpec(IGa(3.0, 2e-8)), 525_599, 1440, args.seed)
    returns, _ = gen_superstat(gen)
    prices = gen_prices_from_returns(returns, 3230.0, 1577836800, 60)

    print(f"{'scale':7s} {'n':>7s} {'theta_iga':>10s} {'theta_logn':>10s} "
          f"{'frac_iga':>8s} {'mean_bf':>10s} {'acf1_abs':>8s}")
    for ts in (Timescale.MINUTE, Timescale.HOUR, Timescale.FOUR_HOUR, Timescale.DAY):
        r = log_returns(resample(prices, ts))
        # work in units of the series' own scale so the priors are comparable
        x = r.values / r.values.std()
        thetas = []
        for model in (ModelSpec(IGa(2.0, 2.0)), ModelSpec(LogN(1.0))):
            trace = run_chain(x, model, McmcConfig(iterations=5000, seed=args.seed))
            thetas.append(estimate_theta(trace)[0])
        block = max(1, len(x) // 50)
        m1 = fit_hyperparameters(x, "iga", n_draws=args.draws, seed=args.seed, block_length=block).model
        m2 = fit_hyperparameters(x, "logn", n_draws=args.draws, seed=args.seed, block_length=block).model
        frac, mean_bf = preference_summary(bf_series(x, m1, m2, args.reps, args.draws, args.seed, block))
        a1 = acf(abs_returns(r), 1).acf[1]
        print(f"{ts.value:7s} {len(x):7d} {thetas[0]:10.4f} {thetas[1]:10.4f} "
              f"{frac:8.3f} {mean_bf:10.4g} {a1:8.3f}")


if __name__ == "__main__":
    main()
