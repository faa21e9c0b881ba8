"""Bayesian superstatistics for financial log-returns."""

__version__ = "0.1.0"

from .densities import (
    IGa,
    LogN,
    ModelSpec,
    ScaledInvChi2,
    SufficientStats,
    conjugate_posterior_iga,
    conjugate_posterior_sichi2,
    gaussian_log_likelihood,
    iga_log_evidence,
    igamma_log_pdf,
    lognormal_log_pdf,
    scaled_inv_chi2_log_pdf,
)
from .marketdata import (
    PriceSeries,
    ReturnKind,
    ReturnSeries,
    Timescale,
    abs_returns,
    log_returns,
    parse_prices,
    resample,
)
from .mcmc import AcceptanceMode, McmcConfig, estimate_theta, run_chain
from .modelselect import bayes_factor, bf_series, evidence_mc, preference_summary
from .synthetic import GeneratorConfig, gen_prices_from_returns, gen_superstat
