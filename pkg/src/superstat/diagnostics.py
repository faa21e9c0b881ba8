"""Time-series diagnostics for return and volatility series.

Autocorrelation with white-noise bands, FFT power periodogram, augmented
Dickey-Fuller test and equal-width histograms. All functions are
deterministic in their input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

Z_95 = 1.959963984540054

# MacKinnon (2010) response surfaces for the constant-only ADF regression,
# one regressor: crit(T) = b0 + b1/T + b2/T^2 + b3/T^3.
_ADF_C_SURFACE = {
    0.01: (-3.43035, -6.5393, -16.786, -79.433),
    0.05: (-2.86154, -2.8903, -4.234, -40.040),
    0.10: (-2.56677, -1.5384, -2.809, 0.0),
}
ADF_LEVELS = (0.01, 0.05, 0.10)


def _values(series) -> np.ndarray:
    return np.asarray(getattr(series, "values", series), dtype=float)


# --- autocorrelation --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AcfResult:
    lags: np.ndarray
    acf: np.ndarray
    ci_halfwidth: float

    def to_csv(self) -> str:
        h = self.ci_halfwidth
        rows = ["lag,acf,ci_lo,ci_hi"]
        rows.extend(f"{k},{v!r},{-h!r},{h!r}" for k, v in zip(self.lags.tolist(), self.acf.tolist()))
        return "\n".join(rows) + "\n"


def acf(series, max_lag: int) -> AcfResult:
    """Biased (1/n) sample autocorrelation for lags 0..max_lag."""
    x = _values(series)
    n = x.size
    if not 1 <= max_lag < n:
        raise ValueError("need 1 <= max_lag < len(series)")
    d = x - x.mean()
    denom = float(np.dot(d, d))
    if denom == 0.0:
        raise ValueError("constant series has no autocorrelation")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = np.dot(d[:-k], d[k:]) / denom
    return AcfResult(np.arange(max_lag + 1), out, Z_95 / math.sqrt(n))


# --- periodogram ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PeriodogramResult:
    frequencies: np.ndarray
    power: np.ndarray
    n: int

    def to_csv(self) -> str:
        rows = ["frequency,power"]
        rows.extend(f"{f!r},{p!r}" for f, p in zip(self.frequencies.tolist(), self.power.tolist()))
        return "\n".join(rows) + "\n"

    def parseval_sum(self) -> float:
        """Power summed over the full two-sided spectrum."""
        w = np.full(self.power.size, 2.0)
        w[0] = 1.0
        if self.n % 2 == 0:
            w[-1] = 1.0
        return float(np.dot(w, self.power))


def periodogram(series) -> PeriodogramResult:
    """|DFT|^2 / n of the demeaned series at k/n cycles per sample, k = 0..n//2.

    Uses a mixed-radix FFT valid for any length, so no padding or truncation.
    """
    x = _values(series)
    n = x.size
    if n < 8:
        raise ValueError("periodogram needs at least 8 points")
    spec = scipy.fft.rfft(x - x.mean())
    power = (spec.real ** 2 + spec.imag ** 2) / n
    return PeriodogramResult(np.arange(power.size) / n, power, n)


# --- augmented Dickey-Fuller ------------------------------------------------

@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lags_used: int
    nobs: int
    critical_values: dict
    reject_at: dict

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "lags_used": self.lags_used,
                "reject_1": self.reject_at[0.01], "reject_5": self.reject_at[0.05],
                "reject_10": self.reject_at[0.10]}


def adf_critical_values(nobs: int) -> dict:
    return {lvl: b0 + b1 / nobs + b2 / nobs**2 + b3 / nobs**3
            for lvl, (b0, b1, b2, b3) in _ADF_C_SURFACE.items()}


def _adf_design(y: np.ndarray, lags: int, start: int):
    dy = np.diff(y)
    # rows t = start..len(dy)-1 regress dy[t] on 1, y[t], dy[t-1..t-lags]
    t = np.arange(start, dy.size)
    cols = [np.ones(t.size), y[t]]
    cols.extend(dy[t - i] for i in range(1, lags + 1))
    return np.column_stack(cols), dy[t]


def _ols(X: np.ndarray, z: np.ndarray):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise np.linalg.LinAlgError("singular ADF regression")
    beta, _, _, _ = np.linalg.lstsq(X, z, rcond=None)
    resid = z - X @ beta
    return beta, float(resid @ resid)


def adf_test(series, max_lags: int | None = None) -> AdfResult:
    """ADF regression with drift, no trend; lag order chosen by AIC.

    Candidate lag orders 0..max_lags are compared on a common sample; the
    chosen order is then refitted on all usable observations. The default
    ``max_lags`` is 12 * (n/100)^(1/4).
    """
    y = _values(series)
    n = y.size
    if n < 25:
        raise ValueError("ADF test needs at least 25 observations")
    if max_lags is None:
        max_lags = int(math.ceil(12.0 * (n / 100.0) ** 0.25))
    max_lags = max(0, min(max_lags, n // 2 - 3))
    if np.all(y == y[0]):
        raise np.linalg.LinAlgError("singular ADF regression: constant series")

    best_aic, best_lag = math.inf, 0
    for p in range(max_lags + 1):
        X, z = _adf_design(y, p, max_lags)
        _, ssr = _ols(X, z)
        m = z.size
        aic = m * math.log(ssr / m) + 2 * X.shape[1]
        if aic < best_aic:
            best_aic, best_lag = aic, p

    X, z = _adf_design(y, best_lag, best_lag)
    beta, ssr = _ols(X, z)
    m, k = X.shape
    sigma2 = ssr / (m - k)
    cov = sigma2 * np.linalg.inv(X.T @ X)
    stat = float(beta[1] / math.sqrt(cov[1, 1]))
    crit = adf_critical_values(m)
    return AdfResult(stat, best_lag, m, crit, {lvl: stat < c for lvl, c in crit.items()})


# --- histogram --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HistogramResult:
    bin_edges: np.ndarray
    counts: np.ndarray
    normalized_density: np.ndarray

    def to_csv(self) -> str:
        rows = ["bin_lo,bin_hi,count,density"]
        e = self.bin_edges.tolist()
        rows.extend(f"{e[i]!r},{e[i + 1]!r},{c},{d!r}"
                    for i, (c, d) in enumerate(zip(self.counts.tolist(),
                                                   self.normalized_density.tolist())))
        return "\n".join(rows) + "\n"


def histogram(series, n_bins: int) -> HistogramResult:
    """Equal-width bins over [min, max], last bin closed on the right.

    A constant series yields one bin of width ``eps`` centred on the value.
    """
    x = _values(series)
    if x.size == 0:
        raise ValueError("histogram of an empty series")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        eps = max(abs(lo), 1.0) * np.finfo(float).eps * 16
        edges = np.array([lo - eps / 2, lo + eps / 2])
        counts = np.array([x.size])
    else:
        counts, edges = np.histogram(x, bins=n_bins, range=(lo, hi))
    widths = np.diff(edges)
    dens = counts / (x.size * widths)
    return HistogramResult(edges, counts, dens)
