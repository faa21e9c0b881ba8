"""Predictive (marginal) return densities p(x) = int N(x | mu, theta) g(theta) dtheta."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .densities import IGa, LogN, ModelSpec, ScaledInvChi2, LOG_2PI

DEFAULT_TOL = 1e-8
MAX_NODES = 200_000

# 20-point Gauss-Legendre rule on [-1, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class PredictiveCurve:
    grid: np.ndarray
    density: np.ndarray
    model: ModelSpec
    folded: bool = False

    def trapezoid(self) -> float:
        return float(np.trapezoid(self.density, self.grid))


def _as_iga(model: ModelSpec) -> IGa:
    law = model.law
    if isinstance(law, ScaledInvChi2):
        return law.as_iga()
    if not isinstance(law, IGa):
        raise TypeError(f"expected an inverse-Gamma model, got {law.name}")
    return law


def predictive_iga_log(x, model: ModelSpec):
    """Log of the Student-t predictive: 2*alpha dof, location mu, squared scale beta/alpha."""
    law = _as_iga(model)
    a, b = law.alpha, law.beta
    z = np.asarray(x, dtype=float) - model.mu
    out = (gammaln(a + 0.5) - gammaln(a) - 0.5 * (LOG_2PI + math.log(b))
           - (a + 0.5) * np.log1p(z * z / (2.0 * b)))
    return float(out) if np.ndim(out) == 0 else out


def predictive_iga(x, model: ModelSpec):
    return np.exp(predictive_iga_log(x, model))


def predictive_sd(model: ModelSpec) -> float:
    """Standard deviation of the predictive, i.e. sqrt(E[theta]); inf if undefined."""
    law = model.law
    if isinstance(law, LogN):
        return math.exp(0.25 * law.s * law.s)
    law = _as_iga(model)
    return math.sqrt(law.beta / (law.alpha - 1.0)) if law.alpha > 1 else math.inf


def _logn_integrand(u: np.ndarray, z: float, s: float) -> np.ndarray:
    # N(z | 0, e^u) * Normal(u | 0, s^2): the log-normal weight in u = log(theta)
    return np.exp(-0.5 * (u + z * z * np.exp(-u)) - u * u / (2 * s * s)) / (2 * math.pi * s)


def _gl(a: float, b: float, z: float, s: float) -> float:
    half = 0.5 * (b - a)
    u = 0.5 * (a + b) + half * _GL_X
    return half * float(np.dot(_GL_W, _logn_integrand(u, z, s)))


def predictive_logn(x: float, model: ModelSpec, tol: float = DEFAULT_TOL,
                    max_nodes: int = MAX_NODES) -> float:
    """Log-normal mixture predictive by adaptive Gauss-Legendre bisection in log(theta).

    A panel is accepted when its estimate and the sum over its two halves
    differ by less than its share of ``tol``.
    """
    law = model.law
    if not isinstance(law, LogN):
        raise TypeError(f"expected a log-normal model, got {law.name}")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    s = law.s
    z = float(x) - model.mu
    lo, hi = -8.0 * s, 8.0 * s
    total = 0.0
    nodes = 0
    stack = [(lo, hi, _gl(lo, hi, z, s))]
    nodes += _GL_X.size
    while stack:
        a, b, whole = stack.pop()
        m = 0.5 * (a + b)
        left, right = _gl(a, m, z, s), _gl(m, b, z, s)
        nodes += 2 * _GL_X.size
        if abs(left + right - whole) < tol * (b - a) / (hi - lo):
            total += left + right
            continue
        if nodes > max_nodes:
            raise QuadratureError(
                f"log-normal predictive at x={x!r} did not reach tol={tol:g} "
                f"within {max_nodes} nodes")
        stack.append((m, b, right))
        stack.append((a, m, left))
    return total


def predictive_density(x, model: ModelSpec, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Signed-return predictive density at each point of ``x``."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(model.law, LogN):
        return np.array([predictive_logn(v, model, tol) for v in xs])
    return predictive_iga(xs, model)


def predictive_curve(model: ModelSpec, grid, tol: float = DEFAULT_TOL) -> PredictiveCurve:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return PredictiveCurve(grid, predictive_density(grid, model, tol), model)


def predictive_abs_curve(model: ModelSpec, grid, tol: float = DEFAULT_TOL) -> PredictiveCurve:
    """Density of |X| on a nonnegative grid: f(y) + f(-y)."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0):
        raise ValueError("absolute-return grid must be nonnegative")
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    dens = predictive_density(grid, model, tol)
    if model.mu == 0.0:
        dens = 2.0 * dens
    else:
        dens = dens + predictive_density(-grid, model, tol)
    return PredictiveCurve(grid, dens, model, folded=True)
