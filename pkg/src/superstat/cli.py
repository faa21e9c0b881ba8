"""Batch command line: ingest, diagnose, fit, compare, simulate, predict.

Every output file starts with a ``# manifest {...}`` line (JSON outputs carry
the same record under a ``manifest`` key instead, so they stay valid JSON).
Settings resolve as built-in defaults < ``--config`` JSON < explicit flags.

Exit codes: 0 success, 1 domain error, 2 I/O or parse error, 3 invalid flags.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .densities import IGa, LogN, ModelSpec, SufficientStats, conjugate_posterior_iga
from .diagnostics import acf, adf_test, histogram, periodogram
from .marketdata import (
    BAR_TIMESCALES,
    ParseError,
    ReturnKind,
    Timescale,
    abs_returns,
    log_returns,
    parse_prices,
    parse_returns,
    parse_timestamp,
    resample,
    serialize_prices,
    serialize_returns,
)
from .mcmc import AcceptanceMode, McmcConfig, estimate_theta, run_chains
from .modelselect import (
    bf_series,
    fit_hyperparameters,
    posterior_model_probability,
    preference_summary,
)
from .predictive import predictive_abs_curve, predictive_curve, predictive_sd
from .synthetic import GeneratorConfig, fixture_manifest, gen_prices_from_returns, gen_superstat

EXIT_DOMAIN, EXIT_IO, EXIT_FLAGS = 1, 2, 3

# settings that may differ between runs without changing any result
_NON_SEMANTIC = {"threads", "out_dir", "config"}

DEFAULTS = {
    "common": {"seed": 0, "threads": 1, "out_dir": "."},
    "ingest": {"timescale": "all"},
    "diagnose": {"max_lag": 50, "n_bins": 50, "adf_max_lags": None, "abs": False},
    "fit": {"model": "iga", "alpha": 2.0, "beta": 2.0, "s": 1.0, "mu": 0.0,
            "iterations": 5000, "step": None, "learning_rate": None, "momentum": 0.9,
            "mode": "standard", "burn_in": None, "initial_theta": None, "chains": 1},
    "compare": {"n_series": 1000, "n_draws": 10_000, "block": None, "alpha": None,
                "beta": None, "s": None, "mu": 0.0, "fit_draws": 4000, "abs": False},
    "simulate": {"model": "iga", "alpha": 3.0, "beta": 2.0, "s": 1.0, "mu": 0.0,
                 "n": 100_000, "block": 100, "p0": 100.0,
                 "start": "2020-01-01T00:00:00Z", "step": 60, "withhold_theta": False},
    "predict": {"model": "iga", "alpha": 2.0, "beta": 2.0, "s": 1.0, "mu": 0.0,
                "grid_min": None, "grid_max": None, "grid_n": 201, "abs": False,
                "tol": 1e-8},
}


class FlagError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--config")


def _model_flags(p, with_model=True):
    if with_model:
        p.add_argument("--model", choices=["iga", "logn"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--mu", type=float)


def build_parser() -> argparse.ArgumentParser:
    sd = argparse.SUPPRESS
    parser = _Parser(prog="superstat", description=__doc__.splitlines()[0],
                     argument_default=sd)
    _common(parser)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="prices CSV -> signed and absolute return CSVs",
                       argument_default=sd)
    _common(p)
    p.add_argument("input")
    p.add_argument("--timescale", choices=["minute", "hour", "4hour", "day", "all"])

    p = sub.add_parser("diagnose", help="ACF, periodogram, ADF and histogram of a series",
                       argument_default=sd)
    _common(p)
    p.add_argument("series")
    p.add_argument("--max-lag", dest="max_lag", type=int)
    p.add_argument("--n-bins", dest="n_bins", type=int)
    p.add_argument("--adf-max-lags", dest="adf_max_lags", type=int)
    p.add_argument("--abs", action="store_true")

    p = sub.add_parser("fit", help="MCMC estimate of theta", argument_default=sd)
    _common(p)
    p.add_argument("series")
    _model_flags(p)
    p.add_argument("--iterations", type=int)
    p.add_argument("--step", type=float)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--mode", choices=["standard", "greedy"])
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--initial-theta", dest="initial_theta", type=float)
    p.add_argument("--chains", type=int)

    p = sub.add_parser("compare", help="Bayes-factor series, IGa (m1) vs LogN (m2)",
                       argument_default=sd)
    _common(p)
    p.add_argument("series")
    _model_flags(p, with_model=False)
    p.add_argument("--n-series", dest="n_series", type=int)
    p.add_argument("--n-draws", dest="n_draws", type=int)
    p.add_argument("--block", type=int)
    p.add_argument("--fit-draws", dest="fit_draws", type=int)
    p.add_argument("--abs", action="store_true")

    p = sub.add_parser("simulate", help="generate a superstatistical fixture",
                       argument_default=sd)
    _common(p)
    _model_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--block", type=int)
    p.add_argument("--p0", type=float)
    p.add_argument("--start")
    p.add_argument("--step", type=int)
    p.add_argument("--withhold-theta", dest="withhold_theta", action="store_true")

    p = sub.add_parser("predict", help="predictive density curve", argument_default=sd)
    _common(p)
    _model_flags(p)
    p.add_argument("--grid-min", dest="grid_min", type=float)
    p.add_argument("--grid-max", dest="grid_max", type=float)
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--abs", action="store_true")
    p.add_argument("--tol", type=float)
    return parser


# --- config and provenance --------------------------------------------------

def resolve(args: argparse.Namespace) -> dict:
    given = vars(args)
    command = given["command"]
    cfg = {**DEFAULTS["common"], **DEFAULTS[command]}
    if "config" in given:
        try:
            loaded = json.loads(Path(given["config"]).read_text())
        except OSError as exc:
            raise exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"config {given['config']}: {exc.msg}", exc.lineno) from None
        if not isinstance(loaded, dict):
            raise FlagError("config JSON must be an object")
        for k, v in loaded.items():
            k = k.replace("-", "_")
            if k not in cfg:
                raise FlagError(f"unknown config key {k!r} for {command}")
            cfg[k] = v
    cfg.update({k: v for k, v in given.items() if k not in ("command", "config")})
    cfg["command"] = command
    if not 0 <= int(cfg["seed"]) < 2**64:
        raise FlagError("--seed must be a 64-bit unsigned integer")
    if int(cfg["threads"]) < 1:
        raise FlagError("--threads must be >= 1")
    return cfg


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Run:
    """Output writer that stamps every file with the run manifest."""

    def __init__(self, cfg: dict, inputs: list[Path]):
        self.cfg = cfg
        self.out = Path(cfg["out_dir"])
        semantic = {k: v for k, v in cfg.items() if k not in _NON_SEMANTIC}
        h = hashlib.sha256()
        for path in inputs:
            h.update(path.read_bytes())
        self.manifest = {
            "command": cfg["command"],
            "config_digest": _digest(json.dumps(semantic, sort_keys=True).encode()),
            "seed": int(cfg["seed"]),
            "input_digest": h.hexdigest(),
            "tool_version": __version__,
        }
        self.semantic = semantic
        self.header = "# manifest " + json.dumps(self.manifest, sort_keys=True) + "\n"
        self.out.mkdir(parents=True, exist_ok=True)
        self.write_json("config.json", {"config": semantic})

    def write_csv(self, name: str, body: str) -> Path:
        path = self.out / name
        path.write_text(self.header + body, newline="\n")
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.out / name
        doc = {"manifest": self.manifest, **payload}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n",
                        newline="\n")
        return path


def _jsonable(o):
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _read(path: str) -> tuple[Path, bytes]:
    p = Path(path)
    try:
        return p, p.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None


def _model(cfg: dict, law: str | None = None) -> ModelSpec:
    law = law or cfg["model"]
    try:
        if law == "iga":
            return ModelSpec(IGa(float(cfg["alpha"]), float(cfg["beta"])), float(cfg["mu"]))
        if law == "logn":
            return ModelSpec(LogN(float(cfg["s"])), float(cfg["mu"]))
    except (TypeError, ValueError) as exc:
        raise FlagError(f"invalid {law} hyperparameters: {exc}") from None
    raise FlagError(f"unknown model {law!r}")


def _series(path: str, absolute: bool = False):
    p, raw = _read(path)
    r = parse_returns(raw)
    if absolute and r.kind is ReturnKind.SIGNED:
        r = abs_returns(r)
    return p, r


# --- commands ---------------------------------------------------------------

def cmd_ingest(cfg: dict) -> int:
    path, raw = _read(cfg["input"])
    try:
        prices = parse_prices(raw)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None
    run = Run(cfg, [path])
    choice = cfg["timescale"]
    scales = BAR_TIMESCALES if choice == "all" else (Timescale(choice),)
    for ts in scales:
        bars = resample(prices, ts)
        r = log_returns(bars)
        run.write_csv(f"returns_{ts.value}_signed.csv", serialize_returns(r))
        run.write_csv(f"returns_{ts.value}_abs.csv", serialize_returns(abs_returns(r)))
        print(f"{ts.value}: {len(bars)} bars, {len(r)} returns")
    return 0


def cmd_diagnose(cfg: dict) -> int:
    path, series = _series(cfg["series"], bool(cfg["abs"]))
    run = Run(cfg, [path])
    a = acf(series, int(cfg["max_lag"]))
    pg = periodogram(series)
    adf = adf_test(series, cfg["adf_max_lags"])
    h = histogram(series, int(cfg["n_bins"]))
    run.write_csv("acf.csv", a.to_csv())
    run.write_csv("periodogram.csv", pg.to_csv())
    run.write_json("adf.json", adf.to_dict())
    run.write_csv("histogram.csv", h.to_csv())
    x = series.values
    run.write_json("summary.json", {
        "n": int(x.size), "mean": float(x.mean()), "std": float(x.std()),
        "kind": series.kind.value, "acf1": float(a.acf[1]), "ci_halfwidth": a.ci_halfwidth,
        "adf": {**adf.to_dict(), "nobs": adf.nobs,
                "critical_values": {str(k): v for k, v in adf.critical_values.items()}},
        "periodogram_peak_frequency": float(pg.frequencies[1:][np.argmax(pg.power[1:])]),
    })
    print(f"acf[1]={a.acf[1]:.4f} (band +/-{a.ci_halfwidth:.4f}); "
          f"ADF={adf.statistic:.3f} reject_10={adf.reject_at[0.10]}")
    return 0


def cmd_fit(cfg: dict) -> int:
    path, series = _series(cfg["series"])
    model = _model(cfg)
    try:
        config = McmcConfig(
            iterations=int(cfg["iterations"]), proposal_step=cfg["step"],
            learning_rate=cfg["learning_rate"], momentum=float(cfg["momentum"]),
            acceptance_mode=AcceptanceMode(cfg["mode"]),
            burn_in=int(cfg["iterations"]) // 5 if cfg["burn_in"] is None else int(cfg["burn_in"]),
            seed=int(cfg["seed"]), initial_theta=cfg["initial_theta"])
    except ValueError as exc:
        raise FlagError(str(exc)) from None
    if int(cfg["chains"]) < 1:
        raise FlagError("--chains must be >= 1")
    run = Run(cfg, [path])
    traces = run_chains(series, model, config, int(cfg["chains"]), int(cfg["threads"]))
    estimates = []
    for i, tr in enumerate(traces):
        run.write_csv("trace.csv" if len(traces) == 1 else f"trace_{i}.csv", tr.to_csv())
        theta_hat, se = estimate_theta(tr)
        estimates.append({"chain": i, "seed": tr.config.seed, "theta_hat": theta_hat,
                          "stderr": se, "acceptance_rate": float(tr.accepted.mean())})
    resolved = traces[0].config
    payload = {
        "theta_hat": estimates[0]["theta_hat"] if len(traces) == 1
        else float(np.mean([e["theta_hat"] for e in estimates])),
        "stderr": estimates[0]["stderr"] if len(traces) == 1
        else float(np.std([e["theta_hat"] for e in estimates], ddof=1) / math.sqrt(len(traces))),
        "mode": cfg["mode"], "model": model.name, "hyperparams": model.to_dict(),
        "chains": estimates,
        "resolved": {"initial_theta": resolved.initial_theta,
                     "proposal_step": resolved.proposal_step,
                     "learning_rate": resolved.learning_rate},
    }
    if isinstance(model.law, IGa):
        stats = SufficientStats.from_data(series, model.mu)
        a, b = conjugate_posterior_iga(model.law.alpha, model.law.beta, stats)
        payload["conjugate"] = {"alpha_post": a, "beta_post": b, "posterior_mode": b / (a + 1),
                                "posterior_mean": b / (a - 1) if a > 1 else None}
    run.write_json("estimate.json", payload)
    print(f"theta_hat={payload['theta_hat']:.6g} stderr={payload['stderr']:.3g}")
    return 0


def cmd_compare(cfg: dict) -> int:
    path, series = _series(cfg["series"], bool(cfg["abs"]))
    for key in ("n_series", "n_draws", "fit_draws"):
        if int(cfg[key]) < 1:
            raise FlagError(f"--{key.replace('_', '-')} must be >= 1")
    block = cfg["block"]
    if block is not None and int(block) < 1:
        raise FlagError("--block must be >= 1")
    block = None if block is None else int(block)
    run = Run(cfg, [path])
    seed = int(cfg["seed"])
    fits = {}
    if cfg["alpha"] is not None and cfg["beta"] is not None:
        m1 = _model(cfg, "iga")
    else:
        fit = fit_hyperparameters(series, "iga", float(cfg["mu"]), int(cfg["fit_draws"]),
                                  seed, block)
        m1, fits["m1"] = fit.model, fit.to_dict()
    if cfg["s"] is not None:
        m2 = _model(cfg, "logn")
    else:
        fit = fit_hyperparameters(series, "logn", float(cfg["mu"]), int(cfg["fit_draws"]),
                                  seed, block)
        m2, fits["m2"] = fit.model, fit.to_dict()
    bfs = bf_series(series, m1, m2, int(cfg["n_series"]), int(cfg["n_draws"]), seed, block,
                    int(cfg["threads"]))
    frac, mean_bf = preference_summary(bfs)
    run.write_csv("bf.csv", bfs.to_csv())
    run.write_json("summary.json", {
        "fraction_m1": frac, "mean_bf": mean_bf,
        "posterior_prob_m1": posterior_model_probability(mean_bf),
        "median_log_bf": float(np.median(bfs.log_values)),
        "n_series": len(bfs), "n_draws": int(cfg["n_draws"]), "block_length": block,
        "m1": m1.to_dict(), "m2": m2.to_dict(), "seed": seed,
        "hyperparameter_fit": fits,
    })
    print(f"fraction_m1={frac:.3f} mean_bf={mean_bf:.6g}")
    return 0


def cmd_simulate(cfg: dict) -> int:
    model = _model(cfg)
    try:
        gen = GeneratorConfig(model, int(cfg["n"]), int(cfg["block"]), int(cfg["seed"]))
        start = parse_timestamp(str(cfg["start"]))
    except ValueError as exc:
        raise FlagError(str(exc)) from None
    run = Run(cfg, [])
    returns, theta = gen_superstat(gen)
    prices = gen_prices_from_returns(returns, float(cfg["p0"]), start, int(cfg["step"]))
    run.write_csv("prices.csv", serialize_prices(prices))
    run.write_csv("returns.csv", serialize_returns(log_returns(prices)))
    if not cfg["withhold_theta"]:
        rows = ["block,theta"] + [f"{i},{t!r}" for i, t in enumerate(theta.tolist())]
        run.write_csv("theta_path.csv", "\n".join(rows) + "\n")
    run.write_json("manifest.json", {"fixture": json.loads(
        fixture_manifest(gen, float(cfg["p0"]), str(cfg["start"]), int(cfg["step"])))})
    print(f"{gen.n_points} returns in {gen.n_blocks} blocks")
    return 0


def cmd_predict(cfg: dict) -> int:
    model = _model(cfg)
    absolute = bool(cfg["abs"])
    n = int(cfg["grid_n"])
    if n < 2:
        raise FlagError("--grid-n must be >= 2")
    sd = predictive_sd(model)
    if not math.isfinite(sd):
        law = model.law
        sd = math.sqrt(law.beta / law.alpha)
    lo = cfg["grid_min"]
    hi = cfg["grid_max"]
    lo = (0.0 if absolute else model.mu - 6 * sd) if lo is None else float(lo)
    hi = ((6 * sd) if absolute else model.mu + 6 * sd) if hi is None else float(hi)
    if not hi > lo:
        raise FlagError("--grid-max must exceed --grid-min")
    grid = np.linspace(lo, hi, n)
    run = Run(cfg, [])
    if absolute:
        curve = predictive_abs_curve(model, grid, float(cfg["tol"]))
    else:
        curve = predictive_curve(model, grid, float(cfg["tol"]))
    label = model.key()
    rows = ["x,density,model"] + [f"{x!r},{d!r},{label}"
                                  for x, d in zip(curve.grid.tolist(), curve.density.tolist())]
    run.write_csv("curve.csv", "\n".join(rows) + "\n")
    print(f"{n} points on [{lo:.6g}, {hi:.6g}]")
    return 0


COMMANDS = {"ingest": cmd_ingest, "diagnose": cmd_diagnose, "fit": cmd_fit,
            "compare": cmd_compare, "simulate": cmd_simulate, "predict": cmd_predict}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[cfg["command"]](cfg)
    except FlagError as exc:
        print(f"superstat: invalid flags: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except (OSError, ParseError) as exc:
        print(f"superstat: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"superstat: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
