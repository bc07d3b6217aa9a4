"""Experiment configuration, Monte Carlo sweeps and single-instance solves.

A sweep draws one channel realization from ``seed`` and evaluates every
strategy at every grid point.  Grid points are independent, so they may
be dispatched to worker processes; rows are always written in grid order
and each point's randomization seed depends only on (seed, index), which
makes the CSV identical for any number of workers.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .af import AfAlgorithmConfig, af_achievable, optimize_af
from .channel import ChannelState, PowerConstraint, derive_af, sample_channel
from .df import (DfChannel, DfConfig, Statistical, WorstCase, optimize_df_perfect,
                 optimize_df_statistical, optimize_df_worstcase, verify_outage)
from .errors import ConfigError, RelayBeamError
from .solution import BeamSolution

log = logging.getLogger(__name__)

FAIL = "FAIL"
MODES = ("af_sweep", "df_robust_sweep", "solve_one")
SCHEMES = ("af_optimal", "af_achievable", "df_perfect", "df_worstcase", "df_statistical")

AF_COLUMNS = ["pt_over_ps", "af_optimal_total", "af_optimal_individual",
              "af_achievable_total", "af_achievable_individual", "rank_gaps", "grid_steps"]

# per-mode defaults; AF follows the relay-network setup with ten relays,
# DF the five-relay robust setup (sigma_g is unused there)
_DEFAULTS = {
    "af_sweep": dict(M=10, sigma_g=10.0, sigma_h=2.0, sigma_z=2.0,
                     grid=np.round(np.logspace(-1, 2, 20), 6).tolist()),
    "df_robust_sweep": dict(M=5, sigma_g=1.0, sigma_h=1.0, sigma_z=2.0,
                            grid=np.linspace(5.0, 100.0, 20).tolist()),
    "solve_one": dict(M=1, sigma_g=1.0, sigma_h=1.0, sigma_z=1.0, grid=[1.0]),
}


@dataclass
class ExperimentConfig:
    """Everything a run needs; built from a JSON document by :meth:`from_dict`.

    ``grid`` holds PT/Ps for AF sweeps (Ps stays fixed) and PT for DF
    sweeps.  Error variances follow ``var_h / PT`` and ``var_z / PT``.
    """

    mode: str
    M: int = 10
    sigma_g: float = 10.0
    sigma_h: float = 2.0
    sigma_z: float = 2.0
    Ps: float = 1.0
    Nm: float = 1.0
    N0: float = 1.0
    grid: list = field(default_factory=list)
    eps: list = field(default_factory=lambda: [0.7, 0.8, 0.9, 0.95])
    var_rule: dict = field(default_factory=lambda: {"var_h": 0.1, "var_z": 0.2})
    seed: int = 0
    af: dict = field(default_factory=dict)
    df: dict = field(default_factory=dict)
    out: Optional[str] = None
    jobs: int = 1
    plot: bool = True
    # solve_one only
    scheme: str = "af_optimal"
    constraint: dict = field(default_factory=lambda: {"total": 1.0})
    robust: dict = field(default_factory=dict)
    channel: Optional[str] = None

    @classmethod
    def from_dict(cls, doc: dict, **overrides) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        doc = {**doc, **{k: v for k, v in overrides.items() if v is not None}}
        mode = doc.get("mode")
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {mode!r}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        merged = {**_DEFAULTS[mode], **doc}
        try:
            cfg = cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        return cls.from_dict(read_json(path), **overrides)

    def validate(self) -> None:
        def positive(name, val):
            if not isinstance(val, (int, float)) or not math.isfinite(val) or val <= 0:
                raise ConfigError(f"{name} must be a positive number, got {val!r}")

        if not isinstance(self.M, int) or self.M < 1:
            raise ConfigError(f"M must be a positive integer, got {self.M!r}")
        for name in ("sigma_g", "sigma_h", "sigma_z", "Ps", "Nm", "N0"):
            positive(name, getattr(self, name))
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError(f"jobs must be a positive integer, got {self.jobs!r}")
        if not isinstance(self.grid, list) or not self.grid:
            raise ConfigError("grid must be a nonempty list")
        for x in self.grid:
            positive("grid entry", x)
        if self.mode == "df_robust_sweep":
            if not isinstance(self.eps, list) or not self.eps:
                raise ConfigError("eps must be a nonempty list")
            for e in self.eps:
                if not isinstance(e, (int, float)) or not 0.5 < e < 1.0:
                    raise ConfigError(f"eps entries must lie in (0.5, 1), got {e!r}")
        if set(self.var_rule) != {"var_h", "var_z"}:
            raise ConfigError("var_rule needs exactly the keys var_h and var_z")
        for name, v in self.var_rule.items():
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ConfigError(f"var_rule.{name} must be nonnegative, got {v!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {', '.join(SCHEMES)}; got {self.scheme!r}")
        self.af_config()
        self.df_config()
        self.power_constraint()

    def af_config(self) -> AfAlgorithmConfig:
        try:
            return AfAlgorithmConfig(**self.af)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"af: {exc}") from None

    def df_config(self) -> DfConfig:
        try:
            return DfConfig(**self.df)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"df: {exc}") from None

    def power_constraint(self) -> PowerConstraint:
        c = self.constraint
        if not isinstance(c, dict) or not set(c) <= {"total", "per_relay"}:
            raise ConfigError("constraint must be an object with keys total and/or per_relay")
        try:
            return PowerConstraint(total=c.get("total"), per_relay=c.get("per_relay"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"constraint: {exc}") from None

    def variances(self, PT: float):
        return self.var_rule["var_h"] / PT, self.var_rule["var_z"] / PT

    def to_dict(self) -> dict:
        return asdict(self)


def read_json(path) -> dict:
    """Parse a JSON file; errors carry the file name, line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_channel(path) -> ChannelState:
    doc = read_json(path)
    try:
        return ChannelState.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def point_seed(seed: int, index: int) -> int:
    """Seed for grid point ``index``; independent of worker scheduling."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def fmt(x: float) -> str:
    return f"{x:.9f}"


def fmt_grid(x: float) -> str:
    return repr(float(x))


def _rate_or_fail(fn):
    """(rate, solution) or (None, None) when the solver gives up."""
    try:
        sol = fn()
    except (RelayBeamError, ArithmeticError) as exc:
        log.warning("solver failure: %s", exc)
        return None, None
    return max(sol.secrecy_rate, 0.0), sol


# --- AF sweep -------------------------------------------------------------

def af_channel(cfg: ExperimentConfig) -> ChannelState:
    return sample_channel(cfg.seed, cfg.M, cfg.sigma_g, cfg.sigma_h, cfg.sigma_z,
                          Ps=cfg.Ps, Nm=cfg.Nm, N0=cfg.N0)


def _af_point(args):
    cfg, index = args
    ratio = cfg.grid[index]
    ch = af_channel(cfg)
    d = derive_af(ch)
    PT = ratio * cfg.Ps
    algo = replace(cfg.af_config(), seed=point_seed(cfg.seed, index))
    total = PowerConstraint.total_power(PT)
    indiv = PowerConstraint.equal_split(PT, cfg.M)
    results = [
        _rate_or_fail(lambda: optimize_af(d, ch, total, algo)),
        _rate_or_fail(lambda: optimize_af(d, ch, indiv, algo)),
        _rate_or_fail(lambda: af_achievable(d, ch, total, algo)),
        _rate_or_fail(lambda: af_achievable(d, ch, indiv, algo)),
    ]
    sols = [s for _, s in results if s is not None]
    steps = sum(s.diagnostics.get("grid_steps", 0) for s in sols)
    row = [fmt_grid(ratio)] + [FAIL if r is None else fmt(r) for r, _ in results]
    row += [str(sum(s.rank_gap for s in sols)), str(steps)]
    return row


def df_columns(eps) -> list:
    return ["pt"] + [f"df_statistical_eps{e:g}" for e in eps] + ["rank_gaps"]


def df_estimates(cfg: ExperimentConfig) -> DfChannel:
    ch = sample_channel(cfg.seed, cfg.M, cfg.sigma_g, cfg.sigma_h, cfg.sigma_z, N0=cfg.N0)
    return DfChannel.from_state(ch)


def _df_point(args):
    cfg, index = args
    PT = cfg.grid[index]
    est = df_estimates(cfg)
    var_h, var_z = cfg.variances(PT)
    algo = replace(cfg.df_config(), seed=point_seed(cfg.seed, index))
    constraint = PowerConstraint.equal_split(PT, cfg.M)
    results = [
        _rate_or_fail(lambda e=e: optimize_df_statistical(
            est.H(), est.Z(), Statistical(var_h, var_z, e), constraint, cfg.N0, algo))
        for e in cfg.eps
    ]
    sols = [s for _, s in results if s is not None]
    row = [fmt_grid(PT)] + [FAIL if r is None else fmt(r) for r, _ in results]
    row.append(str(sum(s.rank_gap for s in sols)))
    return row


def _run_points(worker, cfg: ExperimentConfig) -> list:
    tasks = [(cfg, i) for i in range(len(cfg.grid))]
    if cfg.jobs == 1 or len(tasks) == 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        # map preserves grid order regardless of completion order
        return list(pool.map(worker, tasks))


def _to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run_af_sweep(cfg: ExperimentConfig) -> str:
    """CSV of the four AF strategies against PT/Ps for one realization."""
    if cfg.mode != "af_sweep":
        raise ConfigError(f"run_af_sweep needs mode af_sweep, got {cfg.mode}")
    return _to_csv(AF_COLUMNS, _run_points(_af_point, cfg))


def run_df_robust_sweep(cfg: ExperimentConfig) -> str:
    """CSV of the statistically robust DF rate against PT, one column per eps."""
    if cfg.mode != "df_robust_sweep":
        raise ConfigError(f"run_df_robust_sweep needs mode df_robust_sweep, got {cfg.mode}")
    if not cfg.eps:
        raise ConfigError("eps must be a nonempty list")
    return _to_csv(df_columns(cfg.eps), _run_points(_df_point, cfg))


def read_sweep(text: str):
    """(header, x values, {column: values}) with FAIL cells as nan."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    cols = {name: np.array([math.nan if r[k] == FAIL else float(r[k]) for r in body])
            for k, name in enumerate(header)}
    return header, cols[header[0]], cols


# --- single instance ------------------------------------------------------

def solve_one(cfg: ExperimentConfig, ch: ChannelState) -> BeamSolution:
    """Run ``cfg.scheme`` on a fixed realization.

    DF schemes use the second hop of ``ch``; for the robust variants h and
    z are the channel estimates and ``cfg.robust`` carries either
    ``eps_h``/``eps_z`` or ``var_h``/``var_z``/``eps``.
    """
    constraint = cfg.power_constraint()
    try:
        constraint.check_dim(ch.M)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.scheme.startswith("af"):
        fn = optimize_af if cfg.scheme == "af_optimal" else af_achievable
        return fn(derive_af(ch), ch, constraint, cfg.af_config())
    est = DfChannel.from_state(ch)
    algo = cfg.df_config()
    if cfg.scheme == "df_perfect":
        return optimize_df_perfect(est, constraint, algo)
    try:
        if cfg.scheme == "df_worstcase":
            params = WorstCase(**cfg.robust)
            return optimize_df_worstcase(est.H(), est.Z(), params, constraint, ch.N0, algo)
        params = Statistical(**cfg.robust)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"robust: {exc}") from None
    return optimize_df_statistical(est.H(), est.Z(), params, constraint, ch.N0, algo)


def validate_outage(cfg: ExperimentConfig, ch: ChannelState, trials: int = 100_000,
                    solution: Optional[dict] = None) -> dict:
    """Empirical non-outage of a statistically robust DF design.

    The design is read from ``solution`` (a BeamSolution document) when
    given, otherwise solved afresh.
    """
    try:
        params = Statistical(**cfg.robust)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"robust: {exc}") from None
    est = DfChannel.from_state(ch)
    if solution is None:
        sol = optimize_df_statistical(est.H(), est.Z(), params, cfg.power_constraint(),
                                      ch.N0, cfg.df_config())
        w, t = sol.w, sol.t1
    else:
        try:
            w = np.asarray(solution["w_re"], float) + 1j * np.asarray(solution["w_im"], float)
            t = float(solution["t1"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"solution document: {exc}") from None
        if w.size != ch.M:
            raise ConfigError(f"solution has {w.size} weights, channel has {ch.M} relays")
    rate = verify_outage(w, est.h, est.z, params, t, trials=trials, seed=cfg.seed, N0=ch.N0)
    return {
        "eps": params.eps,
        "t": t,
        "secrecy_rate": math.log2(t),
        "trials": trials,
        "non_outage": rate,
        "lower_bound": params.eps - 3.0 * math.sqrt(params.eps * (1 - params.eps) / trials),
    }
