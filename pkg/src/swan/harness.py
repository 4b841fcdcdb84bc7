"""Monte Carlo scenarios, baselines and result files.

A :class:`ScenarioConfig` holds every simulation knob (defaults follow the
reference parameter table).  Each trial draws its own RNG stream from
``(seed, trial)``, so trials are independent of execution order and a run is
reproducible from its config alone.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigError, SwanError, ZFInfeasibleError
from .fc import cg_analog_step, initial_state, zf_then_wmmse
from .geometry import (FixedChannel, GeometryConfig, RadioConfig, SwanChannel,
                       _waveguide, channel_entries, sample_users, uplink_channel)
from .metrics import BeamformerState, EnergyModel, energy_efficiency, user_rates
from .pc import build_interleaved, pc_analog_step, pc_initial_state
from .pinching import SearchGrid, gauss_seidel, interval_grid, segment_grid

METHODS = ("swan_fc_wmmse", "swan_fc_zf", "swan_pc_wmmse", "mmimo_fc_wmmse",
           "conv_pass")

CSV_COLUMNS = ("trial", "seed", "method", "M", "N_RF", "K", "P_dBm",
               "sum_rate_bpshz", "ee_bpshz_per_w", "iterations", "wall_ms")

SUMMARY_COLUMNS = ("method", "sweep_key", "sweep_value", "M", "N_RF", "K", "P_dBm",
                   "n_ok", "n_failed", "mean_sum_rate", "median_sum_rate",
                   "std_sum_rate", "mean_ee", "median_ee", "std_ee")

ENV_PREFIX = "SWAN_"


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Simulation parameters; power levels are given in dBm."""

    f_c: float = 28e9
    n_eff: float = 1.4
    kappa: float = 0.08
    P_dBm: float = 10.0
    sigma2_dBm: float = -80.0
    D_x: float = 80.0
    D_y: float = 20.0
    H: float = 3.0
    K: int = 4
    N_RF: int = 25
    M: int = 50
    resolution: float = 0.01
    # None means half the carrier wavelength
    delta_min: Optional[float] = None
    tol: float = 1e-8
    max_outer: int = 50
    cg_max_iter: int = 200
    gs_max_pass: int = 50
    method: str = "swan_fc_wmmse"
    trials: int = 1000
    seed: int = 0
    sweep_key: Optional[str] = None
    sweep_values: Optional[tuple] = None
    P_PA: float = 0.1
    P_PS: float = 0.01
    P_RF: float = 0.1
    # wall-clock times make output files non-reproducible, so they are opt-in
    timing: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        for name in ("K", "N_RF", "M"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.trials < 0:
            raise ConfigError("trials must be nonnegative")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.resolution <= 0 or self.tol <= 0:
            raise ConfigError("resolution and tol must be positive")
        if self.sweep_key is not None:
            _check_numeric_key(self.sweep_key)
            if not self.sweep_values:
                raise ConfigError("sweep_key given without sweep_values")
        try:
            self.radio()
            self.geometry()
            self.energy()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def P(self) -> float:
        return dbm_to_watts(self.P_dBm)

    @property
    def sigma2(self) -> float:
        return dbm_to_watts(self.sigma2_dBm)

    def radio(self) -> RadioConfig:
        return RadioConfig(self.f_c, self.n_eff, self.kappa, self.P, self.sigma2)

    def geometry(self, M: Optional[int] = None) -> GeometryConfig:
        dm = self.delta_min
        if dm is None:
            dm = RadioConfig(f_c=self.f_c).lambda_c / 2
        return GeometryConfig(self.D_x, self.D_y, self.H, M or self.M, dm)

    def energy(self) -> EnergyModel:
        return EnergyModel(self.P_PA, self.P_PS, self.P_RF)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **{k: _coerce(k, v) for k, v in changes.items()})


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_INT_FIELDS = {"K", "N_RF", "M", "max_outer", "cg_max_iter", "gs_max_pass",
               "trials", "seed"}
_FLOAT_FIELDS = {"f_c", "n_eff", "kappa", "P_dBm", "sigma2_dBm", "D_x", "D_y", "H",
                 "resolution", "delta_min", "tol", "P_PA", "P_PS", "P_RF"}


def _check_numeric_key(key: str) -> None:
    if key not in _INT_FIELDS | _FLOAT_FIELDS or key in ("trials", "seed"):
        raise ConfigError(f"sweep key {key!r} is not a numeric scenario field")


def _coerce(key: str, value):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if value is None:
            return None
        if key in _INT_FIELDS:
            if isinstance(value, str):
                value = value.strip()
                return int(value, 0) if value.lower().startswith("0x") else int(float(value))
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"{value} is not an integer")
            return int(value)
        if key in _FLOAT_FIELDS:
            return float(value)
        if key == "timing":
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if key == "sweep_values":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            return tuple(value)
        return value
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc


def config_from_mapping(data: Mapping, env: Optional[Mapping[str, str]] = None) -> ScenarioConfig:
    """Build a config from flat key/value pairs plus ``SWAN_*`` overrides.

    Environment keys match field names case-insensitively, e.g.
    ``SWAN_P_DBM=0`` sets ``P_dBm``.
    """
    values = {k: _coerce(k, v) for k, v in data.items()}
    if env:
        lower = {name.lower(): name for name in _FIELDS}
        for var, raw in env.items():
            if not var.startswith(ENV_PREFIX):
                continue
            key = lower.get(var[len(ENV_PREFIX):].lower())
            if key is None:
                raise ConfigError(f"environment variable {var} names no config key")
            values[key] = _coerce(key, raw)
    return ScenarioConfig(**values)


def load_config(path, env: Optional[Mapping[str, str]] = None) -> ScenarioConfig:
    """Read a flat TOML file.  ``env`` defaults to ``os.environ``."""
    import tomli

    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: config must be flat, found tables {nested}")
    return config_from_mapping(data, os.environ if env is None else env)


# -- trials --------------------------------------------------------------------

@dataclass
class TrialResult:
    trial: int
    seed: int
    method: str
    M: int
    N_RF: int
    K: int
    P_dBm: float
    sum_rate: float = math.nan
    user_rates: List[float] = field(default_factory=list)
    ee: float = math.nan
    iterations: int = 0
    wall_ms: Optional[float] = None
    converged: bool = False
    error: Optional[str] = None
    # per-stage details, e.g. the ZF stage that initialises FC WMMSE
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class MethodOutcome:
    """What a method returns before bookkeeping."""

    rates: np.ndarray
    iterations: int
    converged: bool
    N_RF: int
    N_PS: int
    extras: Dict[str, float] = field(default_factory=dict)


def _rates_of(state: BeamformerState, H: np.ndarray, radio: RadioConfig) -> np.ndarray:
    return user_rates(state, H, radio)


def _staged(channel, radio, state, x0, grid, cfg: ScenarioConfig, analog_step,
            wmmse: bool, callback=None):
    """ZF BCD then (optionally) WMMSE BCD; see :func:`swan.fc.zf_then_wmmse`.

    Returns the final BCD result, the total outer iteration count and the
    per-stage extras.
    """
    run = zf_then_wmmse(channel, radio, state, x0, grid, analog_step, wmmse=wmmse,
                        tol=cfg.tol, max_outer=cfg.max_outer,
                        cg_max_iter=cfg.cg_max_iter, gs_max_pass=cfg.gs_max_pass,
                        zf_callback=_tagged(callback, "zf"),
                        wmmse_callback=_tagged(callback, "wmmse"))
    extras = {}
    if run.zf is not None:
        extras.update(zf_sum_rate=run.zf.rate_trace[-1], zf_iterations=run.zf.iterations,
                      zf_converged=run.zf.converged)
    if run.wmmse is not None:
        extras.update(wmmse_iterations=run.wmmse.iterations,
                      wmmse_converged=run.wmmse.converged)
    return run.final, run.iterations, extras


def _tagged(callback, variant):
    if callback is None:
        return None
    return lambda stage, st, x, H: callback(variant, stage, st, x, H)


def _swan_fc(cfg: ScenarioConfig, users, rng, wmmse: bool, callback=None) -> MethodOutcome:
    geom, radio = cfg.geometry(), cfg.radio()
    state = initial_state(geom.M, cfg.N_RF, cfg.K, rng)
    channel = SwanChannel(geom, radio, users)
    res, its, extras = _staged(channel, radio, state, geom.midpoints(),
                               segment_grid(geom, cfg.resolution), cfg,
                               cg_analog_step(radio, cfg.tol, cfg.cg_max_iter),
                               wmmse, callback)
    H = channel.matrix(res.x)
    return MethodOutcome(_rates_of(res.state, H, radio), its, res.converged,
                         cfg.N_RF, geom.M * cfg.N_RF, extras)


def _swan_pc(cfg: ScenarioConfig, users, rng, callback=None) -> MethodOutcome:
    geom, radio = cfg.geometry(), cfg.radio()
    topo = build_interleaved(geom.M, cfg.N_RF)
    channel = SwanChannel(geom, radio, users)
    res, its, extras = _staged(channel, radio, pc_initial_state(topo, cfg.K, rng),
                               geom.midpoints(), segment_grid(geom, cfg.resolution),
                               cfg, pc_analog_step, True, callback)
    H = channel.matrix(res.x)
    return MethodOutcome(_rates_of(res.state, H, radio), its, res.converged,
                         cfg.N_RF, geom.M, extras)


def ula_positions(cfg: ScenarioConfig) -> np.ndarray:
    """Half-wavelength linear array along x centred in the service area."""
    lam = cfg.radio().lambda_c
    return cfg.D_x / 2 + (np.arange(cfg.M) - (cfg.M - 1) / 2) * lam / 2


def mmimo_channel(cfg: ScenarioConfig, users) -> np.ndarray:
    """Free-space channel of the fixed array (no waveguide term)."""
    return channel_entries(ula_positions(cfg), users, cfg.radio(), cfg.H)


def _mmimo(cfg: ScenarioConfig, users, rng, callback=None) -> MethodOutcome:
    radio = cfg.radio()
    channel = FixedChannel(mmimo_channel(cfg, users))
    state = initial_state(cfg.M, cfg.N_RF, cfg.K, rng)
    res, its, extras = _staged(channel, radio, state, ula_positions(cfg), None, cfg,
                               cg_analog_step(radio, cfg.tol, cfg.cg_max_iter),
                               True, callback)
    return MethodOutcome(_rates_of(res.state, channel.H, radio), its,
                         res.converged, cfg.N_RF, cfg.M * cfg.N_RF, extras)


class ConvPassObjective:
    """Sum rate of a single-feed waveguide with ``M`` PAs and one RF chain.

    The waveguide output is the superposition of every PA's signal, so user
    ``k`` sees the scalar channel ``sum_m h_mk exp(...)`` with the in-waveguide
    path measured from the PA to the feed at ``x = 0``.  Receiver noise is
    added once at the feed and no ``1/sqrt(M)`` normalisation is applied.  With
    one RF chain the per-user MMSE receiver is a scalar, giving
    ``SINR_k = P|h_k|^2 / (P sum_{i!=k} |h_i|^2 + sigma^2)``.
    """

    def __init__(self, cfg: ScenarioConfig, users, candidates: np.ndarray):
        self.radio = cfg.radio()
        self.users = users
        self.H = cfg.H
        self.candidates = candidates
        self.table = self.terms(candidates)

    def terms(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        fs = channel_entries(x, self.users, self.radio, self.H)
        return fs * _waveguide(x, self.radio)[..., None]

    def rates(self, h_eff: np.ndarray) -> np.ndarray:
        P, s2 = self.radio.P, self.radio.sigma2
        g = np.abs(h_eff) ** 2
        total = g.sum(axis=-1, keepdims=True)
        return np.log2(1 + P * g / (P * (total - g) + s2))

    def value(self, x) -> float:
        return float(self.rates(self.terms(x).sum(axis=0)).sum())

    def __call__(self, x, m, cands):
        T = self.terms(x)
        h = T.sum(axis=0) - T[m]
        tab = self.table if cands is self.candidates else self.terms(cands)
        return self.rates(h[None, :] + tab).sum(axis=1)


def _conv_pass(cfg: ScenarioConfig, users, rng, callback=None) -> MethodOutcome:
    cands = interval_grid(0.0, cfg.D_x, cfg.resolution)
    geom = cfg.geometry()
    grid = SearchGrid([cands] * cfg.M, geom.delta_min, cfg.resolution)
    obj = ConvPassObjective(cfg, users, cands)
    x0 = (np.arange(cfg.M) + 0.5) * cfg.D_x / cfg.M
    res = gauss_seidel(obj.value, grid, x0, "maximize", tol=cfg.tol,
                       max_pass=cfg.gs_max_pass, batch=obj)
    rates = obj.rates(obj.terms(res.x).sum(axis=0))
    converged = res.passes < cfg.gs_max_pass
    return MethodOutcome(rates, res.passes, converged, 1, 0)


def run_method(cfg: ScenarioConfig, users, rng: np.random.Generator,
               callback=None) -> MethodOutcome:
    """Dispatch on ``cfg.method``.

    ``callback(variant, stage, state, x, H)`` sees every BCD sub-step.
    """
    if cfg.method == "swan_fc_wmmse":
        return _swan_fc(cfg, users, rng, True, callback)
    if cfg.method == "swan_fc_zf":
        return _swan_fc(cfg, users, rng, False, callback)
    if cfg.method == "swan_pc_wmmse":
        return _swan_pc(cfg, users, rng, callback)
    if cfg.method == "mmimo_fc_wmmse":
        return _mmimo(cfg, users, rng, callback)
    return _conv_pass(cfg, users, rng, callback)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def run_trial(cfg: ScenarioConfig, trial: int, callback=None) -> TrialResult:
    """One Monte Carlo draw; solver errors are captured in ``error``."""
    rng = trial_rng(cfg.seed, trial)
    res = TrialResult(trial, cfg.seed, cfg.method, cfg.M, cfg.N_RF, cfg.K, cfg.P_dBm)
    t0 = time.perf_counter()
    try:
        users = sample_users(cfg.geometry(), cfg.K, rng)
        out = run_method(cfg, users, rng, callback)
    except (SwanError, np.linalg.LinAlgError) as exc:
        res.error = f"{type(exc).__name__}: {exc}"
        return res
    if cfg.timing:
        res.wall_ms = (time.perf_counter() - t0) * 1e3
    res.user_rates = [float(r) for r in out.rates]
    res.sum_rate = float(np.sum(out.rates))
    res.iterations = int(out.iterations)
    res.converged = bool(out.converged)
    res.extras = dict(out.extras)
    res.ee = energy_efficiency(res.sum_rate, cfg.radio(), cfg.energy(),
                               out.N_RF, cfg.M, out.N_PS)
    return res


@dataclass
class ScenarioRun:
    config: ScenarioConfig
    results: List[TrialResult]
    summary: Dict[str, float]


def summarize(results: Sequence[TrialResult]) -> Dict[str, float]:
    ok = [r for r in results if r.ok]
    rates = np.array([r.sum_rate for r in ok])
    ees = np.array([r.ee for r in ok])

    def stats(a):
        if not len(a):
            return math.nan, math.nan, math.nan
        return float(np.mean(a)), float(np.median(a)), float(np.std(a))

    mr, medr, sr = stats(rates)
    me, mede, se = stats(ees)
    return {"n_ok": len(ok), "n_failed": len(results) - len(ok),
            "mean_sum_rate": mr, "median_sum_rate": medr, "std_sum_rate": sr,
            "mean_ee": me, "median_ee": mede, "std_ee": se}


def run_scenario(cfg: ScenarioConfig, n_jobs: int = 1) -> ScenarioRun:
    """Run ``cfg.trials`` independent trials, optionally in parallel."""
    if n_jobs == 1:
        results = [run_trial(cfg, t) for t in range(cfg.trials)]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(delayed(run_trial)(cfg, t)
                                          for t in range(cfg.trials))
    results.sort(key=lambda r: r.trial)
    return ScenarioRun(cfg, results, summarize(results))


def run_sweep(cfg: ScenarioConfig, key: Optional[str] = None,
              values: Optional[Iterable] = None, n_jobs: int = 1) -> List[ScenarioRun]:
    """One scenario per value of ``key`` (defaults to the config's sweep)."""
    key = key or cfg.sweep_key
    values = list(values if values is not None else (cfg.sweep_values or ()))
    if key is None or not values:
        raise ConfigError("a sweep needs a key and at least one value")
    _check_numeric_key(key)
    return [run_scenario(cfg.replace(**{key: v}), n_jobs) for v in values]


# -- output --------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _trial_row(r: TrialResult) -> list:
    return [r.trial, r.seed, r.method, r.M, r.N_RF, r.K, float(r.P_dBm),
            r.sum_rate, r.ee, r.iterations, r.wall_ms]


def _trial_dict(r: TrialResult) -> dict:
    d = dataclasses.asdict(r)
    d["sum_rate_bpshz"] = d.pop("sum_rate")
    d["ee_bpshz_per_w"] = d.pop("ee")
    return {k: (None if isinstance(v, float) and math.isnan(v) else v)
            for k, v in d.items()}


def summary_row(run: ScenarioRun, sweep_key: Optional[str] = None) -> dict:
    c = run.config
    row = {"method": c.method, "sweep_key": sweep_key,
           "sweep_value": getattr(c, sweep_key) if sweep_key else None,
           "M": c.M, "N_RF": c.N_RF, "K": c.K, "P_dBm": float(c.P_dBm)}
    row.update(run.summary)
    return row


def summary_path(path) -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}_summary{p.suffix}")


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def format_results(results: Sequence[TrialResult], fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in results:
            w.writerow([_fmt(v) for v in _trial_row(r)])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([_trial_dict(r) for r in results], indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def format_summary(rows: Sequence[dict], fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in SUMMARY_COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v)
                  for k, v in row.items()} for row in rows]
        return json.dumps(clean, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_results(results: Sequence[TrialResult], path, fmt: str = "csv",
                 summary_rows: Optional[Sequence[dict]] = None) -> Path:
    """Write one row per trial to ``path`` and aggregates to ``<stem>_summary``.

    Without ``summary_rows`` the sibling file holds one aggregate row over
    ``results``.  Returns the summary path.
    """
    results = sorted(results, key=lambda r: (r.method, r.M, r.N_RF, r.K, r.P_dBm, r.trial))
    _write_text(path, format_results(results, fmt))
    if summary_rows is None:
        summary_rows = [_default_summary(results)] if results else []
    sp = summary_path(path)
    _write_text(sp, format_summary(summary_rows, fmt))
    return sp


def _default_summary(results: Sequence[TrialResult]) -> dict:
    r0 = results[0]
    row = {"method": r0.method, "sweep_key": None, "sweep_value": None, "M": r0.M,
           "N_RF": r0.N_RF, "K": r0.K, "P_dBm": float(r0.P_dBm)}
    row.update(summarize(results))
    return row


def load_results(path) -> List[TrialResult]:
    """Read back a JSON trial file written by :func:`emit_results`."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    out = []
    for d in raw:
        d = dict(d)
        d["sum_rate"] = _nan(d.pop("sum_rate_bpshz"))
        d["ee"] = _nan(d.pop("ee_bpshz_per_w"))
        out.append(TrialResult(**d))
    return out


def _nan(v):
    return math.nan if v is None else v
