"""Experiment configuration: dataclass sections, TOML files and key=value overrides."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .rng import MAX_SEED

EXPERIMENTS = ("error-hist", "doa-rmse", "sr-vs-snr", "pa-gain", "sinr-map")
CONFIG_PREFIX = "# config: "


class ConfigError(ValueError):
    def __init__(self, param: str, message: str):
        super().__init__(f"{param}: {message}")
        self.param = param


@dataclass
class ArrayConfig:
    n_antennas: int = 8
    carrier_hz: float = 3e9
    spacing_wavelengths: float = 0.5


@dataclass
class DoaConfig:
    snapshots: int = 4
    true_angle_deg: float = 10.0
    snr_db: float = 0.0
    num_samples: int = 10000
    num_bins: int = 41
    k_list: list = field(default_factory=lambda: [1, 5, 10, 20])
    snr_list: list = field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
    calibration_size: int = 1000


@dataclass
class LinkConfig:
    desired_deg: float = 30.0
    eve_deg: float = -20.0
    beta: float = 0.5
    k_list: list = field(default_factory=lambda: [1, 20])
    snr_list: list = field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0])
    perfect: bool = False


@dataclass
class PaConfig:
    n_list: list = field(default_factory=lambda: [4, 8, 16, 32])
    snr_list: list = field(default_factory=lambda: [5.0])
    beta_list: list = field(default_factory=lambda: [0.2, 0.5, 0.8])
    k: int = 1
    grid_points: int = 1001


@dataclass
class SpwtConfig:
    mode: str = "2d"
    n_antennas: int = 32
    planar_nx: int = 8
    planar_ny: int = 8
    carrier_hz: float = 3e9
    bandwidth_hz: float = 5e6
    num_subcarriers: int = 1024
    distinct: bool = True
    beta: float = 0.5
    snr_db: float = 10.0
    assignments: int = 50
    desired: list = field(default_factory=lambda: [45.0, 0.0, 500.0])
    eve: list = field(default_factory=lambda: [120.0, 0.0, 500.0])
    desired_3d: list = field(default_factory=lambda: [45.0, 45.0, 500.0])
    eve_3d: list = field(default_factory=lambda: [120.0, 120.0, 500.0])
    azimuth: list = field(default_factory=lambda: [0.0, 180.0, 1.0])
    elevation: list = field(default_factory=lambda: [0.0, 180.0, 1.0])
    range: list = field(default_factory=lambda: [0.0, 1500.0, 5.0])


@dataclass
class ExperimentConfig:
    experiment: str = "error-hist"
    seed: int = 2018
    trials: int = 500
    array: ArrayConfig = field(default_factory=ArrayConfig)
    doa: DoaConfig = field(default_factory=DoaConfig)
    link: LinkConfig = field(default_factory=LinkConfig)
    pa: PaConfig = field(default_factory=PaConfig)
    spwt: SpwtConfig = field(default_factory=SpwtConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        cfg = cls()
        for key, value in data.items():
            _assign(cfg, key, value)
        return cfg


def _assign(cfg: ExperimentConfig, key: str, value) -> None:
    if isinstance(value, dict):
        for sub, v in value.items():
            _assign(cfg, f"{key}.{sub}", v)
        return
    parts = key.split(".")
    target = cfg
    for p in parts[:-1]:
        if not hasattr(target, p) or not dataclasses.is_dataclass(getattr(target, p)):
            raise ConfigError(key, "unknown section")
        target = getattr(target, p)
    name = parts[-1]
    fields = {f.name: f for f in dataclasses.fields(target)}
    if name not in fields:
        raise ConfigError(key, "unknown parameter")
    current = getattr(target, name)
    if dataclasses.is_dataclass(current):
        raise ConfigError(key, "is a section, not a parameter")
    setattr(target, name, _coerce(key, current, value))


def _coerce(key: str, current, value):
    try:
        if isinstance(current, bool):
            if isinstance(value, str):
                if value.lower() not in ("true", "false"):
                    raise ValueError(value)
                return value.lower() == "true"
            return bool(value)
        if isinstance(current, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(current, float):
            return float(value)
        if isinstance(current, list):
            if not isinstance(value, list):
                raise ValueError(value)
            return list(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot use {value!r} here") from None


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with the value parsed as a TOML literal when possible."""
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value")
    key, raw = (s.strip() for s in text.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def load_config(path: str | Path | None = None, experiment: str | None = None,
                overrides=()) -> ExperimentConfig:
    """Defaults, then a TOML file (or a previous CSV's header), then overrides."""
    cfg = ExperimentConfig()
    if path is not None:
        path = Path(path)
        if path.suffix == ".csv":
            cfg = config_from_csv(path)
        else:
            with open(path, "rb") as fh:
                cfg = ExperimentConfig.from_dict(tomllib.load(fh))
    if experiment is not None:
        cfg.experiment = experiment
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        _assign(cfg, key, value)
    return cfg


def config_from_csv(path: str | Path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith(CONFIG_PREFIX):
                return ExperimentConfig.from_dict(json.loads(line[len(CONFIG_PREFIX):]))
            if not line.startswith("#"):
                break
    raise ConfigError(str(path), "no embedded config header")


def _check(cond: bool, param: str, message: str) -> None:
    if not cond:
        raise ConfigError(param, message)


def _finite(values) -> bool:
    return all(isinstance(v, (int, float)) and math.isfinite(v) for v in values)


def validate(cfg: ExperimentConfig) -> None:
    """Check every parameter the chosen experiment uses; raises ConfigError."""
    _check(cfg.experiment in EXPERIMENTS, "experiment", f"must be one of {EXPERIMENTS}")
    _check(0 <= cfg.seed <= MAX_SEED, "seed", "must be an unsigned 64-bit integer")
    _check(cfg.trials >= 1, "trials", "must be >= 1")
    exp = cfg.experiment
    a, d, ln, pa, sp = cfg.array, cfg.doa, cfg.link, cfg.pa, cfg.spwt

    if exp in ("error-hist", "doa-rmse", "sr-vs-snr"):
        _check(a.n_antennas >= 2, "array.n_antennas", "must be >= 2")
        _check(a.carrier_hz > 0, "array.carrier_hz", "must be positive")
        _check(a.spacing_wavelengths > 0, "array.spacing_wavelengths", "must be positive")
        _check(d.snapshots >= 2, "doa.snapshots", "must be >= 2")
    if exp in ("error-hist", "doa-rmse"):
        _check(abs(d.true_angle_deg) < 90, "doa.true_angle_deg", "must lie in (-90, 90)")
    if exp == "error-hist":
        _check(d.num_samples >= 1, "doa.num_samples", "must be >= 1")
        _check(d.num_bins >= 1, "doa.num_bins", "must be >= 1")
        _check(_finite([d.snr_db]) or d.snr_db == math.inf, "doa.snr_db", "must be a number or inf")
    if exp in ("doa-rmse", "sr-vs-snr", "pa-gain"):
        _check(d.calibration_size >= 2, "doa.calibration_size", "must be >= 2")
        _check(d.snapshots >= 2, "doa.snapshots", "must be >= 2")
    if exp == "doa-rmse":
        _check(len(d.k_list) > 0 and all(isinstance(k, int) and k >= 1 for k in d.k_list),
               "doa.k_list", "must be a non-empty list of integers >= 1")
        _check(len(d.snr_list) > 0 and _finite(d.snr_list), "doa.snr_list", "must be a non-empty list of numbers")
    if exp == "sr-vs-snr":
        for name in ("desired_deg", "eve_deg"):
            _check(abs(getattr(ln, name)) < 90, f"link.{name}", "must lie in (-90, 90)")
        _check(abs(ln.desired_deg - ln.eve_deg) >= 0.5, "link.eve_deg", "must differ from desired_deg by >= 0.5 deg")
        _check(0 <= ln.beta <= 1, "link.beta", "must lie in [0, 1]")
        _check(len(ln.k_list) > 0 and all(isinstance(k, int) and k >= 1 for k in ln.k_list),
               "link.k_list", "must be a non-empty list of integers >= 1")
        _check(len(ln.snr_list) > 0 and _finite(ln.snr_list), "link.snr_list", "must be a non-empty list of numbers")
    if exp == "pa-gain":
        for name in ("desired_deg", "eve_deg"):
            _check(abs(getattr(ln, name)) < 90, f"link.{name}", "must lie in (-90, 90)")
        _check(len(pa.n_list) > 0 and all(isinstance(n, int) and n >= 2 for n in pa.n_list),
               "pa.n_list", "must be a non-empty list of integers >= 2")
        _check(len(pa.beta_list) > 0 and all(0 < b < 1 for b in pa.beta_list), "pa.beta_list", "values must lie in (0, 1)")
        _check(len(pa.snr_list) > 0 and _finite(pa.snr_list), "pa.snr_list", "must be a non-empty list of numbers")
        _check(pa.k >= 1, "pa.k", "must be >= 1")
        _check(pa.grid_points >= 3, "pa.grid_points", "must be >= 3")
    if exp == "sinr-map":
        _check(sp.mode in ("2d", "3d"), "spwt.mode", "must be '2d' or '3d'")
        _check(sp.n_antennas >= 2, "spwt.n_antennas", "must be >= 2")
        _check(sp.planar_nx >= 1 and sp.planar_ny >= 1 and sp.planar_nx * sp.planar_ny >= 2,
               "spwt.planar_nx", "planar array needs at least 2 elements")
        _check(sp.carrier_hz > 0, "spwt.carrier_hz", "must be positive")
        _check(sp.bandwidth_hz > 0, "spwt.bandwidth_hz", "must be positive")
        _check(sp.num_subcarriers >= 1, "spwt.num_subcarriers", "must be >= 1")
        n = sp.n_antennas if sp.mode == "2d" else sp.planar_nx * sp.planar_ny
        _check(not sp.distinct or n <= sp.num_subcarriers, "spwt.num_subcarriers",
               "distinct selection needs at least one subcarrier per antenna")
        _check(0 <= sp.beta <= 1, "spwt.beta", "must lie in [0, 1]")
        _check(_finite([sp.snr_db]), "spwt.snr_db", "must be finite")
        _check(sp.assignments >= 1, "spwt.assignments", "must be >= 1")
        for name in ("desired", "eve", "desired_3d", "eve_3d"):
            v = getattr(sp, name)
            _check(len(v) == 3 and _finite(v) and v[2] > 0, f"spwt.{name}",
                   "must be [azimuth_deg, elevation_deg, range_m] with range > 0")
        for name in ("azimuth", "elevation", "range"):
            v = getattr(sp, name)
            _check(len(v) == 3 and _finite(v) and v[2] > 0 and v[1] > v[0], f"spwt.{name}",
                   "axis must be [min, max, step] with step > 0 and max > min")
