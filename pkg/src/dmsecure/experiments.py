"""Figure-style Monte-Carlo experiments producing CSV tables.

Every random draw is keyed by (seed, stream name, trial index), and results
are gathered in trial order, so output does not depend on the number of
worker processes.  Within a trial the same draws are reused for every SNR
and every training-set size (common random numbers).
"""

from __future__ import annotations

import functools
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .array_model import ArrayGeometry, steering_ula
from .beamforming import (PowerAllocation, design_beamformer, link_budget, opa,
                          pa_gain_percent, secrecy_rate_curve)
from .config import CONFIG_PREFIX, ExperimentConfig, validate
from .error_learning import calibrate, histogram, measure_angles, refine_angle
from .rng import make_rng
from .spwt import (AxisSpec, RangeAngleTarget, _grid_coords, map_from_linear,
                   peak_analysis, random_subcarrier_select, sinr_grid)

ERROR_HIST_CHUNK = 500
MAX_DESIGN_ANGLE = 89.999


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".9g")
    return str(x)


@dataclass
class CsvTable:
    header: list
    rows: list
    comments: list = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError("table is not rectangular")

    def to_text(self) -> str:
        buf = io.StringIO()
        for c in self.comments:
            buf.write(f"# {c}\n" if not c.startswith("#") else f"{c}\n")
        buf.write(",".join(self.header) + "\n")
        for row in self.rows:
            buf.write(",".join(fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [row[i] for row in self.rows]


def _header(cfg: ExperimentConfig, extra=()) -> list:
    return [f"dmsecure {__version__} {cfg.experiment}", CONFIG_PREFIX + cfg.to_json(), *extra]


def _pmap(fn, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def _geometry(cfg: ExperimentConfig, n: int | None = None) -> ArrayGeometry:
    a = cfg.array
    wavelength = 299_792_458.0 / a.carrier_hz
    return ArrayGeometry.ula(n or a.n_antennas, a.carrier_hz, a.spacing_wavelengths * wavelength)


def _calibration_seed(cfg: ExperimentConfig, *keys) -> int:
    return int(make_rng(cfg.seed, "calibration", *keys).integers(0, 2**63))


def _calibrate_angles(cfg, geometry, angles, snrs):
    """Error models keyed by (angle, snr); calibration draws depend on the angle index only."""
    return {(ang, snr): calibrate(ang, snr, cfg.doa.snapshots, geometry, cfg.doa.calibration_size,
                                  _calibration_seed(cfg, geometry.num_elements, i))
            for i, ang in enumerate(angles) for snr in snrs}


# ---------------------------------------------------------------- error-hist

def _error_chunk(cfg: ExperimentConfig, chunk: int):
    n = min(ERROR_HIST_CHUNK, cfg.doa.num_samples - chunk * ERROR_HIST_CHUNK)
    est, _ = measure_angles(cfg.doa.true_angle_deg, n, cfg.doa.snapshots, cfg.doa.snr_db,
                            _geometry(cfg), make_rng(cfg.seed, "error-hist", chunk))
    return est - cfg.doa.true_angle_deg


def error_samples(cfg: ExperimentConfig, workers: int = 1) -> tuple[np.ndarray, int]:
    """All measurement errors for the error-hist experiment and the failed count."""
    chunks = math.ceil(cfg.doa.num_samples / ERROR_HIST_CHUNK)
    e = np.concatenate(_pmap(functools.partial(_error_chunk, cfg), range(chunks), workers))
    ok = np.isfinite(e)
    return e[ok], int(np.count_nonzero(~ok))


def run_error_hist(cfg: ExperimentConfig, workers: int = 1) -> CsvTable:
    cfg.experiment = "error-hist"
    validate(cfg)
    errors, failed = error_samples(cfg, workers)
    if errors.size == 0:
        raise RuntimeError("every measurement failed; no histogram to build")
    h = histogram(errors, cfg.doa.num_bins)
    rows = [(lo, hi, d) for lo, hi, d in zip(h.bin_edges_deg[:-1], h.bin_edges_deg[1:], h.densities)]
    extra = [f"samples: {errors.size}", f"failed_measurements: {failed}"]
    return CsvTable(["bin_left", "bin_right", "density"], rows, _header(cfg, extra), "error-hist")


# ------------------------------------------------------------------ doa-rmse

def _doa_trial(cfg: ExperimentConfig, models: dict, trial: int) -> np.ndarray:
    """Squared error of the refined angle, shape (n_snr, n_k); NaN if every measurement failed."""
    d = cfg.doa
    snrs, ks = sorted(d.snr_list), sorted(d.k_list)
    geometry = _geometry(cfg)
    out = np.full((len(snrs), len(ks)), np.nan)
    for i, snr in enumerate(snrs):
        est, _ = measure_angles(d.true_angle_deg, max(ks), d.snapshots, snr, geometry,
                                make_rng(cfg.seed, "doa-rmse", trial))
        for j, k in enumerate(ks):
            out[i, j] = (refine_angle(est[:k], models[(d.true_angle_deg, snr)]) - d.true_angle_deg) ** 2
    return out


def run_doa_rmse(cfg: ExperimentConfig, workers: int = 1) -> CsvTable:
    cfg.experiment = "doa-rmse"
    validate(cfg)
    d = cfg.doa
    snrs, ks = sorted(d.snr_list), sorted(d.k_list)
    models = _calibrate_angles(cfg, _geometry(cfg), [d.true_angle_deg], snrs)
    sq = np.stack(_pmap(functools.partial(_doa_trial, cfg, models), range(cfg.trials), workers))
    rows = []
    for i, snr in enumerate(snrs):
        for j, k in enumerate(ks):
            col = sq[:, i, j]
            col = col[np.isfinite(col)]
            rows.append((snr, k, math.sqrt(col.mean()) if col.size else math.nan, col.size))
    extra = [f"bias_deg[snr={fmt(s)}]: {fmt(models[(d.true_angle_deg, s)].mean_deg)}" for s in snrs]
    return CsvTable(["snr_db", "K", "rmse_deg", "trials"], rows, _header(cfg, extra), "doa-rmse")


# ----------------------------------------------------------------- sr-vs-snr

def _clip_angle(theta: float) -> float:
    return float(np.clip(theta, -MAX_DESIGN_ANGLE, MAX_DESIGN_ANGLE))


def _sr_trial(cfg: ExperimentConfig, models: dict, trial: int) -> np.ndarray:
    """Secrecy rate per (snr, K); NaN when the desired angle could not be measured."""
    ln, d = cfg.link, cfg.doa
    snrs, ks = sorted(ln.snr_list), sorted(ln.k_list)
    geometry = _geometry(cfg)
    h_d = steering_ula(geometry, ln.desired_deg)
    h_e = steering_ula(geometry, ln.eve_deg)
    out = np.full((len(snrs), len(ks)), np.nan)
    for i, snr in enumerate(snrs):
        pa = PowerAllocation.from_snr(ln.beta, snr)
        if ln.perfect:
            bf = design_beamformer(geometry, ln.desired_deg, ln.eve_deg)
            out[i, :] = link_budget(bf, pa, h_d, h_e).secrecy_rate_bits
            continue
        est_d, _ = measure_angles(ln.desired_deg, max(ks), d.snapshots, snr, geometry,
                                  make_rng(cfg.seed, "sr-desired", trial))
        est_e, _ = measure_angles(ln.eve_deg, max(ks), d.snapshots, snr, geometry,
                                  make_rng(cfg.seed, "sr-eve", trial))
        for j, k in enumerate(ks):
            th_d = refine_angle(est_d[:k], models[(ln.desired_deg, snr)])
            th_e = refine_angle(est_e[:k], models[(ln.eve_deg, snr)])
            if math.isnan(th_d):
                continue
            bf = design_beamformer(geometry, _clip_angle(th_d), th_e)
            out[i, j] = link_budget(bf, pa, h_d, h_e).secrecy_rate_bits
    return out


def sr_trials(cfg: ExperimentConfig, workers: int = 1) -> np.ndarray:
    """Per-trial secrecy rates, shape (trials, n_snr, n_k)."""
    ln = cfg.link
    geometry = _geometry(cfg)
    snrs = sorted(ln.snr_list)
    models = {} if ln.perfect else _calibrate_angles(cfg, geometry, [ln.desired_deg, ln.eve_deg], snrs)
    return np.stack(_pmap(functools.partial(_sr_trial, cfg, models), range(cfg.trials), workers))


def run_sr_vs_snr(cfg: ExperimentConfig, workers: int = 1) -> CsvTable:
    cfg.experiment = "sr-vs-snr"
    validate(cfg)
    ln = cfg.link
    snrs, ks = sorted(ln.snr_list), sorted(ln.k_list)
    sr = sr_trials(cfg, workers)
    rows = []
    for i, snr in enumerate(snrs):
        for j, k in enumerate(ks):
            col = sr[:, i, j]
            col = col[np.isfinite(col)]
            rows.append((snr, k, col.mean(), col.std(), col.size))
    return CsvTable(["snr_db", "K", "sr_mean_bits", "sr_std", "trials"], rows, _header(cfg), "sr-vs-snr")


# ------------------------------------------------------------------- pa-gain

def _pa_trial(cfg: ExperimentConfig, models: dict, job: tuple) -> np.ndarray:
    """[SR(beta_1), ..., SR(beta_m), SR(OPA), beta*] for one (N, SNR, trial)."""
    n, snr, trial = job
    ln, pa = cfg.link, cfg.pa
    geometry = _geometry(cfg, n)
    est, _ = measure_angles(ln.desired_deg, pa.k, cfg.doa.snapshots, snr, geometry,
                            make_rng(cfg.seed, "pa-gain", n, trial))
    th = refine_angle(est, models[(n, snr)])
    out = np.full(len(pa.beta_list) + 2, np.nan)
    if math.isnan(th):
        return out
    bf = design_beamformer(geometry, _clip_angle(th), ln.eve_deg)
    h_d = steering_ula(geometry, ln.desired_deg)
    h_e = steering_ula(geometry, ln.eve_deg)
    power = 10 ** (snr / 10)
    out[:-2] = secrecy_rate_curve(bf, sorted(pa.beta_list), power, 1.0, h_d, h_e)
    beta_star, lb = opa(bf, power, 1.0, h_d, h_e, pa.grid_points)
    out[-2], out[-1] = lb.secrecy_rate_bits, beta_star
    return out


def pa_trials(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Per-trial results keyed by (N, SNR): array (trials, n_beta + 2)."""
    pa, ln = cfg.pa, cfg.link
    models = {}
    for n in sorted(pa.n_list):
        g = _geometry(cfg, n)
        for snr in sorted(pa.snr_list):
            models[(n, snr)] = calibrate(ln.desired_deg, snr, cfg.doa.snapshots, g,
                                         cfg.doa.calibration_size, _calibration_seed(cfg, n, 0))
    jobs = [(n, snr, t) for n in sorted(pa.n_list) for snr in sorted(pa.snr_list) for t in range(cfg.trials)]
    res = _pmap(functools.partial(_pa_trial, cfg, models), jobs, workers)
    out = {}
    for (n, snr, _), r in zip(jobs, res):
        out.setdefault((n, snr), []).append(r)
    return {key: np.array(v) for key, v in out.items()}


def run_pa_gain(cfg: ExperimentConfig, workers: int = 1) -> CsvTable:
    """Mean SR at each fixed split and under OPA; gain is computed on the trial means."""
    cfg.experiment = "pa-gain"
    validate(cfg)
    betas = sorted(cfg.pa.beta_list)
    rows = []
    for (n, snr), res in sorted(pa_trials(cfg, workers).items()):
        res = res[np.all(np.isfinite(res), axis=1)]
        sr_opa = res[:, -2].mean()
        for b, beta in enumerate(betas):
            sr_fixed = res[:, b].mean()
            rows.append((n, snr, beta, sr_fixed, sr_opa, pa_gain_percent(sr_opa, sr_fixed)))
    return CsvTable(["n_antennas", "snr_db", "beta_fixed", "sr_fixed", "sr_opa", "gain_percent"],
                    rows, _header(cfg), "pa-gain")


# ------------------------------------------------------------------ sinr-map

def map_slices(cfg: ExperimentConfig):
    """(geometry, desired, eve, [(axes, fixed), ...]) for the configured mode."""
    sp = cfg.spwt
    ax = {name: AxisSpec(name, *getattr(sp, name)) for name in ("azimuth", "elevation", "range")}
    if sp.mode == "2d":
        geometry = ArrayGeometry.ula(sp.n_antennas, sp.carrier_hz)
        desired, eve = RangeAngleTarget(*sp.desired), RangeAngleTarget(*sp.eve)
        slices = [((ax["azimuth"], ax["range"]), {"elevation": desired.elevation_deg})]
    else:
        geometry = ArrayGeometry.upa(sp.planar_nx, sp.planar_ny, sp.carrier_hz)
        desired, eve = RangeAngleTarget(*sp.desired_3d), RangeAngleTarget(*sp.eve_3d)
        slices = [((ax["elevation"], ax["range"]), {"azimuth": desired.azimuth_deg}),
                  ((ax["azimuth"], ax["range"]), {"elevation": desired.elevation_deg}),
                  ((ax["azimuth"], ax["elevation"]), {"range": desired.range_m})]
    return geometry, desired, eve, slices


def _map_job(cfg: ExperimentConfig, job: tuple) -> np.ndarray:
    s, r = job
    sp = cfg.spwt
    geometry, desired, _, slices = map_slices(cfg)
    axes, fixed = slices[s]
    full = {n: desired.coord(n) for n in ("azimuth", "elevation", "range")}
    full.update(fixed)
    assignment = random_subcarrier_select(geometry.num_elements, sp.carrier_hz, sp.bandwidth_hz,
                                          sp.num_subcarriers, cfg.seed, sp.distinct, r)
    return sinr_grid(geometry, assignment, desired, sp.beta, 10 ** (sp.snr_db / 10), 1.0,
                     _grid_coords(axes, full))


def sinr_maps(cfg: ExperimentConfig, workers: int = 1) -> list:
    geometry, desired, _, slices = map_slices(cfg)
    jobs = [(s, r) for s in range(len(slices)) for r in range(cfg.spwt.assignments)]
    grids = _pmap(functools.partial(_map_job, cfg), jobs, workers)
    maps = []
    for s, (axes, fixed) in enumerate(slices):
        stack = np.stack([g for (js, _), g in zip(jobs, grids) if js == s])
        full = {n: desired.coord(n) for n in ("azimuth", "elevation", "range")}
        full.update(fixed)
        maps.append(map_from_linear(axes, full, stack))
    return maps


def run_sinr_map(cfg: ExperimentConfig, workers: int = 1) -> list:
    """One long-form table per slice (one in 2d mode, three in 3d mode)."""
    cfg.experiment = "sinr-map"
    validate(cfg)
    _, desired, eve, _ = map_slices(cfg)
    tables = []
    for smap in sinr_maps(cfg, workers):
        ax0, ax1 = smap.axes
        rep = peak_analysis(smap, desired, eve)
        extra = [f"slice: {ax0.name} x {ax1.name}; fixed {smap.fixed}",
                 f"peak: {rep.peak_location} {fmt(rep.peak_db)} dB",
                 f"fraction_within_3db: {fmt(rep.fraction_within_3db)}",
                 f"eve_sinr_db: {fmt(rep.eve_sinr_db)}"]
        v0, v1 = ax0.values, ax1.values
        rows = [(v0[i], v1[j], smap.values_db[i, j]) for i in range(v0.size) for j in range(v1.size)]
        tables.append(CsvTable([ax0.label, ax1.label, "sinr_db"], rows, _header(cfg, extra),
                               f"{ax0.name}-{ax1.name}"))
    return tables


RUNNERS = {
    "error-hist": run_error_hist,
    "doa-rmse": run_doa_rmse,
    "sr-vs-snr": run_sr_vs_snr,
    "pa-gain": run_pa_gain,
    "sinr-map": run_sinr_map,
}


def run(cfg: ExperimentConfig, workers: int = 1) -> list:
    """Run the configured experiment; always returns a list of tables."""
    out = RUNNERS[cfg.experiment](cfg, workers)
    return out if isinstance(out, list) else [out]
