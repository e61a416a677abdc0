"""Secure precise transmission with random subcarrier selection.

Each antenna transmits on its own randomly chosen OFDM subcarrier, which
makes the channel depend on range as well as direction.  Directions use
``u = [cos(el) cos(az), cos(el) sin(az), sin(el)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .array_model import SPEED_OF_LIGHT, ArrayGeometry
from .beamforming import nsp_projector
from .rng import make_rng

AXIS_NAMES = ("azimuth", "elevation", "range")
AXIS_UNITS = {"azimuth": "deg", "elevation": "deg", "range": "m"}


class InfeasibleAssignmentError(ValueError):
    pass


class OutOfBoundsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FrequencyAssignment:
    base_frequency_hz: float
    subcarrier_spacing_hz: float
    bandwidth_hz: float
    indices: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("indices must be a 1-D array")
        if self.subcarrier_spacing_hz < 0 or self.bandwidth_hz <= 0 or self.base_frequency_hz <= 0:
            raise ValueError("frequencies must be positive (spacing may be zero)")
        if np.any(idx < 0) or (self.subcarrier_spacing_hz > 0 and np.any(idx >= self.num_subcarriers)):
            raise ValueError("subcarrier index out of range")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def num_subcarriers(self) -> int:
        if self.subcarrier_spacing_hz == 0:
            return 1
        return int(math.floor(self.bandwidth_hz / self.subcarrier_spacing_hz + 1e-9))

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.base_frequency_hz + self.indices * self.subcarrier_spacing_hz


def random_subcarrier_select(num_antennas: int, base_frequency_hz: float = 3e9,
                             bandwidth_hz: float = 5e6, num_subcarriers: int = 1024,
                             seed: int = 0, distinct: bool = True,
                             draw: int = 0) -> FrequencyAssignment:
    """Uniform random subcarrier index per antenna.

    ``draw`` selects an independent assignment from the same seed, so that
    assignment ``r`` of an average is reproducible on its own.
    """
    spacing = bandwidth_hz / num_subcarriers
    if distinct and num_antennas > num_subcarriers:
        raise InfeasibleAssignmentError(
            f"cannot give {num_antennas} antennas distinct subcarriers out of {num_subcarriers}")
    rng = make_rng(seed, "subcarriers", draw)
    if distinct:
        idx = rng.choice(num_subcarriers, size=num_antennas, replace=False)
    else:
        idx = rng.integers(0, num_subcarriers, size=num_antennas)
    return FrequencyAssignment(base_frequency_hz, spacing, bandwidth_hz, idx, seed)


@dataclass(frozen=True)
class RangeAngleTarget:
    azimuth_deg: float
    elevation_deg: float = 0.0
    range_m: float = 500.0

    def __post_init__(self):
        if not self.range_m > 0:
            raise ValueError("range must be positive")

    def coord(self, name: str) -> float:
        return {"azimuth": self.azimuth_deg, "elevation": self.elevation_deg,
                "range": self.range_m}[name]


def direction(azimuth_deg, elevation_deg) -> np.ndarray:
    az = np.deg2rad(azimuth_deg)
    el = np.deg2rad(elevation_deg)
    az, el = np.broadcast_arrays(az, el)
    return np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)


def fda_channels(geometry: ArrayGeometry, assignment: FrequencyAssignment,
                 azimuth_deg, elevation_deg, range_m) -> np.ndarray:
    """Channel vectors for broadcast coordinates; returns shape ``(..., N)``."""
    f = assignment.frequencies_hz
    if f.size != geometry.num_elements:
        raise ValueError("one subcarrier per antenna is required")
    u = direction(azimuth_deg, elevation_deg)
    proj = u @ geometry.element_positions.T
    # range and aperture phases kept apart and reduced to [0, 1) cycles: range
    # phases reach ~1e5 rad, whose rounding error would otherwise leak into nulls
    range_cycles = np.mod(f * np.asarray(range_m, dtype=float)[..., None] / SPEED_OF_LIGHT, 1.0)
    aperture_cycles = np.mod(f * proj / SPEED_OF_LIGHT, 1.0)
    return (np.exp(-2j * np.pi * range_cycles) * np.exp(2j * np.pi * aperture_cycles)
            / math.sqrt(f.size))


def fda_channel(geometry: ArrayGeometry, assignment: FrequencyAssignment,
                target: RangeAngleTarget) -> np.ndarray:
    return fda_channels(geometry, assignment, target.azimuth_deg, target.elevation_deg,
                        target.range_m)


def aligned_precoder(h_desired: np.ndarray) -> np.ndarray:
    """Phase-aligned precoder: every antenna pre-compensates its own path phase."""
    h = np.asarray(h_desired, dtype=complex)
    return h / np.linalg.norm(h)


@dataclass(frozen=True)
class AxisSpec:
    name: str
    min: float
    max: float
    step: float

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ValueError(f"axis name must be one of {AXIS_NAMES}, got {self.name!r}")
        if not (self.step > 0 and self.max > self.min):
            raise ValueError(f"axis {self.name!r} is empty: need step > 0 and max > min")

    @property
    def values(self) -> np.ndarray:
        n = int(math.floor((self.max - self.min) / self.step + 1e-9))
        return self.min + self.step * np.arange(n + 1)

    @property
    def label(self) -> str:
        return f"{self.name}_{AXIS_UNITS[self.name]}"

    def index_of(self, value: float) -> int:
        if not self.min - self.step / 2 <= value <= self.max + self.step / 2:
            raise OutOfBoundsError(f"{self.name}={value} lies outside [{self.min}, {self.max}]")
        return int(np.argmin(np.abs(self.values - value)))


@dataclass(frozen=True, eq=False)
class SinrMap:
    axes: tuple[AxisSpec, AxisSpec]
    fixed: dict = field(default_factory=dict)
    values_db: np.ndarray = None

    def __post_init__(self):
        shape = tuple(ax.values.size for ax in self.axes)
        if self.values_db.shape != shape:
            raise ValueError(f"map shape {self.values_db.shape} does not match axes {shape}")
        if not np.all(np.isfinite(self.values_db)):
            raise ValueError("map values must be finite")


@dataclass(frozen=True)
class PeakReport:
    peak_location: dict
    peak_db: float
    fraction_within_3db: float
    eve_sinr_db: float | None
    desired_is_peak: bool
    degenerate: bool


def _grid_coords(axes, fixed):
    grids = np.meshgrid(axes[0].values, axes[1].values, indexing="ij")
    coords = {ax.name: g for ax, g in zip(axes, grids)}
    for name in AXIS_NAMES:
        if name not in coords:
            coords[name] = np.full(grids[0].shape, float(fixed[name]))
    return coords


def sinr_grid(geometry: ArrayGeometry, assignment: FrequencyAssignment,
              desired: RangeAngleTarget, beta: float, total_power: float,
              noise_power: float, coords: dict) -> np.ndarray:
    """Linear SINR at each coordinate for one subcarrier assignment."""
    h_d = fda_channel(geometry, assignment, desired)
    w = aligned_precoder(h_d)
    t = nsp_projector(h_d)
    h = fda_channels(geometry, assignment, coords["azimuth"], coords["elevation"], coords["range"])
    sig = np.abs(h.conj() @ w) ** 2
    leak = np.sum(np.abs(h.conj() @ t) ** 2, axis=-1)
    return beta * total_power * sig / ((1 - beta) * total_power * leak / t.shape[1] + noise_power)


def sinr_map(geometry: ArrayGeometry, desired: RangeAngleTarget, beta: float,
             total_power: float, noise_power: float, axes, fixed: dict | None = None,
             num_assignments: int = 50, seed: int = 0, base_frequency_hz: float = 3e9,
             bandwidth_hz: float = 5e6, num_subcarriers: int = 1024,
             distinct: bool = True, assignments=None) -> SinrMap:
    """Average (over random subcarrier assignments) SINR in dB on a 2-D slice.

    Coordinates not swept by ``axes`` are taken from ``fixed``, falling back
    to the desired target.  Averaging is done on linear SINR.  Passing
    ``assignments`` overrides the random draws.
    """
    axes = tuple(axes)
    if len(axes) != 2 or axes[0].name == axes[1].name:
        raise ValueError("a map needs two distinct axes")
    fixed_all = {n: desired.coord(n) for n in AXIS_NAMES}
    fixed_all.update(fixed or {})
    coords = _grid_coords(axes, fixed_all)
    if assignments is None:
        assignments = [random_subcarrier_select(geometry.num_elements, base_frequency_hz,
                                                bandwidth_hz, num_subcarriers, seed, distinct, r)
                       for r in range(num_assignments)]
    stack = np.stack([sinr_grid(geometry, a, desired, beta, total_power, noise_power, coords)
                      for a in assignments])
    return map_from_linear(axes, fixed_all, stack)


def map_from_linear(axes, fixed: dict, stack: np.ndarray) -> SinrMap:
    swept = {ax.name for ax in axes}
    fixed = {k: v for k, v in fixed.items() if k not in swept}
    return SinrMap(tuple(axes), fixed, 10 * np.log10(np.mean(stack, axis=0)))


def peak_analysis(smap: SinrMap, desired: RangeAngleTarget,
                  eve: RangeAngleTarget | None = None) -> PeakReport:
    """Peak location/value, share of cells within 3 dB, and the eavesdropper's cell."""
    ax0, ax1 = smap.axes
    di = (ax0.index_of(desired.coord(ax0.name)), ax1.index_of(desired.coord(ax1.name)))
    v = smap.values_db
    flat = int(np.argmax(v))
    pi = np.unravel_index(flat, v.shape)
    peak = float(v[pi])
    eve_db = None
    if eve is not None:
        ei = (ax0.index_of(eve.coord(ax0.name)), ax1.index_of(eve.coord(ax1.name)))
        eve_db = float(v[ei])
    return PeakReport(
        peak_location={ax0.name: float(ax0.values[pi[0]]), ax1.name: float(ax1.values[pi[1]])},
        peak_db=peak,
        fraction_within_3db=float(np.mean(v >= peak - 3.0)),
        eve_sinr_db=eve_db,
        desired_is_peak=bool(v[di] >= peak),
        degenerate=bool(v.max() - v.min() < 1e-9),
    )
