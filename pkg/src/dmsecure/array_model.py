"""Array geometry, steering vectors and snapshot generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import complex_normal, make_rng

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CARRIER_HZ = 3e9


class UnsupportedGeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element positions (meters, shape ``(N, 3)``) and carrier frequency."""

    element_positions: np.ndarray
    carrier_frequency_hz: float = DEFAULT_CARRIER_HZ

    def __post_init__(self):
        pos = np.array(self.element_positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("element_positions must have shape (N, 3)")
        if pos.shape[0] < 2:
            raise ValueError("an array needs at least 2 elements")
        if not np.all(np.isfinite(pos)):
            raise ValueError("element positions must be finite")
        if not self.carrier_frequency_hz > 0:
            raise ValueError("carrier frequency must be positive")
        pos.setflags(write=False)
        object.__setattr__(self, "element_positions", pos)

    @classmethod
    def ula(cls, num_elements: int, carrier_frequency_hz: float = DEFAULT_CARRIER_HZ,
            spacing: float | None = None) -> "ArrayGeometry":
        """Uniform linear array along x, first element at the origin.

        ``spacing`` defaults to half a wavelength.
        """
        wavelength = SPEED_OF_LIGHT / carrier_frequency_hz
        d = wavelength / 2 if spacing is None else spacing
        if not d > 0:
            raise ValueError("spacing must be positive")
        pos = np.zeros((num_elements, 3))
        pos[:, 0] = np.arange(num_elements) * d
        return cls(pos, carrier_frequency_hz)

    @classmethod
    def upa(cls, nx: int, ny: int, carrier_frequency_hz: float = DEFAULT_CARRIER_HZ,
            spacing: float | None = None) -> "ArrayGeometry":
        """Uniform planar array in the x-y plane, x index varying fastest."""
        wavelength = SPEED_OF_LIGHT / carrier_frequency_hz
        d = wavelength / 2 if spacing is None else spacing
        ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
        pos = np.zeros((nx * ny, 3))
        pos[:, 0] = ix.ravel() * d
        pos[:, 1] = iy.ravel() * d
        return cls(pos, carrier_frequency_hz)

    @property
    def num_elements(self) -> int:
        return self.element_positions.shape[0]

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency_hz

    @property
    def ula_spacing(self) -> float | None:
        """Element spacing if this is a ULA anchored at the origin along x, else None."""
        pos = self.element_positions
        if np.any(pos[:, 1:] != 0) or pos[0, 0] != 0:
            return None
        d = pos[1, 0]
        if d <= 0:
            return None
        expected = np.arange(self.num_elements) * d
        if not np.allclose(pos[:, 0], expected, rtol=1e-12, atol=1e-15):
            return None
        return float(d)

    @property
    def is_ula(self) -> bool:
        return self.ula_spacing is not None


def _require_ula(geometry: ArrayGeometry) -> float:
    d = geometry.ula_spacing
    if d is None:
        raise UnsupportedGeometryError("operation requires a uniform linear array")
    return d


def steering_matrix(geometry: ArrayGeometry, angles_deg) -> np.ndarray:
    """Unit-norm ULA steering vectors, one column per angle (broadside = 0 deg).

    No range check is applied so that scan grids may include the endfire
    points.
    """
    d = _require_ula(geometry)
    n = np.arange(geometry.num_elements)[:, None]
    s = np.sin(np.deg2rad(np.atleast_1d(np.asarray(angles_deg, dtype=float))))[None, :]
    phase = 2 * np.pi * d / geometry.wavelength * n * s
    return np.exp(1j * phase) / math.sqrt(geometry.num_elements)


def steering_ula(geometry: ArrayGeometry, angle_deg: float) -> np.ndarray:
    if not abs(angle_deg) < 90:
        raise ValueError(f"angle must lie in (-90, 90) degrees, got {angle_deg}")
    return steering_matrix(geometry, [angle_deg])[:, 0]


@dataclass(frozen=True)
class SourceScenario:
    source_angles_deg: tuple[float, ...]
    source_powers: tuple[float, ...]
    noise_power: float
    min_separation_deg: float = field(default=0.5, repr=False)

    def __post_init__(self):
        angles = tuple(float(a) for a in self.source_angles_deg)
        powers = tuple(float(p) for p in self.source_powers)
        object.__setattr__(self, "source_angles_deg", angles)
        object.__setattr__(self, "source_powers", powers)
        if len(angles) != len(powers):
            raise ValueError("one power per source is required")
        if any(not abs(a) < 90 for a in angles):
            raise ValueError("source angles must lie in (-90, 90) degrees")
        if any(not p > 0 for p in powers):
            raise ValueError("source powers must be positive")
        # zero noise is allowed: it is the noiseless reference case
        if not self.noise_power >= 0 or not math.isfinite(self.noise_power):
            raise ValueError("noise power must be finite and non-negative")
        srt = sorted(angles)
        if any(b - a < self.min_separation_deg for a, b in zip(srt, srt[1:])):
            raise ValueError(f"sources must be at least {self.min_separation_deg} deg apart")

    @classmethod
    def from_snr(cls, angles_deg, snr_db: float, power: float = 1.0) -> "SourceScenario":
        """Equal-power sources; ``snr_db = inf`` gives a noiseless scenario."""
        angles = tuple(np.atleast_1d(angles_deg).tolist())
        noise = 0.0 if math.isinf(snr_db) and snr_db > 0 else power * 10 ** (-snr_db / 10)
        return cls(angles, (power,) * len(angles), noise)

    @property
    def num_sources(self) -> int:
        return len(self.source_angles_deg)

    @property
    def snr_db(self) -> float:
        if self.noise_power == 0:
            return math.inf
        return 10 * math.log10(self.source_powers[0] / self.noise_power)


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    samples: np.ndarray
    scenario: SourceScenario
    seed: int | None = None

    @property
    def num_snapshots(self) -> int:
        return self.samples.shape[1]


def snapshot_blocks(scenario: SourceScenario, geometry: ArrayGeometry, num_blocks: int,
                    num_snapshots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``num_blocks`` independent ``N x T`` snapshot blocks.

    The element response is the unit-modulus steering vector (sqrt(N) times
    the unit-norm one), so ``snr_db`` is the per-element SNR.  Unit-variance
    signals and noise are drawn first and scaled afterwards, which keeps the
    random draws identical across SNR values for a given generator state.
    """
    if num_snapshots < 1:
        raise ValueError("num_snapshots must be >= 1")
    n = geometry.num_elements
    q = scenario.num_sources
    response = steering_matrix(geometry, scenario.source_angles_deg) * math.sqrt(n)
    sig = complex_normal(rng, (num_blocks, q, num_snapshots))
    noise = complex_normal(rng, (num_blocks, n, num_snapshots))
    amp = np.sqrt(np.asarray(scenario.source_powers))[:, None]
    x = response @ (amp * sig)
    if scenario.noise_power > 0:
        x = x + math.sqrt(scenario.noise_power) * noise
    return x


def generate_snapshots(scenario: SourceScenario, geometry: ArrayGeometry,
                       num_snapshots: int, seed: int) -> SnapshotMatrix:
    rng = make_rng(seed, "snapshots")
    x = snapshot_blocks(scenario, geometry, 1, num_snapshots, rng)[0]
    return SnapshotMatrix(x, scenario, seed)


def sample_covariance(snapshots) -> np.ndarray:
    """``X X^H / T``; accepts a SnapshotMatrix, an ``N x T`` array or a stack of them."""
    x = snapshots.samples if isinstance(snapshots, SnapshotMatrix) else np.asarray(snapshots)
    t = x.shape[-1]
    r = x @ np.conj(np.swapaxes(x, -1, -2)) / t
    return 0.5 * (r + np.conj(np.swapaxes(r, -1, -2)))
