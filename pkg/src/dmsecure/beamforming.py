"""Matched-filter precoding, null-space AN projection, power allocation and secrecy rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .array_model import ArrayGeometry, steering_ula

INV_PHI = (math.sqrt(5) - 1) / 2


class NoNullSpaceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DmBeamformer:
    precoder: np.ndarray
    an_basis: np.ndarray
    design_angles: tuple[float, float] | None = None

    @property
    def num_antennas(self) -> int:
        return self.precoder.size


@dataclass(frozen=True)
class PowerAllocation:
    beta: float
    total_power: float = 1.0
    noise_power: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if not self.total_power > 0:
            raise ValueError("total power must be positive")
        if not self.noise_power > 0:
            raise ValueError("noise power must be positive")

    @classmethod
    def from_snr(cls, beta: float, snr_db: float) -> "PowerAllocation":
        return cls(beta, 10 ** (snr_db / 10), 1.0)


@dataclass(frozen=True)
class LinkBudget:
    sinr_desired: float
    sinr_eve: float
    secrecy_rate_bits: float


def secrecy_rate(sinr_desired, sinr_eve):
    return np.maximum(0.0, np.log2(1 + sinr_desired) - np.log2(1 + sinr_eve))


def mf_precoder(h_d: np.ndarray) -> np.ndarray:
    h = np.asarray(h_d, dtype=complex)
    norm = np.linalg.norm(h)
    if not norm > 0:
        raise ValueError("channel must be non-zero")
    return h / norm


def nsp_projector(h_d: np.ndarray) -> np.ndarray:
    """Orthonormal basis (``N x (N-1)``) of the orthogonal complement of ``h_d``."""
    h = np.asarray(h_d, dtype=complex).ravel()
    if h.size < 2:
        raise NoNullSpaceError("a single antenna has no null space")
    basis = null_space(h.conj()[None, :])
    if basis.shape[1] != h.size - 1:
        raise NoNullSpaceError("channel must be non-zero")
    return basis


def design_beamformer(geometry: ArrayGeometry, desired_deg: float,
                      eve_deg: float | None = None) -> DmBeamformer:
    """MF + NSP design from (possibly measured) angles."""
    h = steering_ula(geometry, desired_deg)
    return DmBeamformer(mf_precoder(h), nsp_projector(h), (desired_deg, eve_deg))


def _gains(bf: DmBeamformer, h: np.ndarray) -> tuple[float, float]:
    """(|h^H v|^2, ||h^H T||^2)"""
    h = np.asarray(h, dtype=complex)
    return float(abs(np.vdot(h, bf.precoder)) ** 2), float(np.sum(np.abs(h.conj() @ bf.an_basis) ** 2))


def sinr(bf: DmBeamformer, beta, total_power: float, noise_power: float, h: np.ndarray):
    """SINR at a receiver with channel ``h``; ``beta`` may be an array.

    AN is spread evenly over the ``N - 1`` basis directions so that its total
    power is ``(1 - beta) P``.
    """
    sig, leak = _gains(bf, h)
    beta = np.asarray(beta, dtype=float)
    an_dirs = bf.an_basis.shape[1]
    return beta * total_power * sig / ((1 - beta) * total_power * leak / an_dirs + noise_power)


def link_budget(bf: DmBeamformer, pa: PowerAllocation, h_d: np.ndarray, h_e: np.ndarray) -> LinkBudget:
    sd = float(sinr(bf, pa.beta, pa.total_power, pa.noise_power, h_d))
    se = float(sinr(bf, pa.beta, pa.total_power, pa.noise_power, h_e))
    return LinkBudget(sd, se, float(secrecy_rate(sd, se)))


def secrecy_rate_curve(bf: DmBeamformer, betas, total_power: float, noise_power: float,
                       h_d: np.ndarray, h_e: np.ndarray) -> np.ndarray:
    sd = sinr(bf, betas, total_power, noise_power, h_d)
    se = sinr(bf, betas, total_power, noise_power, h_e)
    return secrecy_rate(sd, se)


def golden_section_max(f, a: float, b: float, tol: float = 1e-6) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def opa(bf: DmBeamformer, total_power: float, noise_power: float, h_d: np.ndarray,
        h_e: np.ndarray, grid_points: int = 1001, tol: float = 1e-6) -> tuple[float, LinkBudget]:
    """Secrecy-rate maximising power split.

    Coarse search on a uniform beta grid, then golden-section refinement in
    the bracket around the best grid point.  The refined point is kept only
    if it is at least as good as the grid optimum.
    """
    grid = np.linspace(0.0, 1.0, grid_points)
    sr = secrecy_rate_curve(bf, grid, total_power, noise_power, h_d, h_e)
    i = int(np.argmax(sr))
    best_beta, best_sr = float(grid[i]), float(sr[i])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]

    def f(b):
        return float(secrecy_rate_curve(bf, b, total_power, noise_power, h_d, h_e))

    b_ref, sr_ref = golden_section_max(f, float(lo), float(hi), tol)
    if sr_ref > best_sr:
        best_beta, best_sr = b_ref, sr_ref
    pa = PowerAllocation(best_beta, total_power, noise_power)
    return best_beta, link_budget(bf, pa, h_d, h_e)


def pa_gain_percent(sr_opa: float, sr_fixed: float) -> float:
    """Relative gain of OPA over a fixed split, in percent; NaN when undefined."""
    if not sr_fixed > 0:
        return math.nan
    return 100.0 * (sr_opa - sr_fixed) / sr_fixed


def transmit_samples(bf: DmBeamformer, pa: PowerAllocation, num_symbols: int,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw transmit vectors ``sqrt(beta P) v x + sqrt((1-beta) P) T z``.

    Returns ``(tx, symbols, an)`` with ``tx`` of shape ``(N, num_symbols)``.
    """
    n_an = bf.an_basis.shape[1]
    x = (rng.standard_normal(num_symbols) + 1j * rng.standard_normal(num_symbols)) / math.sqrt(2)
    z = (rng.standard_normal((n_an, num_symbols)) + 1j * rng.standard_normal((n_an, num_symbols))) \
        / math.sqrt(2 * n_an)
    tx = math.sqrt(pa.beta * pa.total_power) * np.outer(bf.precoder, x) \
        + math.sqrt((1 - pa.beta) * pa.total_power) * (bf.an_basis @ z)
    return tx, x, z
