"""Direction-of-arrival estimators: Capon, MUSIC and Root-MUSIC."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .array_model import ArrayGeometry, _require_ula, steering_matrix

DEFAULT_GRID_STEP = 0.01
CAPON_LOADING = 1e-6
CAPON_MAX_COND = 1e10
# Roots this close to the unit circle count as "inside".
ROOT_CIRCLE_TOL = 1e-6
# A noiseless double root splits into a pair about sqrt(eps) apart; roots
# closer than this are merged before the angle is read off.
ROOT_MERGE_TOL = 1e-5


class ConditioningError(ValueError):
    pass


class InvalidSourceCountError(ValueError):
    pass


class OutOfRangeRootError(RuntimeError):
    pass


def default_grid(step: float = DEFAULT_GRID_STEP, lo: float = -90.0, hi: float = 90.0) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


@dataclass(frozen=True, eq=False)
class SpatialSpectrum:
    grid_angles_deg: np.ndarray
    values: np.ndarray
    method: str = ""

    def __post_init__(self):
        g = np.asarray(self.grid_angles_deg, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape or g.ndim != 1:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("spectrum values must be finite and non-negative")
        object.__setattr__(self, "grid_angles_deg", g)
        object.__setattr__(self, "values", v)

    @property
    def peak_angle_deg(self) -> float:
        return float(self.grid_angles_deg[np.argmax(self.values)])


@dataclass(frozen=True)
class DoaEstimate:
    angles_deg: tuple[float, ...]
    method: str
    num_sources: int
    dropped_roots: int = 0


class Peaks(NamedTuple):
    angles_deg: list[float]
    degraded: bool


def _check_cov(cov: np.ndarray, geometry: ArrayGeometry) -> np.ndarray:
    cov = np.asarray(cov, dtype=complex)
    n = geometry.num_elements
    if cov.shape[-2:] != (n, n):
        raise ValueError(f"covariance must be {n}x{n} for this array, got {cov.shape[-2:]}")
    return cov


def _canonical_phase(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so that its first non-negligible entry is real positive."""
    mag = np.abs(vecs)
    tol = 1e-12 * mag.max(axis=-2, keepdims=True)
    first = np.argmax(mag > tol, axis=-2)
    pivot = np.take_along_axis(vecs, first[..., None, :], axis=-2)
    return vecs * (np.abs(pivot) / pivot)


def noise_subspace(cov: np.ndarray, num_sources: int) -> np.ndarray:
    """Eigenvectors of the ``N - q`` smallest eigenvalues (works on stacks)."""
    n = cov.shape[-1]
    if not 0 <= num_sources < n:
        raise InvalidSourceCountError(f"need 0 <= q < N={n}, got q={num_sources}")
    _, vecs = np.linalg.eigh(cov)
    return _canonical_phase(vecs[..., : n - num_sources])


def capon_spectrum(cov, geometry: ArrayGeometry, grid=None) -> SpatialSpectrum:
    cov = _check_cov(cov, geometry)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    n = geometry.num_elements
    r = 0.5 * (cov + cov.conj().T)
    if np.linalg.cond(r) > CAPON_MAX_COND:
        load = CAPON_LOADING * np.trace(r).real / n
        r = r + load * np.eye(n)
        if not load > 0 or np.linalg.cond(r) > CAPON_MAX_COND / CAPON_LOADING:
            raise ConditioningError("covariance is singular even after diagonal loading")
    a = steering_matrix(geometry, grid)
    denom = np.einsum("ng,ng->g", a.conj(), np.linalg.solve(r, a)).real
    return SpatialSpectrum(grid, 1.0 / denom, "capon")


def music_spectrum(cov, geometry: ArrayGeometry, num_sources: int, grid=None) -> SpatialSpectrum:
    cov = _check_cov(cov, geometry)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    en = noise_subspace(cov, num_sources)
    a = steering_matrix(geometry, grid)
    proj = en.conj().T @ a
    return SpatialSpectrum(grid, 1.0 / np.sum(np.abs(proj) ** 2, axis=0), "music")


def find_peaks(spectrum: SpatialSpectrum, q: int) -> Peaks:
    """The ``q`` largest strict local maxima, returned in ascending angle order.

    Ties go to the smaller angle.  When the spectrum has fewer than ``q``
    interior maxima the remainder is filled from the global grid ranking and
    the result is flagged as degraded.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    g, v = spectrum.grid_angles_deg, spectrum.values
    interior = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1
    ranked = interior[np.lexsort((g[interior], -v[interior]))]
    chosen = list(ranked[:q])
    degraded = len(chosen) < q
    if degraded:
        taken = set(chosen)
        for i in np.lexsort((g, -v)):
            if len(chosen) == q:
                break
            if i not in taken:
                chosen.append(i)
    return Peaks(sorted(float(g[i]) for i in chosen), degraded)


def polynomial_coefficients(noise_vecs: np.ndarray) -> np.ndarray:
    """Root-MUSIC polynomial, highest power first (degree ``2(N-1)``).

    Coefficient of ``z^m`` is the sum of the m-th diagonal of ``E_n E_n^H``.
    """
    c = noise_vecs @ np.conj(np.swapaxes(noise_vecs, -1, -2))
    n = c.shape[-1]
    return np.stack([np.trace(c, offset=m, axis1=-2, axis2=-1)
                     for m in range(n - 1, -n, -1)], axis=-1)


def polynomial_roots(coeffs: np.ndarray) -> list[np.ndarray]:
    """Roots of each row of ``coeffs`` via batched companion-matrix eigenvalues."""
    coeffs = np.atleast_2d(coeffs)
    deg = coeffs.shape[-1] - 1
    lead = coeffs[:, 0]
    scale = np.abs(coeffs).max(axis=1)
    regular = np.abs(lead) > 1e-12 * scale
    out: list[np.ndarray | None] = [None] * coeffs.shape[0]
    idx = np.flatnonzero(regular)
    if idx.size and deg > 0:
        comp = np.zeros((idx.size, deg, deg), dtype=complex)
        comp[:, 0, :] = -coeffs[idx, 1:] / lead[idx, None]
        comp[:, np.arange(1, deg), np.arange(deg - 1)] = 1.0
        roots = np.linalg.eigvals(comp)
        for j, i in enumerate(idx):
            out[i] = roots[j]
    for i in np.flatnonzero(~regular):
        out[i] = np.roots(coeffs[i])
    return out


def select_roots(roots: np.ndarray, num_sources: int, scale: float) -> tuple[list[float], int]:
    """Pick source roots and convert them to angles.

    ``scale`` is ``lambda / (2 pi d)``.  Returns the accepted angles (fewer
    than ``num_sources`` if candidates run out) and the number of dropped
    out-of-range roots.
    """
    cand = roots[np.abs(roots) < 1 + ROOT_CIRCLE_TOL]
    cand = cand[np.argsort(-np.abs(cand), kind="stable")]
    used = np.zeros(cand.size, dtype=bool)
    angles: list[float] = []
    dropped = 0
    for i in range(cand.size):
        if len(angles) == num_sources:
            break
        if used[i]:
            continue
        cluster = roots[np.abs(roots - cand[i]) < ROOT_MERGE_TOL]
        used |= np.abs(cand - cand[i]) < ROOT_MERGE_TOL
        s = np.angle(np.mean(cluster / np.abs(cluster))) * scale
        if abs(s) > 1:
            dropped += 1
            continue
        angles.append(math.degrees(math.asin(s)))
    return angles, dropped


def root_music_batch(covs, geometry: ArrayGeometry, num_sources: int) -> tuple[np.ndarray, np.ndarray]:
    """Root-MUSIC over a stack of covariances.

    Returns ``(angles, dropped)`` where ``angles`` has shape ``(K, q)``
    (sorted rows, NaN-filled when too few valid roots were found) and
    ``dropped`` counts out-of-range roots per covariance.
    """
    covs = _check_cov(covs, geometry)
    if covs.ndim == 2:
        covs = covs[None]
    d = _require_ula(geometry)
    n = geometry.num_elements
    if not 1 <= num_sources < n:
        raise InvalidSourceCountError(f"need 1 <= q < N={n}, got q={num_sources}")
    scale = geometry.wavelength / (2 * np.pi * d)
    coeffs = polynomial_coefficients(noise_subspace(covs, num_sources))
    k = covs.shape[0]
    angles = np.full((k, num_sources), np.nan)
    dropped = np.zeros(k, dtype=int)
    for i, roots in enumerate(polynomial_roots(coeffs)):
        found, dropped[i] = select_roots(roots, num_sources, scale)
        angles[i, : len(found)] = sorted(found)
    return angles, dropped


def root_music(cov, geometry: ArrayGeometry, num_sources: int) -> DoaEstimate:
    angles, dropped = root_music_batch(cov, geometry, num_sources)
    if np.any(np.isnan(angles[0])):
        raise OutOfRangeRootError(
            f"only {np.count_nonzero(~np.isnan(angles[0]))} of {num_sources} roots map to valid angles")
    return DoaEstimate(tuple(angles[0].tolist()), "root-music", num_sources, int(dropped[0]))
