"""DOA error training sets, histogram density and grid-posterior Bayesian learning.

The learned Gaussian error model is used as a bias correction: a refined
angle is the mean of ``K`` repeated Root-MUSIC measurements minus the
posterior mean of the error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .array_model import ArrayGeometry, SourceScenario, sample_covariance, snapshot_blocks
from .doa import root_music_batch
from .rng import make_rng

DEGENERATE_BIN_WIDTH = 1e-6
SIGMA_MIN = 1e-3
DEFAULT_GRID_POINTS = 400


class PriorSupportError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ErrorSampleSet:
    errors_deg: np.ndarray
    true_angle_deg: float
    snr_db: float
    num_snapshots: int
    seed: int | None = None
    dropped: int = 0

    def __post_init__(self):
        e = np.asarray(self.errors_deg, dtype=float).ravel()
        if e.size < 1:
            raise ValueError("an error sample set needs at least one sample")
        if not np.all(np.isfinite(e)):
            raise ValueError("error samples must be finite")
        object.__setattr__(self, "errors_deg", e)

    @property
    def size(self) -> int:
        return self.errors_deg.size


@dataclass(frozen=True, eq=False)
class HistogramDensity:
    bin_edges_deg: np.ndarray
    densities: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges_deg)

    @property
    def mass(self) -> np.ndarray:
        return self.densities * self.widths


@dataclass(frozen=True, eq=False)
class GaussianErrorModel:
    """Posterior summary of the DOA error distribution.

    ``mean_std_deg`` is the posterior standard deviation of the mean, i.e.
    how well the bias is known.
    """

    mean_deg: float
    std_deg: float
    mean_std_deg: float = 0.0
    mu_grid: np.ndarray | None = None
    sigma_grid: np.ndarray | None = None
    posterior: np.ndarray | None = None
    prior: str = "sigma"

    @property
    def grid_resolution(self) -> float:
        if self.mu_grid is None or self.mu_grid.size < 2:
            return 0.0
        return float(self.mu_grid[1] - self.mu_grid[0])


def measure_angles(true_angle_deg: float, num_measurements: int, num_snapshots: int,
                   snr_db: float, geometry: ArrayGeometry, rng: np.random.Generator):
    """Independent single-source Root-MUSIC measurements, one per M-snapshot block.

    Returns ``(estimates, dropped_roots)``; failed measurements are NaN.
    """
    scenario = SourceScenario.from_snr([true_angle_deg], snr_db)
    x = snapshot_blocks(scenario, geometry, num_measurements, num_snapshots, rng)
    angles, dropped = root_music_batch(sample_covariance(x), geometry, 1)
    return angles[:, 0], dropped


def collect_training_set(true_angle_deg: float, num_samples: int, num_snapshots: int,
                         snr_db: float, geometry: ArrayGeometry, seed: int) -> ErrorSampleSet:
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    if num_snapshots < 2:
        raise ValueError("num_snapshots must be >= 2")
    est, _ = measure_angles(true_angle_deg, num_samples, num_snapshots, snr_db, geometry,
                            make_rng(seed, "training-set"))
    ok = np.isfinite(est)
    return ErrorSampleSet(est[ok] - true_angle_deg, true_angle_deg, snr_db, num_snapshots,
                          seed, dropped=int(np.count_nonzero(~ok)))


def histogram(samples, num_bins: int) -> HistogramDensity:
    """Equal-width density histogram over ``[min, max]`` of the samples.

    Spreads narrower than the degenerate bin width collapse to one bin of
    that width centred on the sample mean.
    """
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    e = samples.errors_deg if isinstance(samples, ErrorSampleSet) else np.asarray(samples, float)
    lo, hi = float(e.min()), float(e.max())
    if hi - lo < DEGENERATE_BIN_WIDTH:
        c = float(e.mean())
        edges = np.array([c - DEGENERATE_BIN_WIDTH / 2, c + DEGENERATE_BIN_WIDTH / 2])
        return HistogramDensity(edges, np.array([1.0 / (edges[1] - edges[0])]))
    counts, edges = np.histogram(e, bins=num_bins, range=(lo, hi))
    return HistogramDensity(edges, counts / (e.size * np.diff(edges)))


def bl_fit(samples, mu_range=None, sigma_range=None, num_points: int = DEFAULT_GRID_POINTS,
           prior: str = "sigma") -> GaussianErrorModel:
    """Grid posterior over (mean, std) of Gaussian errors under uniform priors.

    Args:
        samples: ErrorSampleSet or array of errors in degrees.
        mu_range: (lo, hi) support of the uniform prior on the mean.  Defaults
            to the sample mean +/- max(5 * sample std, 2).
        sigma_range: (lo, hi) support for the std.  Defaults to
            [0.001, max(5 * sample std, 2)].
        num_points: grid points per axis.
        prior: "sigma" for a prior uniform in the std, "variance" for one
            uniform in the variance.

    Returns:
        GaussianErrorModel with posterior means of both parameters.
    """
    e = samples.errors_deg if isinstance(samples, ErrorSampleSet) else np.asarray(samples, float)
    k = e.size
    m = float(e.mean())
    s = float(e.std())
    half = max(5 * s, 2.0)
    mu_lo, mu_hi = mu_range if mu_range is not None else (m - half, m + half)
    sig_lo, sig_hi = sigma_range if sigma_range is not None else (SIGMA_MIN, half)
    if not (np.isfinite([mu_lo, mu_hi, sig_lo, sig_hi]).all() and mu_hi > mu_lo and sig_hi > sig_lo):
        raise ValueError("prior ranges must be finite with positive width")
    if sig_lo < SIGMA_MIN:
        raise ValueError(f"sigma range must stay above {SIGMA_MIN}")
    if prior not in ("sigma", "variance"):
        raise ValueError("prior must be 'sigma' or 'variance'")

    mu = np.linspace(mu_lo, mu_hi, num_points)
    sigma = np.linspace(sig_lo, sig_hi, num_points)
    # sum of squares around mu from sufficient statistics
    ss = k * (s**2 + (m - mu[:, None]) ** 2)
    logp = -k * np.log(sigma)[None, :] - ss / (2 * sigma[None, :] ** 2)
    if prior == "variance":
        logp = logp + np.log(sigma)[None, :]
    post = np.exp(logp - logsumexp(logp))
    post /= post.sum()

    p_mu = post.sum(axis=1)
    p_sigma = post.sum(axis=0)
    if p_mu[0] + p_mu[-1] > 0.5 or p_sigma[-1] > 0.5:
        raise PriorSupportError("posterior mass piles up on the prior boundary; widen the ranges")
    mean = float(p_mu @ mu)
    return GaussianErrorModel(
        mean_deg=mean,
        std_deg=float(p_sigma @ sigma),
        mean_std_deg=math.sqrt(max(float(p_mu @ mu**2) - mean**2, 0.0)),
        mu_grid=mu,
        sigma_grid=sigma,
        posterior=post,
        prior=prior,
    )


def refine_angle(measurements_deg, model: GaussianErrorModel) -> float:
    """Bias-corrected angle: mean of the measurements minus the learned error mean."""
    meas = np.asarray(measurements_deg, dtype=float)
    meas = meas[np.isfinite(meas)]
    if meas.size == 0:
        return math.nan
    return float(meas.mean() - model.mean_deg)


def rmse(estimates_deg, truth_deg: float) -> float:
    est = np.asarray(estimates_deg, dtype=float)
    if est.size == 0:
        raise ValueError("rmse of an empty set")
    return float(np.sqrt(np.mean((est - truth_deg) ** 2)))


def calibrate(true_angle_deg: float, snr_db: float, num_snapshots: int, geometry: ArrayGeometry,
              size: int, seed: int) -> GaussianErrorModel:
    """Learn the error model from a calibration training set at a known angle."""
    tds = collect_training_set(true_angle_deg, size, num_snapshots, snr_db, geometry, seed)
    return bl_fit(tds)
