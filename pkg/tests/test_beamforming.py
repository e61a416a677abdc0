import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_unit
from dmsecure.array_model import ArrayGeometry, steering_matrix, steering_ula
from dmsecure.beamforming import (LinkBudget, NoNullSpaceError, PowerAllocation,
                                  design_beamformer, golden_section_max, link_budget, mf_precoder,
                                  nsp_projector, opa, pa_gain_percent, secrecy_rate,
                                  secrecy_rate_curve, sinr, transmit_samples)
from dmsecure.rng import make_rng


def test_mf_examples(rng):
    h = random_unit(rng, 8)
    v = mf_precoder(h)
    np.testing.assert_allclose(v, h)
    assert abs(np.vdot(h, v)) == pytest.approx(1.0)
    np.testing.assert_allclose(mf_precoder(3.7 * h), v)
    with pytest.raises(ValueError):
        mf_precoder(np.zeros(4))


def test_mf_beam_peaks_at_design(ula8):
    v = mf_precoder(steering_ula(ula8, 30.0))
    grid = np.arange(-89.0, 89.0, 0.01)
    gain = np.abs(steering_matrix(ula8, grid).conj().T @ v)
    assert abs(grid[np.argmax(gain)] - 30.0) <= 0.01 + 1e-9


def test_nsp_two_elements():
    t = nsp_projector(np.array([1, 1]) / math.sqrt(2))
    ref = np.array([1, -1]) / math.sqrt(2)
    assert t.shape == (2, 1)
    assert abs(abs(np.vdot(ref, t[:, 0])) - 1) < 1e-12


def test_nsp_single_antenna():
    with pytest.raises(NoNullSpaceError):
        nsp_projector(np.array([1.0]))


@given(st.integers(2, 64), st.integers(0, 2**32))
def test_nsp_contract(n, seed):
    h = random_unit(np.random.default_rng(seed), n)
    t = nsp_projector(h)
    assert t.shape == (n, n - 1)
    assert np.max(np.abs(h.conj() @ t)) < 1e-10
    assert np.max(np.abs(t.conj().T @ t - np.eye(n - 1))) < 1e-10
    proj = np.outer(h, h.conj()) + t @ t.conj().T
    assert np.max(np.abs(proj - np.eye(n))) < 1e-9


def test_power_allocation_validation():
    with pytest.raises(ValueError):
        PowerAllocation(1.2)
    with pytest.raises(ValueError):
        PowerAllocation(0.5, noise_power=0)
    assert PowerAllocation.from_snr(0.5, 10.0).total_power == pytest.approx(10.0)


def test_exact_design_gives_clean_desired_link(ula8):
    bf = design_beamformer(ula8, 30.0, -20.0)
    h_d = steering_ula(ula8, 30.0)
    assert np.sum(np.abs(h_d.conj() @ bf.an_basis) ** 2) <= 1e-20
    pa = PowerAllocation.from_snr(0.3, 10.0)
    lb = link_budget(bf, pa, h_d, steering_ula(ula8, -20.0))
    assert lb.sinr_desired == pytest.approx(0.3 * 10.0, rel=1e-12)


def test_identical_links_zero_secrecy(ula8):
    bf = design_beamformer(ula8, 12.0)
    h = steering_ula(ula8, 14.0)
    assert link_budget(bf, PowerAllocation(0.5, 5.0), h, h).secrecy_rate_bits == 0.0


def symbol_level_sinr(bf, pa, h, num_symbols, rng):
    """Oracle: SINR from explicit transmit samples and receiver noise."""
    tx, x, _ = transmit_samples(bf, pa, num_symbols, rng)
    y_sig = math.sqrt(pa.beta * pa.total_power) * np.vdot(h, bf.precoder) * x
    y = h.conj() @ tx
    noise = math.sqrt(pa.noise_power / 2) * (rng.standard_normal(num_symbols)
                                             + 1j * rng.standard_normal(num_symbols))
    interference = y - y_sig + noise
    return np.mean(np.abs(y_sig) ** 2) / np.mean(np.abs(interference) ** 2)


def test_closed_form_matches_symbol_simulation(ula8):
    # design angles off by a degree so that AN leaks into both receivers
    bf = design_beamformer(ula8, 31.0, -21.0)
    pa = PowerAllocation.from_snr(0.5, 10.0)
    rng = make_rng(2018, "symbol-sim")
    for theta in (30.0, -20.0):
        h = steering_ula(ula8, theta)
        closed = float(sinr(bf, pa.beta, pa.total_power, pa.noise_power, h))
        sim = symbol_level_sinr(bf, pa, h, 100_000, rng)
        assert sim == pytest.approx(closed, rel=0.03)


@pytest.mark.parametrize("beta", [0.0, 0.2, 0.5, 0.8, 1.0])
def test_transmit_power_conserved(ula8, beta):
    bf = design_beamformer(ula8, 30.0)
    pa = PowerAllocation(beta, total_power=2.5)
    tx, _, _ = transmit_samples(bf, pa, 100_000, make_rng(1, "power"))
    assert np.mean(np.sum(np.abs(tx) ** 2, axis=0)) == pytest.approx(2.5, rel=0.01)


@given(st.floats(0, 100), st.floats(0, 100))
def test_secrecy_rate_nonnegative(a, b):
    sr = secrecy_rate(a, b)
    assert sr >= 0
    if a > b:
        assert sr == pytest.approx(math.log2((1 + a) / (1 + b)))


def test_golden_section_quadratic():
    x, fx = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0, 1e-8)
    assert x == pytest.approx(0.3, abs=1e-7) and fx == pytest.approx(0.0, abs=1e-12)


def test_opa_orthogonal_eve_uses_all_power(ula8):
    # sin 30 - sin(-30) = 1 = 4 * (2 / N): the two steering vectors are orthogonal
    bf = design_beamformer(ula8, 30.0, -30.0)
    h_d, h_e = steering_ula(ula8, 30.0), steering_ula(ula8, -30.0)
    assert abs(np.vdot(h_e, bf.precoder)) < 1e-12
    betas = np.linspace(0, 1, 101)
    sr = secrecy_rate_curve(bf, betas, 10.0, 1.0, h_d, h_e)
    assert np.all(np.diff(sr) > 0)
    beta_star, lb = opa(bf, 10.0, 1.0, h_d, h_e)
    assert beta_star == pytest.approx(1.0, abs=1e-6)
    sr99 = float(secrecy_rate_curve(bf, 0.99, 10.0, 1.0, h_d, h_e))
    assert pa_gain_percent(lb.secrecy_rate_bits, sr99) < 1.0


def random_scenario(rng, n=8):
    g = ArrayGeometry.ula(n)
    td, te = rng.uniform(-70, 70, 2)
    bf = design_beamformer(g, td + rng.normal(0, 2), te + rng.normal(0, 2))
    p = 10 ** (rng.uniform(-10, 20) / 10)
    return bf, p, steering_ula(g, td), steering_ula(g, te)


@given(st.integers(0, 2**32))
def test_opa_dominates_grid(seed):
    bf, p, h_d, h_e = random_scenario(np.random.default_rng(seed))
    beta_star, lb = opa(bf, p, 1.0, h_d, h_e)
    assert 0 <= beta_star <= 1
    grid = secrecy_rate_curve(bf, np.linspace(0, 1, 1001), p, 1.0, h_d, h_e)
    assert lb.secrecy_rate_bits >= grid.max() - 1e-9
    assert isinstance(lb, LinkBudget)


def test_pa_gain_examples():
    assert pa_gain_percent(1.0, 1.0) == 0.0
    assert pa_gain_percent(2.0, 1.0) == 100.0
    assert math.isnan(pa_gain_percent(1.0, 0.0))


def test_sinr_accepts_beta_array(ula8):
    bf = design_beamformer(ula8, 10.0)
    out = sinr(bf, np.array([0.0, 0.5, 1.0]), 1.0, 1.0, steering_ula(ula8, 10.0))
    np.testing.assert_allclose(out, [0.0, 0.5, 1.0])
