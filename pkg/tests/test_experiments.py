import math

import numpy as np
import pytest

from dmsecure.array_model import ArrayGeometry, steering_ula
from dmsecure.beamforming import secrecy_rate
from dmsecure.config import ConfigError, load_config
from dmsecure.experiments import CsvTable, fmt, run


def table(exp, *overrides):
    return run(load_config(None, exp, list(overrides)))


def test_fmt():
    assert fmt(True) == "true" and fmt(np.int64(3)) == "3"
    assert fmt(0.1) == "0.1" and fmt(1 / 3) == "0.333333333" and fmt(math.nan) == "nan"


def test_table_must_be_rectangular():
    with pytest.raises(ValueError):
        CsvTable(["a", "b"], [(1,)])


def test_error_hist_noiseless_single_bin():
    (t,) = table("error-hist", "doa.snr_db=inf", "doa.num_samples=200")
    assert len(t.rows) == 1
    lo, hi, dens = t.rows[0]
    assert abs(lo) < 1e-6 and abs(hi) < 1e-6 and (hi - lo) * dens == pytest.approx(1.0)


def test_error_hist_integrates_to_one():
    (t,) = table("error-hist", "doa.num_samples=700", "doa.num_bins=15")
    mass = sum((hi - lo) * d for lo, hi, d in t.rows)
    assert len(t.rows) == 15 and mass == pytest.approx(1.0, abs=1e-9)
    assert any(c.startswith("samples: ") for c in t.comments)


def test_doa_rmse_high_snr_floor():
    (t,) = table("doa-rmse", "trials=40", "doa.snr_list=[60]", "doa.k_list=[1, 20]",
                 "doa.calibration_size=200")
    assert t.header == ["snr_db", "K", "rmse_deg", "trials"]
    assert len(t.rows) == 2 and all(r[2] < 0.05 for r in t.rows)


def test_doa_rmse_single_point():
    (t,) = table("doa-rmse", "trials=5", "doa.snr_list=[10]", "doa.k_list=[3]",
                 "doa.calibration_size=50")
    assert len(t.rows) == 1 and t.rows[0][3] == 5


def test_sr_perfect_matches_analytic():
    (t,) = table("sr-vs-snr", "trials=3", "link.perfect=true", "link.snr_list=[0, 10]")
    g = ArrayGeometry.ula(8)
    h_e = steering_ula(g, -20.0)
    h_d = steering_ula(g, 30.0)
    leak = 1 - abs(np.vdot(h_d, h_e)) ** 2  # AN power fraction seen by eve
    for snr, k, sr, std, n in t.rows:
        p = 10 ** (snr / 10)
        sd = 0.5 * p
        se = 0.5 * p * abs(np.vdot(h_e, h_d)) ** 2 / (0.5 * p * leak / 7 + 1)
        assert sr == pytest.approx(float(secrecy_rate(sd, se)), rel=1e-9)
        assert std == pytest.approx(0.0, abs=1e-12) and n == 3


def test_sr_nonnegative():
    (t,) = table("sr-vs-snr", "trials=20", "doa.calibration_size=100")
    assert t.header == ["snr_db", "K", "sr_mean_bits", "sr_std", "trials"]
    assert all(r[2] >= 0 for r in t.rows)


def test_pa_gain_dominance():
    (t,) = table("pa-gain", "trials=20", "pa.n_list=[4, 8]", "doa.calibration_size=100")
    assert t.header == ["n_antennas", "snr_db", "beta_fixed", "sr_fixed", "sr_opa", "gain_percent"]
    assert len(t.rows) == 6
    assert all(r[5] >= -0.01 for r in t.rows)


def test_pa_gain_useless_an():
    # orthogonal eavesdropper and accurate angles: full power to the message is optimal
    (t,) = table("pa-gain", "trials=20", "pa.n_list=[8]", "pa.snr_list=[40]",
                 "pa.beta_list=[0.99]", "link.eve_deg=-30", "doa.calibration_size=100")
    assert abs(t.rows[0][5]) < 1.0


def test_sinr_map_2d_peak():
    (t,) = table("sinr-map", "spwt.assignments=3", "spwt.azimuth=[0, 180, 5]",
                 "spwt.range=[0, 1500, 50]")
    assert t.header == ["azimuth_deg", "range_m", "sinr_db"]
    best = max(t.rows, key=lambda r: r[2])
    assert best[:2] == (45.0, 500.0)


def test_sinr_map_3d_three_consistent_slices():
    tables = table("sinr-map", "spwt.mode=3d", "spwt.assignments=2", "spwt.azimuth=[0, 180, 5]",
                   "spwt.elevation=[0, 180, 5]", "spwt.range=[0, 1500, 50]")
    assert [t.name for t in tables] == ["elevation-range", "azimuth-range", "azimuth-elevation"]
    peaks = []
    for t in tables:
        best = max(t.rows, key=lambda r: r[2])
        peaks.append(dict(zip((h.split("_")[0] for h in t.header[:2]), best[:2])))
    merged = {}
    for p in peaks:
        for k, v in p.items():
            merged.setdefault(k, set()).add(v)
    assert merged == {"azimuth": {45.0}, "elevation": {45.0}, "range": {500.0}}


def test_zero_size_axis_rejected():
    with pytest.raises(ConfigError):
        table("sinr-map", "spwt.range=[500, 500, 5]")


@pytest.mark.parametrize("exp,overrides", [
    ("error-hist", ["doa.num_samples=1200"]),
    ("doa-rmse", ["trials=6", "doa.calibration_size=50"]),
    ("sr-vs-snr", ["trials=6", "doa.calibration_size=50"]),
    ("pa-gain", ["trials=4", "pa.n_list=[4]", "doa.calibration_size=50"]),
    ("sinr-map", ["spwt.assignments=4", "spwt.azimuth=[0, 180, 10]", "spwt.range=[0, 1500, 100]"]),
])
def test_worker_count_invariance(exp, overrides):
    cfg = load_config(None, exp, overrides)
    a = [t.to_text() for t in run(cfg, workers=1)]
    b = [t.to_text() for t in run(load_config(None, exp, overrides), workers=3)]
    assert a == b
