import math

import pytest

from dmsecure.cli import main, output_paths
from dmsecure.config import (ConfigError, ExperimentConfig, config_from_csv, load_config,
                             parse_override, validate)
from dmsecure.experiments import CsvTable


def test_defaults_validate():
    for exp in ("error-hist", "doa-rmse", "sr-vs-snr", "pa-gain", "sinr-map"):
        cfg = ExperimentConfig(experiment=exp)
        validate(cfg)
    assert ExperimentConfig().seed == 2018 and ExperimentConfig().trials == 500


@pytest.mark.parametrize("text,key,value", [
    ("doa.snr_db=5", "doa.snr_db", 5),
    ("link.k_list=[1, 20]", "link.k_list", [1, 20]),
    ("spwt.mode=3d", "spwt.mode", "3d"),
    ("spwt.mode='2d'", "spwt.mode", "2d"),
    ("link.perfect=true", "link.perfect", True),
    ("doa.snr_db=inf", "doa.snr_db", math.inf),
])
def test_parse_override(text, key, value):
    assert parse_override(text) == (key, value)


def test_overrides_are_typed():
    cfg = load_config(None, "doa-rmse", ["doa.snr_list=[0, 5]", "trials=3", "doa.snr_db=2"])
    assert cfg.doa.snr_list == [0, 5] and cfg.trials == 3 and isinstance(cfg.doa.snr_db, float)


@pytest.mark.parametrize("override", ["nosuch=1", "doa.nosuch=1", "doa=1", "trials=1.5",
                                      "doa.k_list=3", "link.perfect=maybe", "bad"])
def test_bad_overrides(override):
    with pytest.raises(ConfigError):
        load_config(None, "doa-rmse", [override])


@pytest.mark.parametrize("exp,override,param", [
    ("sinr-map", "spwt.range=[0, 0, 5]", "spwt.range"),
    ("sinr-map", "spwt.azimuth=[0, 180, 0]", "spwt.azimuth"),
    ("sinr-map", "spwt.mode='4d'", "spwt.mode"),
    ("sr-vs-snr", "link.eve_deg=30.2", "link.eve_deg"),
    ("pa-gain", "pa.beta_list=[0, 0.5]", "pa.beta_list"),
    ("doa-rmse", "doa.k_list=[]", "doa.k_list"),
    ("error-hist", "doa.true_angle_deg=90", "doa.true_angle_deg"),
    ("error-hist", "seed=-1", "seed"),
])
def test_validation_names_parameter(exp, override, param):
    cfg = load_config(None, exp, [override])
    with pytest.raises(ConfigError) as info:
        validate(cfg)
    assert info.value.param == param


def test_toml_file_and_override_precedence(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('seed = 7\ntrials = 9\n[doa]\nsnr_db = 3.0\nk_list = [1, 2]\n')
    cfg = load_config(p, "error-hist", ["doa.snr_db=4"])
    assert (cfg.seed, cfg.trials, cfg.doa.snr_db, cfg.doa.k_list) == (7, 9, 4.0, [1, 2])


def test_config_round_trip(tmp_path):
    cfg = load_config(None, "pa-gain", ["pa.n_list=[4]", "seed=11"])
    path = tmp_path / "t.csv"
    CsvTable(["a"], [(1,)], [f"config: {cfg.to_json()}"]).write(path)
    back = config_from_csv(path)
    assert back.to_json() == cfg.to_json()
    assert load_config(path).to_json() == cfg.to_json()


def test_config_from_csv_without_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigError):
        config_from_csv(path)


def test_output_paths(tmp_path):
    one = [CsvTable(["a"], [], name="x")]
    three = [CsvTable(["a"], [], name=n) for n in ("p", "q", "r")]
    assert output_paths(tmp_path / "m.csv", one) == [tmp_path / "m.csv"]
    assert [p.name for p in output_paths(tmp_path / "m.csv", three)] == ["m_p.csv", "m_q.csv", "m_r.csv"]


def test_cli_config_error_exit_code(capsys):
    assert main(["sinr-map", "spwt.range=[0, 0, 5]"]) == 2
    assert "spwt.range" in capsys.readouterr().err


def test_cli_stdout(capsys):
    assert main(["error-hist", "doa.num_samples=50", "doa.num_bins=5", "--seed", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "# dmsecure 0.1.0 error-hist"
    assert out[1].startswith("# config: ")
    header = next(line for line in out if not line.startswith("#"))
    assert header == "bin_left,bin_right,density"


def test_cli_writes_lf_utf8(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["error-hist", "doa.num_samples=20", "doa.num_bins=4", "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    raw.decode("utf-8")
    assert sum(1 for line in raw.decode().splitlines() if not line.startswith("#")) == 5


def test_cli_reruns_from_csv_header(tmp_path):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    main(["error-hist", "doa.num_samples=30", "doa.num_bins=4", "--seed", "5", "--out", str(first)])
    main(["error-hist", "--config", str(first), "--out", str(second)])
    assert first.read_bytes() == second.read_bytes()
