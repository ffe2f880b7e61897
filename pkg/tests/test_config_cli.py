import csv
import json
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compressor_ofo.cli import main
from compressor_ofo.compressor import DEFAULT_POLY, DEFAULT_SIN
from compressor_ofo.config import (ConfigError, DemandSpec, RunConfig, default_config_text,
                                   emit_config, parse_config, parse_config_text)
from compressor_ofo.simulation import Scenario, build_plant


def test_default_file_is_the_default_config():
    assert parse_config_text(default_config_text()) == RunConfig()


def test_minimal_config_gets_defaults(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("mode: ofo-adapt\n")
    cfg = parse_config(path)
    assert cfg.mode == "ofo-adapt"
    assert cfg.station.nu == 0.001
    assert cfg.station.delta_fd == 1e-8
    assert cfg.station.rho == (0.017, 0.78)
    assert cfg.station.true_poly == DEFAULT_POLY
    assert cfg.station.true_sin == DEFAULT_SIN


@pytest.mark.parametrize("nu", ["0", "-0.001"])
def test_nonpositive_nu_rejected(nu):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(f"mode: nlp\ncontroller:\n  nu: {nu}\n")
    assert exc.value.field == "controller.nu"
    assert exc.value.line == 3


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("mode: nlp\nscenario:\n  horizon: 100\n  horizn: 200\n")
    assert exc.value.field == "scenario.horizn"
    assert exc.value.line == 4
    assert "line 4" in str(exc.value)


@pytest.mark.parametrize("text,field", [
    ("mode: fast\n", "mode"),
    ("sweep: everything\n", "sweep"),
    ("jobs: 0\n", "jobs"),
    ("seed: 1.5\n", "seed"),
    ("scenario:\n  truth_noise: 0.05\n", "scenario.truth_noise"),
    ("scenario:\n  horizon: abc\n", "scenario.horizon"),
    ("scenario:\n  belief_order: cubic\n", "scenario"),
    ("plant:\n  m_min: 130\n", "plant.m_max"),
    ("plant:\n  true_poly: [[1, 2]]\n", "plant.true_poly"),
    ("plant:\n  mismatch: [[0.9, 4], [0.8, 1], [0.8, 1]]\n", "plant.mismatch"),
    ("plant:\n  rho: [0.001, 0.5]\n", "plant.rho"),
    ("gas:\n  n: 0.9\n", "gas"),
    ("controller:\n  delta_fd: 0\n", "controller.delta_fd"),
    ("demand:\n  segments: [[0, 500]]\n", "demand.segments"),
    ("demand:\n  generator:\n    low: 100\n", "demand.generator"),
    ("output:\n  dump_gp: maybe\n", "output.dump_gp"),
])
def test_invalid_values(text, field):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert exc.value.field == field


def test_bad_yaml_and_missing_file(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config_text("scenario: [\n")
    assert exc.value.line is not None
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.yaml")


def test_m_max_override_propagates():
    cfg = parse_config_text("plant:\n  m_max: 130\n")
    assert cfg.station.m_max == (130.0, 130.0, 130.0)
    assert cfg.station.ofo.m_max == (130.0, 130.0, 130.0)
    assert all(c.m_max == 130.0 for c in build_plant(cfg.scenario, cfg.station))


def test_inline_segments():
    cfg = parse_config_text("demand:\n  segments: [[0, 250], [10, 300]]\n")
    assert cfg.demand.segments == ((0.0, 250.0), (10.0, 300.0))
    assert cfg.demand.profile(cfg.scenario).at(12.0) == 300.0


def test_round_trip_default():
    cfg = RunConfig()
    assert parse_config_text(emit_config(cfg)) == cfg


@settings(max_examples=40, deadline=None)
@given(nu=st.floats(1e-6, 1.0), seed=st.integers(0, 2 ** 31), noise=st.sampled_from([0.0, 0.001, 0.01]),
       order=st.sampled_from(["quadratic", "linear", "constant"]),
       kind=st.sampled_from(["polynomial", "sinusoidal"]),
       m_max=st.floats(110.0, 200.0), segs=st.booleans(), dump=st.booleans())
def test_round_trip_property(nu, seed, noise, order, kind, m_max, segs, dump):
    base = RunConfig()
    cfg = replace(
        base, seed=seed, dump_gp=dump,
        scenario=Scenario(truth_noise=noise, belief_order=order, truth_map_kind=kind, seed=seed),
        station=replace(base.station, nu=nu, m_max=(m_max, m_max, 125.0)),
        demand=DemandSpec(segments=((0.0, 250.0), (25.0, 251.5)) if segs else None, seed=seed))
    assert parse_config_text(emit_config(cfg)) == cfg


def _short_config(tmp_path, extra=""):
    path = tmp_path / "short.yaml"
    path.write_text("scenario:\n  horizon: 75\n" + extra)
    return path


def test_cli_mode_nlp_only(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(_short_config(tmp_path)), "--mode", "nlp",
                 "--out", str(out)]) == 0
    dirs = [d for d in out.iterdir() if d.is_dir()]
    assert [d.name for d in dirs] == ["nlp-polynomial_seed0"]
    assert sorted(p.name for p in dirs[0].iterdir()) == ["metrics.json", "trace.csv"]
    assert "nlp-polynomial" in capsys.readouterr().out


def test_cli_mode_all(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _short_config(tmp_path, "output:\n  dump_gp: true\n")
    assert main(["run", "--config", str(cfg), "--mode", "all", "--seed", "4",
                 "--out", str(out)]) == 0
    names = sorted(d.name for d in out.iterdir() if d.is_dir())
    assert names == ["nlp-polynomial_seed4", "ofo-adapt-polynomial-quadratic_seed4",
                     "ofo-mismatch-polynomial-quadratic_seed4",
                     "ofo-perfect-polynomial-quadratic_seed4"]
    adapt = out / "ofo-adapt-polynomial-quadratic_seed4"
    assert (adapt / "gp_history.csv").is_file()
    dumps = sorted((adapt / "gp").iterdir())
    assert dumps and dumps[0].read_text().startswith("beta=")
    metrics = json.loads((adapt / "metrics.json").read_text())
    assert metrics["scenario"]["seed"] == 4
    assert set(metrics["metrics"]) >= {"integrated_power_J", "mae_demand", "delta_fin"}
    with open(out / "summary_all_seed4.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and float(rows[0]["excess_pct"]) == 0.0
    printed = capsys.readouterr().out
    assert "excess %" in printed and "ofo-adapt-polynomial-quadratic" in printed


def test_cli_sweep(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(_short_config(tmp_path)), "--sweep", "mismatch",
                 "--jobs", "2", "--out", str(out)]) == 0
    with open(out / "sweep_mismatch_seed0.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 12
    assert {"mae_c1_m70", "dinit_c3_m120", "dfin_c2_m95", "mae_demand"} <= set(rows[0])
    assert len([d for d in out.iterdir() if d.is_dir()]) == 12
    assert len(capsys.readouterr().out.strip().splitlines()) == 13


def test_cli_failing_scenario_is_named(tmp_path, capsys):
    cfg = _short_config(tmp_path, "plant:\n  true_poly: [[-1, 0, 0, 0, 0, 0], "
                        "[0.6383, -0.002, 0.322, 0.0034, 0, -0.126], "
                        "[0.6291, -0.0023, 0.3104, 0.0032, 0, -0.1306]]\n")
    status = main(["run", "--config", str(cfg), "--mode", "ofo-perfect", "--out",
                   str(tmp_path / "out")])
    assert status != 0
    assert "ofo-perfect-polynomial-quadratic" in capsys.readouterr().err


def test_cli_config_error_exit(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("controller:\n  nu: -1\n")
    assert main(["run", "--config", str(path)]) == 2
    assert "controller.nu" in capsys.readouterr().err


def test_cli_prints_default_config(capsys):
    assert main(["default-config"]) == 0
    assert parse_config_text(capsys.readouterr().out) == RunConfig()
