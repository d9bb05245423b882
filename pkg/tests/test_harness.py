import json

import pytest

from rbflow.cli import main
from rbflow.config import AUDIT_NAMES, parse_config, render_config
from rbflow.emit import CSV_HEADER, emit_series
from rbflow.errors import ConfigurationError
from rbflow.families import FamilyKind
from rbflow.monitor import MonitorRecord
from rbflow.runner import run_scenario
from rbflow.scenarios import SCENARIOS

EINSTEIN_TEXT = (
    "family = einstein_sphere\nn = 3\nrho = 0.1\nc = 0.75\ns0 = 1.0\nt_max = 0.05\n")


def test_parse_valid_einstein_config():
    config = parse_config(EINSTEIN_TEXT)
    assert config.family is FamilyKind.EINSTEIN_SPHERE
    assert config.n == 3
    assert config.rho == 0.1
    assert config.c == 0.75
    assert config.s0 == 1.0
    assert config.dt_policy == "fixed"


def test_parse_example_config_without_optional_keys():
    config = parse_config("family = einstein_sphere\nn = 3\nrho = 0.1\nc = 0.75\ns0 = 1.0")
    assert config.t_max == 1.0


def test_parse_reports_every_error_with_line_numbers():
    text = "rho = 0.25\nn = 3\nfamily = conformal_torus\n"
    with pytest.raises(ConfigurationError) as err:
        parse_config(text)
    messages = " | ".join(err.value.errors)
    assert "requires n = 2" in messages
    assert "1/(2(n-1))" in messages
    assert "resolution" in messages


def test_parse_empty_text_missing_keys():
    with pytest.raises(ConfigurationError) as err:
        parse_config("")
    joined = " ".join(err.value.errors)
    assert "family" in joined and "rho" in joined


def test_parse_unknown_duplicate_and_type_errors():
    text = "family = einstein_sphere\nn = 3\nrho = 0.1\nrho = 0.2\nwhat = 1\nt_max = x\n"
    with pytest.raises(ConfigurationError) as err:
        parse_config(text)
    joined = " ".join(err.value.errors)
    assert "line 4: duplicate key 'rho'" in joined
    assert "line 5: unknown key 'what'" in joined
    assert "line 6: bad value for 't_max'" in joined


def test_parse_comments_and_blanks():
    config = parse_config("# a comment\n\n" + EINSTEIN_TEXT + "dt_init = 0.002  # inline\n")
    assert config.rho == 0.1
    assert config.dt_init == 0.002


def test_inapplicable_key_rejected():
    with pytest.raises(ConfigurationError) as err:
        parse_config(EINSTEIN_TEXT + "resolution = 64\n")
    assert "does not apply" in " ".join(err.value.errors)


def test_roundtrip_parse_render():
    for text in (EINSTEIN_TEXT, SCENARIOS["torus-rates"].config_text,
                 SCENARIOS["su2-pinch"].config_text, SCENARIOS["sphere-lambda1"].config_text):
        config = parse_config(text)
        assert parse_config(render_config(config)) == config


def _records():
    return [
        MonitorRecord(t=0.0, lambda0=4.5, lambda1=3.0, Q=5.25, R_min=6.0, R_max=6.0, pinch=1 / 3),
        MonitorRecord(t=0.1, lambda0=4.6, R_min=6.1, R_max=6.2),
        MonitorRecord(t=0.2, lambda0=4.7, R_min=6.2, R_max=6.4, sigma=7.0),
    ]


def test_csv_layout(tmp_path):
    paths = emit_series(_records(), "csv", tmp_path)
    lines = paths[0].read_text().splitlines()
    assert len(lines) == 4
    assert lines[0] == CSV_HEADER
    assert lines[0] == "t,lambda0,lambda1,Q,rhs31,rhs32,rhs41,fd0,fd1,R_min,R_max,sigma,pinch"
    for line in lines:
        assert len(line.split(",")) == 13
    # absent quantities stay empty; numbers carry 17 significant digits
    assert lines[2].split(",")[2] == ""
    assert lines[1].split(",")[12] == f"{1 / 3:.17g}"


def test_json_summary_keys(tmp_path):
    config = parse_config(EINSTEIN_TEXT)
    result = run_scenario(config, out_dir=tmp_path, formats="csv,json")
    payload = json.loads((tmp_path / "summary.json").read_text())
    assert set(payload) == {"config", "t_stop", "stop_reason", "hypotheses", "verdicts",
                            "extrema", "duration_s", "error"}
    assert payload["stop_reason"] == "horizon"
    assert len(payload["verdicts"]) == len(AUDIT_NAMES)
    assert payload["config"]["family"] == "einstein_sphere"


def test_plot_outputs(tmp_path):
    paths = emit_series(_records(), "plot", tmp_path)
    script = (tmp_path / "series.gp").read_text()
    assert "series.csv" in script
    assert "using 1:2" in script and "using 1:3" in script and "using 1:4" in script
    assert (tmp_path / "series.png").stat().st_size > 0
    assert {p.name for p in paths} == {"series.gp", "series.png"}


def test_csv_bitwise_reproducible(tmp_path):
    config = parse_config(SCENARIOS["torus-spectrum"].config_text)
    run_scenario(config, out_dir=tmp_path / "a", formats="csv")
    run_scenario(config, out_dir=tmp_path / "b", formats="csv")
    assert (tmp_path / "a/series.csv").read_bytes() == (tmp_path / "b/series.csv").read_bytes()


def test_cli_run_and_exit_codes(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(EINSTEIN_TEXT)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out),
                 "--formats", "csv,json,plot"]) == 0
    assert {p.name for p in out.iterdir()} == {"series.csv", "summary.json",
                                               "series.gp", "series.png"}

    bad = tmp_path / "bad.cfg"
    bad.write_text("rho = 0.5\nn = 3\nfamily = einstein_sphere\nt_max = 1.0\n")
    assert main(["run", "--config", str(bad), "--out", str(out)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.cfg"), "--out", str(out)]) == 2


def test_cli_check_scenarios(capsys):
    assert main(["check", "s3-blowup"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert any(line.startswith("[PASS]") for line in lines)
    assert main(["check", "does-not-exist"]) == 2


def test_cli_scenarios_listing(capsys):
    assert main(["scenarios"]) == 0
    out = capsys.readouterr().out
    assert "s3-thm12" in out and "torus-prop13" in out


def test_cli_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("RBFLOW_THREADS", "1")
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(EINSTEIN_TEXT)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(cfg), "--out", str(out),
                 "--vary", "rho=0:0.2:0.1", "--formats", "csv"]) == 0
    dirs = sorted(p.name for p in out.iterdir())
    assert dirs == ["run-rho-0", "run-rho-0.1", "run-rho-0.2"]
    for d in dirs:
        assert (out / d / "series.csv").exists()


def test_cli_sweep_rejects_invalid_point(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(EINSTEIN_TEXT)
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--vary", "rho=0:0.4:0.2"]) == 2  # rho = 0.4 > 1/4 is inadmissible


def test_cli_sweep_parallel_workers(tmp_path, monkeypatch):
    monkeypatch.setenv("RBFLOW_THREADS", "2")
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(EINSTEIN_TEXT)
    out = tmp_path / "par"
    assert main(["sweep", "--config", str(cfg), "--out", str(out),
                 "--vary", "c=0.5:0.75:0.25", "--formats", "csv"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["run-c-0.5", "run-c-0.75"]


def test_exit_code_contract_for_every_builtin(scenario_results):
    for name, result in scenario_results.items():
        assert result.exit_code == 0, f"{name}: {result.summary.verdicts}"
