import json
import pytest
from app import __version__
from app.main import EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, cli

pytestmark = pytest.mark.usefixtures("clean_env")

HARMONIC = ["--potential", "k2=1", "--digits", "40"]


def _json(result):
    return json.loads(result.stdout)


def test_help(runner):
    result = runner.invoke(cli, ["--help"])
    assert result.exit_code == EXIT_OK
    for command in ("solve", "sweep", "reproduce", "oracle-check"):
        assert command in result.stdout


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == EXIT_OK
    assert __version__ in result.stdout


@pytest.mark.parametrize("args", [
    ["solve", "--preset", "triple-well", "--g", "0.14", "--potential", "k2=1"],
    ["solve"],
    ["solve", "--preset", "triple-well"],
    ["solve", "--preset", "quintuple-well", "--g", "0.1"],
    ["solve", "--potential", "k2=1,k3=1"],
    ["solve", "--potential", "k2=1,x"],
    ["solve", "--potential", "k2=1", "--digits", "22"],
    ["solve", "--potential", "k2=1", "--alpha", "1", "--centrifugal", "2"],
    ["sweep", "--preset", "double-well", "--g-list", "0.2,0.1", "--digits", "40"],
    ["reproduce", "4"],
    ["reproduce", "0"],
    ["oracle-check", "telepathy"],
])
def test_usage_errors_exit_1(runner, args):
    result = runner.invoke(cli, args)
    assert result.exit_code == EXIT_USAGE, result.output


def test_solve_harmonic_json(runner):
    result = runner.invoke(cli, ["solve", *HARMONIC, "--dmax", "4", "--format", "json"])
    assert result.exit_code == EXIT_OK, result.output
    data = _json(result)
    assert data["verdict"] == "converged"
    assert [row["D"] for row in data["rows"]] == [2, 3, 4]
    assert float(data["rows"][-1]["re"]) == pytest.approx(1.0)
    assert data["problem"]["potential"] == "k2=1"
    assert data["config"]["D_max"] == 4


def test_solve_zero_coupling_preset_adaptive(runner):
    """g = 0 turns the triple well into the oscillator; every root is 1"""
    result = runner.invoke(cli, ["solve", "--preset", "triple-well", "--g", "0", "--dmax", "4", "--format", "json"])
    assert result.exit_code == EXIT_OK, result.output
    data = _json(result)
    assert data["problem"]["preset"] == "harmonic"
    assert all(float(row["re"]) == pytest.approx(1.0) for row in data["rows"])
    assert data["agreement_re"] >= 20


def test_solve_table_output(runner):
    result = runner.invoke(cli, ["solve", *HARMONIC, "--dmax", "3"])
    assert result.exit_code == EXIT_OK, result.output
    assert result.stdout.splitlines()[0].split()[:3] == ["D", "Re", "E"]
    assert "verdict: converged" in result.stdout


def test_solve_sequence_failure_exits_2(runner, monkeypatch):
    monkeypatch.setenv("RPM_MAX_NEWTON_ITERS", "1")
    result = runner.invoke(cli, ["solve", *HARMONIC, "--dmax", "3", "--seed", "50"])
    assert result.exit_code == EXIT_NOT_CONVERGED
    assert "no Hankel root converged" in result.stderr


def test_sweep_csv(runner):
    result = runner.invoke(cli, [
        "sweep", "--preset", "double-well", "--g-list", "0,0", "--dmax", "3", "--digits", "40", "--format", "csv",
    ])
    assert result.exit_code == EXIT_OK, result.output
    lines = result.stdout.strip().splitlines()
    assert lines[0].startswith("g,re,im,wkb_ratio")
    assert len(lines) == 3


def test_oracle_check_rational_paths(runner):
    result = runner.invoke(cli, ["oracle-check", "two-route", "determinant", "wkb"])
    assert result.exit_code == EXIT_OK, result.output
    data = _json(result)
    assert data["passed"] is True
    assert set(data["checks"]) == {"two-route", "determinant", "wkb"}
    assert data["checks"]["wkb"]["cells"] == 26


def test_oracle_check_double_well(runner):
    result = runner.invoke(cli, ["oracle-check", "two-route", "--preset", "double-well", "--g", "3/10", "--energy", "4/5"])
    assert result.exit_code == EXIT_OK, result.output
    assert _json(result)["checks"]["two-route"]["mismatches"] == []


def test_oracle_check_rotation_confining_well_not_compared(runner):
    result = runner.invoke(cli, ["oracle-check", "rotation"])
    assert result.exit_code == EXIT_OK, result.output
    rotation = _json(result)["checks"]["rotation"]
    assert rotation["passed"] is True
    assert rotation["compared"] is False


def test_oracle_check_rotation_double_well_resonance(runner):
    result = runner.invoke(cli, ["oracle-check", "rotation", "--preset", "double-well", "--g", "0.30", "--basis", "300"])
    assert result.exit_code == EXIT_OK, result.output
    rotation = _json(result)["checks"]["rotation"]
    assert rotation["compared"] is True
    assert rotation["re_digits"] >= 6
    assert rotation["im_digits"] >= 6


def test_reproduce_convergence_prefix_json(runner):
    result = runner.invoke(cli, ["reproduce", "1", "--dmax", "4", "--digits", "60", "--format", "json"])
    assert result.exit_code == EXIT_OK, result.output
    rows = _json(result)["rows"]
    assert [row["D"] for row in rows] == [2, 3, 4]
    assert rows[0]["re"].startswith("0.969134740629")


def test_reproduce_diff_reports_missing_rows(runner):
    result = runner.invoke(cli, ["reproduce", "1", "--dmax", "4", "--digits", "60", "--diff"])
    assert result.exit_code == EXIT_NOT_CONVERGED
    assert "/28 cells pass" in result.stdout


def test_config_file_supplies_defaults(runner, config_file):
    path = config_file("dmax = 3\ndigits = 40\nformat = json\n")
    result = runner.invoke(cli, ["--config", path, "solve", "--potential", "k2=1"])
    assert result.exit_code == EXIT_OK, result.output
    assert [row["D"] for row in _json(result)["rows"]] == [2, 3]


def test_flags_override_config_file(runner, config_file):
    path = config_file("dmax = 3\ndigits = 40\nformat = json\n")
    result = runner.invoke(cli, ["--config", path, "solve", "--potential", "k2=1", "--dmax", "4"])
    assert result.exit_code == EXIT_OK, result.output
    assert [row["D"] for row in _json(result)["rows"]] == [2, 3, 4]


def test_config_file_overrides_environment(runner, config_file, monkeypatch):
    monkeypatch.setenv("RPM_DMAX", "5")
    path = config_file("dmax = 3\n")
    result = runner.invoke(cli, ["--config", path, "solve", *HARMONIC, "--format", "json"])
    assert result.exit_code == EXIT_OK, result.output
    assert len(_json(result)["rows"]) == 2


def test_environment_supplies_defaults(runner, monkeypatch):
    monkeypatch.setenv("RPM_DMAX", "3")
    monkeypatch.setenv("RPM_PRECISION", "40")
    result = runner.invoke(cli, ["solve", "--potential", "k2=1", "--format", "json"])
    assert result.exit_code == EXIT_OK, result.output
    data = _json(result)
    assert len(data["rows"]) == 2
    assert data["digits_used"] == 40


def test_invalid_environment_is_a_usage_error(runner, monkeypatch):
    monkeypatch.setenv("RPM_DMAX", "1")
    result = runner.invoke(cli, ["solve", *HARMONIC])
    assert result.exit_code == EXIT_USAGE


def test_metrics_file_written(runner, tmp_path):
    path = tmp_path / "metrics.prom"
    result = runner.invoke(cli, ["--metrics-file", str(path), "solve", *HARMONIC, "--dmax", "3"])
    assert result.exit_code == EXIT_OK, result.output
    text = path.read_text()
    assert "rpm_newton_iterations" in text
    assert "rpm_last_working_digits 40.0" in text


def test_logs_go_to_stderr(runner):
    result = runner.invoke(cli, ["--log-level", "info", "solve", *HARMONIC, "--dmax", "3", "--format", "json"])
    assert result.exit_code == EXIT_OK, result.output
    _json(result)
    assert "sequence_entry" in result.stderr
