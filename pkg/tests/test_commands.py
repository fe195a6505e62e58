import numpy as np
import pandas as pd
import pytest
from typer.testing import CliRunner

from cli.commands import EXIT_ERROR, EXIT_OK, EXIT_RESIDUAL, execute, run
from cli.config_document import parse_config
from main import app

OSCILLATOR = """\
[system]
name = "harmonic_oscillator"

[task]
point = [1.0, 0.0]
samples = 5
"""

UNCOUPLED = """\
[system]
name = "uncoupled_oscillators"

[task]
point = [1.0, 1.0, 0.0, 0.0]
"""

NONSTANDARD = """\
[system]
name = "nonstandard_form_2d"

[task]
point = [0.0, 0.0]
samples = 5
cloud = 10
"""

NON_COMMUTING = """\
[system]
n = 2
box = [[-1, 1], [-1, 1], [-1, 1], [-1, 1]]

[hamiltonians]
h1 = q1
h2 = p1
"""

NON_CLOSED = """\
[system]
n = 2
box = [[-1, 1], [-1, 1], [-1, 1], [-1, 1]]

[omega]
omega_12 = p1
omega_13 = 1
omega_24 = 1

[hamiltonians]
h1 = q1
h2 = q2
"""


def test_verify_oscillator(tmp_path):
    assert run("verify", parse_config(OSCILLATOR), tmp_path) == EXIT_OK
    frame = pd.read_csv(tmp_path / "verify.csv")
    assert list(frame.columns) == ["check", "z1", "z2", "value", "threshold", "pass"]
    assert set(frame["check"]) == {"closed", "nondegenerate", "commutation"}
    assert frame.loc[frame["check"] == "commutation", "value"].max() <= 1e-10
    assert frame["pass"].all()
    assert "status: PASS" in (tmp_path / "verify_report.txt").read_text()


def test_orbit_uncoupled(tmp_path):
    assert run("orbit", parse_config(UNCOUPLED), tmp_path) == EXIT_OK
    frame = pd.read_csv(tmp_path / "orbit.csv")
    assert list(frame.columns) == ["generator_index", "t_1", "t_2", "return_residual"]
    np.testing.assert_allclose(np.abs(frame[["t_1", "t_2"]].to_numpy()),
                               [[2.0 * np.pi, 0.0], [0.0, 2.0 * np.pi / np.sqrt(2.0)]], atol=1e-6)
    assert (frame["return_residual"] <= 1e-8).all()
    report = (tmp_path / "orbit_report.txt").read_text()
    assert "R^0 x T^2" in report
    assert "oracle lattice" in report


@pytest.mark.parametrize("command", ["verify", "orbit", "linearize", "darboux"])
def test_commands_are_deterministic(tmp_path, command):
    document = parse_config(OSCILLATOR)
    first, second = tmp_path / "a", tmp_path / "b"
    status = run(command, document, first)
    assert status != EXIT_ERROR
    assert run(command, document, second) == status
    csv = f"{command}.csv"
    assert (first / csv).read_bytes() == (second / csv).read_bytes()


def test_linearize_columns(tmp_path):
    assert run("linearize", parse_config(OSCILLATOR), tmp_path) == EXIT_OK
    frame = pd.read_csv(tmp_path / "linearize.csv")
    assert list(frame.columns) == ["z1", "z2", "residual_kind", "value"]
    assert set(frame["residual_kind"]) == {"delta", "darboux", "linear"}


def test_seed_changes_the_samples(tmp_path):
    document = parse_config(OSCILLATOR)
    run("linearize", document, tmp_path / "a", seed=1)
    run("linearize", document, tmp_path / "b", seed=2)
    assert (tmp_path / "a" / "linearize.csv").read_bytes() != (tmp_path / "b" / "linearize.csv").read_bytes()


def test_darboux_nonstandard_form(tmp_path):
    assert run("darboux", parse_config(NONSTANDARD), tmp_path) == EXIT_OK
    frame = pd.read_csv(tmp_path / "darboux.csv")
    assert set(frame["residual_kind"]) == {"darboux", "transition"}
    assert len(frame) == 10


def test_non_commuting_system_exits_with_residual_status(tmp_path):
    assert run("verify", parse_config(NON_COMMUTING), tmp_path) == EXIT_RESIDUAL
    report = (tmp_path / "verify_report.txt").read_text()
    assert "status: FAIL" in report
    assert "cocycle" in report
    assert (tmp_path / "verify.csv").exists()


def test_pipeline_errors_name_their_stage(tmp_path):
    assert run("darboux", parse_config(NON_CLOSED), tmp_path) == EXIT_ERROR
    report = (tmp_path / "darboux_report.txt").read_text()
    assert "status: ERROR" in report
    assert "stage: precheck" in report


def test_failed_run_removes_the_previous_csv(tmp_path):
    assert run("darboux", parse_config(NONSTANDARD), tmp_path) == EXIT_OK
    assert (tmp_path / "darboux.csv").exists()
    assert run("darboux", parse_config(NON_CLOSED), tmp_path) == EXIT_ERROR
    assert not (tmp_path / "darboux.csv").exists()
    run("report", None, tmp_path)
    bundle = (tmp_path / "report.txt").read_text()
    assert "status: ERROR" in bundle
    assert "---- darboux.csv" not in bundle


def test_bad_config_exits_with_error(tmp_path, write_config):
    path = write_config("[system]\nname = \"double_pendulum\"\n")
    assert execute("verify", path, tmp_path) == EXIT_ERROR
    assert execute("verify", tmp_path / "missing.cfg", tmp_path) == EXIT_ERROR
    assert execute("verify", None, tmp_path) == EXIT_ERROR


def test_report_bundles_earlier_outputs(tmp_path):
    run("verify", parse_config(OSCILLATOR), tmp_path)
    assert run("report", None, tmp_path) == EXIT_OK
    bundle = (tmp_path / "report.txt").read_text()
    assert bundle.startswith("==== verify ====")
    assert "---- verify.csv ----" in bundle
    assert "orbit" not in bundle


def test_report_without_outputs(tmp_path):
    assert execute("report", None, tmp_path) == EXIT_OK
    assert (tmp_path / "report.txt").read_text() == "no command outputs found\n"


def test_output_directory_from_the_document(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    document = parse_config(OSCILLATOR + "\n[output]\ndir = \"results\"\n")
    assert run("verify", document) == EXIT_OK
    assert (tmp_path / "results" / "verify.csv").exists()


@pytest.fixture
def runner():
    return CliRunner()


def test_cli_verify(runner, tmp_path, write_config):
    path = write_config(OSCILLATOR)
    result = runner.invoke(app, ["verify", "--config", str(path), "--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_OK
    assert (tmp_path / "out" / "verify.csv").exists()


def test_cli_residual_exit_code(runner, tmp_path, write_config):
    path = write_config(NON_COMMUTING)
    result = runner.invoke(app, ["verify", "--config", str(path), "--out", str(tmp_path)])
    assert result.exit_code == EXIT_RESIDUAL


def test_cli_requires_an_existing_config(runner, tmp_path):
    result = runner.invoke(app, ["verify", "--config", str(tmp_path / "missing.cfg")])
    assert result.exit_code != EXIT_OK


def test_cli_report(runner, tmp_path):
    result = runner.invoke(app, ["report", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_OK
    assert (tmp_path / "report.txt").exists()
