# tests/test_cli.py
import json
import time

import numpy as np
import pytest

from cli import commands
from cli.commands import EXIT_IO, EXIT_NO_CODE, EXIT_OK, EXIT_SELFTEST, EXIT_USAGE, main
from cli.manifest import MANIFEST_NAME, RunManifest, file_digest
from cli.output import format_value, read_csv, write_csv
from cli.selftest import corrupt_generator, run_selftest, shipped_codes
from core.errors import AnalyticError
from defaults.experiments import EXPERIMENTS

SELFTEST_BUDGET_S = 60

SMALL_LINEAR = """
[experiment]
name = linear-limitation
seed = 3

[grid]
m_check = 1, 3

[linear]
l_sym = 4
matrices = 2
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL_LINEAR)
    return str(path)


# ---------------------------------------------------------
# analytic
# ---------------------------------------------------------
@pytest.mark.parametrize("argv,expected", [
    (["p-miss", "--n", "15", "--k", "11", "--p-obs", "0.3"], "0.16807"),
    (["select-k", "--n", "100", "--p-obs", "0.5", "--beta", "2"], "82"),
    (["check-symbols", "--theta", "0.1"], "4"),
    (["check-symbols", "--theta", "0.0009765625"], "10"),
    (["throughput", "--l-sym", "100", "--m-check", "50"], "0.4"),
])
def test_analytic_plain(capsys, argv, expected):
    code, out, _ = run_cli(capsys, "analytic", *argv, "--format", "plain")
    assert code == EXIT_OK
    assert out.strip() == expected


def test_analytic_plain_several_values(capsys):
    code, out, _ = run_cli(capsys, "analytic", "miss-bounds", "--l-sym", "2", "--m-check", "1", "--format", "plain")
    assert code == EXIT_OK
    assert out.splitlines() == ["lower_bound 0.3333333333", "upper_bound 1"]


def test_analytic_json(capsys):
    code, out, _ = run_cli(capsys, "analytic", "aloha", "--alpha", "0.2", "--format", "json")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["quantity"] == "aloha"
    assert payload["values"]["p_obs"] == pytest.approx(0.32768)
    assert payload["values"]["link_throughput"] == pytest.approx(0.16)


def test_analytic_table(capsys):
    code, out, _ = run_cli(capsys, "analytic", "hamming", "--m", "3", "--p-obs", "0.5")
    assert code == EXIT_OK
    assert "dmin_mode" in out and "0.125" in out


def test_analytic_effective_throughput(capsys):
    code, out, _ = run_cli(capsys, "analytic", "effective-throughput", "--alpha", "0.2", "--n", "255",
                           "--beta", "1", "--format", "json")
    assert code == EXIT_OK
    assert json.loads(out)["values"]["effective_throughput"] == pytest.approx(0.150017, abs=1e-6)


def test_analytic_no_code(capsys):
    code, out, err = run_cli(capsys, "analytic", "select-k", "--n", "10", "--p-obs", "0.01", "--beta", "2")
    assert code == EXIT_NO_CODE
    assert out == ""
    assert err.startswith("Error: ")


def test_analytic_invalid_parameters(capsys):
    code, _, err = run_cli(capsys, "analytic", "p-miss", "--n", "15", "--k", "16", "--p-obs", "0.3")
    assert code == EXIT_USAGE
    assert "Error" in err


@pytest.mark.parametrize("argv", [
    ["analytic", "p-miss", "--n", "15", "--k", "11"],
    ["analytic", "no-such-quantity"],
    ["experiment", "no-such-experiment"],
    ["experiment", "hamming", "--jobs", "0"],
    [],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_USAGE
    assert "usage:" in capsys.readouterr().err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "watchdog-lab" in capsys.readouterr().out


# ---------------------------------------------------------
# experiment
# ---------------------------------------------------------
def test_experiment_writes_artifacts(capsys, tmp_path, small_config):
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(capsys, "experiment", "linear-limitation", "--config", small_config,
                           "--output-dir", str(out_dir))
    assert code == EXIT_OK
    assert "Linear per-packet checking" in out

    rows = read_csv(out_dir / "linear-limitation.csv")
    assert len(rows) == 4
    assert list(rows[0]) == list(EXPERIMENTS["linear-limitation"].columns)
    summary = json.loads((out_dir / "linear-limitation.summary.json").read_text())
    assert summary["all_passed"]

    manifest = RunManifest.load(out_dir / MANIFEST_NAME)
    assert manifest.seed == 3
    assert set(manifest.files) == {"linear-limitation.csv", "linear-limitation.summary.json"}
    assert manifest.verify(out_dir) == []


def test_experiment_is_reproducible(capsys, tmp_path, small_config):
    for name in ("a", "b"):
        assert main(["experiment", "linear-limitation", "--config", small_config,
                     "--output-dir", str(tmp_path / name), "--format", "json"]) == EXIT_OK
    capsys.readouterr()
    assert (tmp_path / "a" / "linear-limitation.csv").read_bytes() == \
           (tmp_path / "b" / "linear-limitation.csv").read_bytes()


def test_experiment_seed_override(capsys, tmp_path, small_config):
    code, out, _ = run_cli(capsys, "experiment", "linear-limitation", "--config", small_config,
                           "--output-dir", str(tmp_path), "--seed", "99", "--format", "json")
    assert code == EXIT_OK
    assert json.loads(out)["config"]["seed"] == 99


def test_experiment_output_dir_from_environment(capsys, tmp_path, small_config, monkeypatch):
    monkeypatch.setenv("WATCHLAB_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["experiment", "linear-limitation", "--config", small_config, "--format", "json"]) == EXIT_OK
    capsys.readouterr()
    assert (tmp_path / "env" / MANIFEST_NAME).exists()


def test_experiment_bad_config(capsys, tmp_path):
    code, _, err = run_cli(capsys, "experiment", "single-flow", "--config", str(tmp_path / "missing.ini"))
    assert code == EXIT_USAGE
    assert err.startswith("Error: ")


def test_experiment_zero_p_obs_with_beta(capsys, tmp_path):
    path = tmp_path / "zero.ini"
    path.write_text("[experiment]\nname = single-flow\n[grid]\nn = 15\nbeta = 1\np_obs = 0.0, 0.5\n")
    code, out, err = run_cli(capsys, "experiment", "single-flow", "--config", str(path),
                             "--output-dir", str(tmp_path / "out"))
    assert code == EXIT_USAGE
    assert out == ""
    assert err.startswith("Error: ") and "p_obs" in err


def test_experiment_library_error_exits_cleanly(capsys, tmp_path, small_config, monkeypatch):
    def failing_run(cfg, jobs=1):
        raise AnalyticError("p_obs must lie in (0, 1], got 0.0")

    monkeypatch.setattr(commands, "run_experiment", failing_run)
    code, _, err = run_cli(capsys, "experiment", "linear-limitation", "--config", small_config,
                           "--output-dir", str(tmp_path))
    assert code == EXIT_USAGE
    assert err.splitlines()[-1] == "Error: p_obs must lie in (0, 1], got 0.0"
    assert not (tmp_path / MANIFEST_NAME).exists()


def test_experiment_unwritable_output(capsys, tmp_path, small_config):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    code, _, err = run_cli(capsys, "experiment", "linear-limitation", "--config", small_config,
                           "--output-dir", str(blocker / "sub"))
    assert code == EXIT_IO
    assert "cannot write results" in err


# ---------------------------------------------------------
# selftest
# ---------------------------------------------------------
def test_selftest_passes(capsys):
    code, out, _ = run_cli(capsys, "selftest", "--format", "json")
    assert code == EXIT_OK
    checks = json.loads(out)
    assert [c["name"] for c in checks] == ["field_axioms", "generator_parity_check", "rs_min_distance",
                                           "mds_detection", "null_space", "hamming_min_distance",
                                           "interval_coverage"]
    assert all(c["passed"] for c in checks)


def test_selftest_catches_injected_fault(capsys):
    code, out, _ = run_cli(capsys, "selftest", "--inject-fault")
    assert code == EXIT_SELFTEST
    assert "FAIL" in out


def test_fault_injection_only_breaks_parity():
    failed = [r.name for r in run_selftest(fault_injection=True) if not r.passed]
    assert failed == ["generator_parity_check"]


def test_corrupt_generator():
    code = shipped_codes()[0]
    assert code.parity_check_ok()
    assert not corrupt_generator(code).parity_check_ok()


@pytest.mark.slow
def test_selftest_within_time_budget():
    start = time.perf_counter()
    checks = run_selftest()
    elapsed = time.perf_counter() - start
    assert all(c.passed for c in checks)
    assert sum(c.seconds for c in checks) <= elapsed
    assert elapsed < SELFTEST_BUDGET_S


# ---------------------------------------------------------
# Output helpers and manifest
# ---------------------------------------------------------
@pytest.mark.parametrize("value,text", [
    ("", ""),
    (None, ""),
    (True, "1"),
    (np.bool_(False), "0"),
    (np.int64(7), "7"),
    (0.1, "0.10000000000000001"),
    (np.float64(0.5), "0.5"),
    ("rs", "rs"),
])
def test_format_value(value, text):
    assert format_value(value) == text


def test_csv_keeps_blank_cells(tmp_path):
    path = write_csv(tmp_path / "t.csv", ("a", "b"), [{"a": 1, "b": ""}, {"a": 0.25}])
    assert path.read_text() == "a,b\n1,\n0.25,\n"


def test_manifest_detects_tampering(tmp_path):
    data = tmp_path / "rows.csv"
    data.write_text("a\n1\n")
    manifest = RunManifest("demo", {"seed": 1}, seed=1)
    manifest.add_file(data)
    manifest.finish(tmp_path)
    loaded = RunManifest.load(tmp_path / MANIFEST_NAME)
    assert loaded.files["rows.csv"] == file_digest(data)
    assert loaded.finished_at
    assert loaded.verify(tmp_path) == []
    data.write_text("a\n2\n")
    assert loaded.verify(tmp_path) == ["rows.csv"]
    data.unlink()
    assert loaded.verify(tmp_path) == ["rows.csv"]
