import subprocess
import sys

import pytest

from stepfdr import __version__
from stepfdr.cli import main

EX1 = """
[scenario]
model = "example1-counter"
n = 3
n0 = 2
alpha = 0.25

[procedure]
kind = "SD"

[schedule]
family = "gbs-beta"
alpha = 0.25

[run]
reps = 20000
seed = 7
estimands = ["fdr", "enfr", "E[V/beta_R]"]
"""


@pytest.fixture
def ex1(tmp_path):
    path = tmp_path / "ex1.toml"
    path.write_text(EX1)
    return path


def _rows(text):
    return [line.split(",") for line in text.strip().splitlines()]


def test_crit_beta(capsys):
    assert main(["crit", "--family", "gbs-beta", "--n", "3", "--alpha", "0.25"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == ["i", "alpha_i"]
    assert float(rows[2][1]) == pytest.approx(0.2, abs=1e-16)


def test_crit_su_delta_zero_is_linear(capsys):
    assert main(["crit", "--family", "su-delta", "--n", "50", "--alpha", "0.1", "--delta", "0"]) == 0
    rows = _rows(capsys.readouterr().out)[1:]
    assert len(rows) == 50
    for i, value in rows:
        assert float(value) == pytest.approx(int(i) * 0.1 / 51, rel=1e-15)


def test_crit_improved_first_value(capsys):
    assert main(["crit", "--family", "improved", "--n", "50", "--alpha", "0.1"]) == 0
    first = _rows(capsys.readouterr().out)[1]
    assert float(first[1]) == pytest.approx(1 - 0.9 ** (1 / 50), rel=1e-14)


def test_crit_values_roundtrip_exactly(capsys):
    from stepfdr.schedules import gbs_beta
    main(["crit", "--family", "gbs-beta", "--n", "40", "--alpha", "0.05"])
    values = [float(r[1]) for r in _rows(capsys.readouterr().out)[1:]]
    assert values == list(gbs_beta(40, 0.05).alphas)


@pytest.mark.parametrize("argv", [
    ["crit", "--family", "su-delta", "--n", "5", "--alpha", "0.1"],
    ["crit", "--family", "su-delta", "--n", "5", "--alpha", "0.1", "--delta", "0.95"],
    ["crit", "--family", "gbs-beta", "--n", "0", "--alpha", "0.1"],
    ["crit", "--n", "5"],
    ["frobnicate"],
    [],
])
def test_usage_and_config_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err


def test_run_writes_csv_and_manifest(ex1, tmp_path):
    out = tmp_path / "res.csv"
    assert main(["run", str(ex1), "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert rows[0] == ["estimand", "estimate", "se", "reps", "seed"]
    assert [r[0] for r in rows[1:]] == ["fdr", "enfr", "v_over_beta_r"]
    assert rows[1][3:] == ["20000", "7"]
    import tomli_w  # noqa: F401  (the manifest writer)
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    manifest = tomllib.loads((tmp_path / "res.csv.manifest.toml").read_text())
    assert manifest["manifest"]["subcommand"] == "run"
    assert manifest["manifest"]["seed"] == 7
    assert manifest["manifest"]["version"] == __version__
    assert manifest["manifest"]["outputs"] == [str(out)]
    assert manifest["scenario"]["model"] == "example1-counter"


def test_run_overrides(ex1, tmp_path, capsys):
    assert main(["run", str(ex1), "--reps", "100", "--seed", "3"]) == 0
    assert _rows(capsys.readouterr().out)[1][3:] == ["100", "3"]


@pytest.mark.parametrize("content", ["not = [valid", "[scenario]\nmodel = 'du'\n",
                                     EX1.replace("gbs-beta", "nope")])
def test_run_bad_config(tmp_path, content):
    path = tmp_path / "bad.toml"
    path.write_text(content)
    assert main(["run", str(path)]) == 1


def test_run_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "missing.toml")]) == 1


@pytest.mark.parametrize("threads", ["1", "4", "8"])
def test_manifest_replay_is_bitwise(ex1, tmp_path, threads):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", str(ex1), "--out", str(first)]) == 0
    manifest = tmp_path / "a.csv.manifest.toml"
    assert main(["run", str(manifest), "--out", str(second), "--threads", threads]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_sweep_and_replay(ex1, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", str(ex1), "--axis", "reps", "--values", "1000,2000", "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert rows[0][:2] == ["axis", "value"] and len(rows) == 1 + 2 * 3
    again = tmp_path / "s2.csv"
    assert main(["run", str(tmp_path / "s.csv.manifest.toml"), "--out", str(again),
                 "--threads", "4"]) == 0
    assert out.read_bytes() == again.read_bytes()


def test_sweep_needs_axis(ex1):
    assert main(["sweep", str(ex1)]) == 1


def test_figure1_small(tmp_path):
    out = tmp_path / "fig.csv"
    assert main(["figure1", "--n", "6", "--reps", "2000", "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert rows[0][:2] == ["n0", "fdr_su"] and len(rows) == 7
    again = tmp_path / "fig2.csv"
    assert main(["run", str(tmp_path / "fig.csv.manifest.toml"), "--out", str(again),
                 "--threads", "8"]) == 0
    assert out.read_bytes() == again.read_bytes()


def test_calibrate(tmp_path):
    out = tmp_path / "cal.csv"
    assert main(["calibrate", "--n", "50", "--alpha", "0.1", "--tol", "1e-4", "--out", str(out)]) == 0
    header, row = _rows(out.read_text())
    result = dict(zip(header, row))
    assert abs(float(result["worst_case_fdr"]) - 0.1) <= 1e-4
    curve = _rows((tmp_path / "cal.csv.curve.csv").read_text())
    assert curve[0] == ["n1", "fdr"] and len(curve) == 51
    again = tmp_path / "cal2.csv"
    assert main(["run", str(tmp_path / "cal.csv.manifest.toml"), "--out", str(again)]) == 0
    assert out.read_bytes() == again.read_bytes()


def test_calibrate_infeasible():
    assert main(["calibrate", "--n", "1", "--alpha", "0.1"]) == 1


def test_check_identities_pass_and_fault_injection(tmp_path, capsys):
    out = tmp_path / "id.csv"
    assert main(["check-identities", "--reps", "20000", "--fuzz", "1000", "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert rows[0] == ["identity", "scenario", "lhs", "rhs", "residual", "pass"]
    assert all(r[-1] == "true" for r in rows[1:])
    code = main(["check-identities", "--reps", "2000", "--fuzz", "1000", "--perturb", "2:1e-3"])
    assert code == 2
    captured = capsys.readouterr()
    assert "fdr-decomposition" in captured.err
    assert _rows(captured.out)[1][-1] == "false"


def test_check_identities_bad_perturb():
    assert main(["check-identities", "--perturb", "two"]) == 1


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stepfdr.cli", "crit", "--family", "linear-bh",
                           "--n", "4", "--alpha", "0.2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1:] == ["1,0.050000000000000003", "2,0.10000000000000001",
                                           "3,0.15000000000000002", "4,0.20000000000000001"]
    bad = subprocess.run([sys.executable, "-m", "stepfdr.cli", "run", str(tmp_path / "x.toml")],
                         capture_output=True, text=True)
    assert bad.returncode == 1
