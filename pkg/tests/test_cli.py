import csv
import json
import subprocess
import sys

import pytest

from refpot import cli


def refpot(*args, cwd=None):
    proc = subprocess.run([sys.executable, "-m", "refpot.cli", *args], capture_output=True,
                          text=True, cwd=cwd)
    return proc.returncode, proc.stdout, proc.stderr


def data_rows(path):
    with open(path) as fh:
        return [row for row in csv.reader(fh) if row and not row[0].startswith("#")][1:]


@pytest.mark.parametrize("args", [
    ["nonsense"],
    ["levinson", "--config", "missing.cfg"],
    ["phase-shift", "--k-min", "5", "--k-max", "1"],
    ["phase-shift", "--points", "1"],
    ["gl-kernel", "--kernel-grid", "1:2"],
    ["jost", "--tol-abs", "-1"],
])
def test_invalid_input_exit_code(args, tmp_path, capsys):
    assert cli.run(args + ["--out-dir", str(tmp_path)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["kind"] == "validation"


def test_broken_config_is_invalid_input(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("c_const = [\n")
    assert cli.run(["potential", "--config", str(bad), "--out-dir", str(tmp_path)]) == 1


def test_numerical_failure_exit_code(tmp_path, capsys):
    # no low-energy points: the scattering-length fit cannot be done
    code = cli.run(["phase-shift", "--points", "2", "--k-min", "1e5", "--k-max", "1e6",
                    "--out-dir", str(tmp_path)])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"]["kind"] == "numerical"


def test_levinson_free(tmp_path):
    code, out, _ = refpot("levinson", "--config", "free.cfg", "--out-dir", str(tmp_path))
    assert code == 0
    res = json.loads(out)["result"]
    assert res["residual_rad"] == 0 and res["n_bound"] == 0
    saved = json.loads((tmp_path / "levinson.json").read_text())
    assert saved["manifest"]["config"] == "free.cfg"


def test_potential_command(tmp_path, capsys):
    assert cli.run(["potential", "--points", "11", "--out-dir", str(tmp_path)]) == 0
    rows = data_rows(tmp_path / "potential.csv")
    assert len(rows) == 22 and float(rows[0][2]) == pytest.approx(11726172.638, rel=1e-9)
    assert json.loads(capsys.readouterr().out)["result"]["boundaries_angstrom"] == [4.0, 6.05149]


@pytest.fixture(scope="module")
def reports(tmp_path_factory):
    runs = []
    for name in ("a", "b"):
        d = tmp_path_factory.mktemp("report_" + name)
        runs.append((d,) + refpot("report", "--out-dir", str(d)))
    return runs


def test_report_passes_and_lists_levels(reports):
    d, code, out, err = reports[0]
    assert code == 0, err
    assert json.loads(out)["result"]["all_passed"] is True
    assert len(data_rows(d / "bound_states.csv")) == 24
    assert err.count("[pass]") == 12


def test_report_is_deterministic(reports):
    (a, *_), (b, *_) = reports
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir()) and len(names) == 12
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
