import json
import subprocess
import sys

import pytest

from fwmap.cli import main
from fwmap.io import read_trace
from helpers import FIXTURES


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize(
    "name,kind",
    [("triangle.uai", "mrf"), ("tomo_4x4.tomo", "tomo"), ("gm_spring3.gm", "gm")],
)
@pytest.mark.parametrize("solver", ["fwmap", "sa"])
def test_solve_each_type(capsys, tmp_path, name, kind, solver):
    trace = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "solve", str(FIXTURES / name), "--type", kind, "--solver", solver,
                       "--max-iter", "20", "--trace", str(trace))
    assert code == 0
    summary = json.loads(out)
    assert summary["solver"] == solver and summary["iterations"] <= 20
    records = read_trace(trace)
    assert records and records[-1].h_best == summary["lower_bound"]
    assert {r.solver for r in records} == {solver}


def test_options_forwarded(capsys):
    code, out, _ = run(capsys, "solve", str(FIXTURES / "grid3x3.uai"), "--type", "mrf", "--max-iter", "10",
                       "--prox-weight", "7.5", "--init-vertex", "max", "--seed", "3", "--clock", "work")
    assert code == 0
    assert json.loads(out)["prox_weight"] == 7.5


def test_fast_conv_same_bound(capsys):
    args = ["solve", str(FIXTURES / "tomo_4x4.tomo"), "--type", "tomo", "--max-iter", "10", "--clock", "work"]
    _, slow, _ = run(capsys, *args)
    _, fast, _ = run(capsys, *args, "--fast-conv")
    assert json.loads(slow)["lower_bound"] == json.loads(fast)["lower_bound"]


def test_work_clock_reproducible(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        run(capsys, "solve", str(FIXTURES / "grid3x3.uai"), "--type", "mrf", "--max-iter", "30",
            "--clock", "work", "--trace", str(p))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "solve", str(tmp_path / "nope.uai"), "--type", "mrf")
    assert code == 2 and "fwmap: error" in err


def test_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.uai"
    bad.write_text("MARKOV\n1\n2\n1\n3 0 0 0\n")
    code, _, err = run(capsys, "solve", str(bad), "--type", "mrf")
    assert code == 2 and "line 5" in err


def test_bad_budget():
    with pytest.raises(SystemExit):
        main(["solve", "x", "--type", "mrf", "--budget-s", "0"])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fwmap.cli", "solve", str(FIXTURES / "single.uai"), "--type", "mrf", "--max-iter", "5"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["lower_bound"] == -2.0
