import io
import json
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor

import pytest

from contactkit import __version__
from contactkit.cli import run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_classify_report():
    code, out, _ = call("classify", "--form", "dz - y*dx", "--grid", "11")
    rep = json.loads(out)
    assert code == 0
    assert rep["result"]["verdict"] == "positive-contact"
    assert rep["version"] == __version__
    assert rep["config"]["grid"] == 11 and rep["config"]["margin"] == 1e-6


def test_malformed_expression_exit_2():
    code, out, err = call("classify", "--form", "dz - y*)dx")
    assert code == 2 and out == ""
    assert "position 7" in err and "^" in err


def test_precondition_exit_3():
    code, _, err = call("perturb", "interpolate", "--a1", "-z - 0.2")
    assert code == 3 and "a1 - a0" in err


def test_verification_failure_exit_1():
    code, out, _ = call("symplectic", "fill", "--eps", "0")
    assert code == 1 and json.loads(out)["result"]["valid"] is False


def test_nonpositive_tolerance_rejected():
    assert call("classify", "--form", "dz", "--tol", "0")[0] == 2


def test_mcg_cap_text():
    code, out, _ = call("mcg", "cap", "--genus", "1", "--word", "c^2*s1^-1", "--format", "text")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[-2].split()[-1] == "c'"
    assert "Euler number 1" in lines[-1]


def test_mcg_rep():
    code, out, _ = call("mcg", "rep", "--word", "g1*g2")
    r = json.loads(out)["result"]
    assert r["matrix"] == [[0, -1], [1, 1]] and r["order"] == 6


def test_charfol_csv(tmp_path):
    path = tmp_path / "lines.csv"
    code, _, _ = call("charfol", "--example", "lutz", "--seeds", "4", "--max-steps", "500", "--format", "csv",
                      "--out", str(path))
    assert code == 0
    header, first = path.read_text().splitlines()[:2]
    assert header == "curve_id,s,u,v,r,theta,z"
    assert first.startswith("0,0,")


def test_charfol_svg():
    code, out, _ = call("charfol", "--example", "lutz", "--seeds", "4", "--max-steps", "500", "--format", "svg")
    assert code == 0 and out.startswith("<svg") and "circle" in out


def test_examples_listing():
    names = [e["name"] for e in json.loads(call("examples")[1])["result"]["examples"]]
    assert names == ["xi1", "xi2", "xi3", "lutz", "reeb", "t3", "s3"]


def test_reports_byte_identical_in_parallel():
    argv = ("holonomy", "--example", "reeb", "--seeds", "21")
    with ThreadPoolExecutor(4) as pool:
        outs = list(pool.map(lambda _: call(*argv)[1], range(4)))
    assert len(set(outs)) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "contactkit", "classify", "--example", "xi3", "--grid", "5"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["verdict"] == "negative-contact"


@pytest.mark.parametrize("argv", [
    ("perturb", "tangent-arc"),
    ("perturb", "holonomy"),
    ("perturb", "shear"),
    ("perturb", "diffeo"),
    ("symplectic", "dilating"),
    ("symplectic", "boundary-form"),
    ("symplectic", "dominate", "--example", "xi2", "--omega", "dx^dy"),
    ("mcg", "chain", "--genus", "2"),
    ("mcg", "reduce", "--word", "g1*g1^-1*c"),
    ("mcg", "stabilize", "--word", "g1"),
    ("mcg", "surgery", "--word", "s1^-1", "--curve", "s1"),
    ("mcg", "homsphere", "--word", "g1*g2"),
])
def test_subcommands_succeed(argv):
    code, out, err = call(*argv)
    assert code == 0, err
    assert "result" in json.loads(out)
