import json
import subprocess
import sys
import warnings

import pytest

from conftest import NAMES, fixture_path
from varcond.cli import main
from varcond.problemfile import ProblemFileError, load, loads
from varcond.symexpr import numerically_equal, parse
from varcond.variational import euler_lagrange

BASE = """
[problem]
n = 1
m = 1
order = 1
lagrangian = {lag}

[domain]
x1 = 0 1
grid = 11

[candidate]
u1 = {cand}
{extra}
"""


def text(lag="u1_x1^2", cand="x1", extra=""):
    return BASE.format(lag=lag, cand=cand, extra=extra)


def write(tmp_path, content, name="p.varc"):
    path = tmp_path / name
    path.write_text(content, encoding="utf-8")
    return str(path)


# --- loader -----------------------------------------------------------------


@pytest.mark.parametrize("name", NAMES)
def test_fixtures_load_cleanly(name):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pf = load(fixture_path(name))
    assert pf.candidate.m == pf.m


def test_example1_file():
    pf = load(fixture_path("example1"))
    assert (pf.n, pf.m, pf.s) == (1, 1, 1)
    assert pf.source["lagrangian"] == "sqrt(1 + u1_x1^2)"


def test_candidate_count_mismatch():
    with pytest.raises(ProblemFileError, match="candidate has 2 components, m=1"):
        loads(text(cand="x1\nu2 = x1"))


def test_empty_file():
    with pytest.raises(ProblemFileError, match=r"missing \[problem\] section"):
        loads("")


def test_parse_error_location():
    with pytest.raises(ProblemFileError) as info:
        loads(text(lag="u1_x1^2 + * 3"))
    assert info.value.line == 6
    assert info.value.column == len("lagrangian = u1_x1^2 + ") + 1


@pytest.mark.parametrize(
    "content,fragment",
    [
        (text(extra="[options]\ncolour = 3"), "unknown key 'colour'"),
        (text(extra="[extras]"), "unknown section"),
        (text(extra="[options]\ntol = -1"), "must be positive"),
        (text().replace("grid = 11", "grid = 11 3"), "grid needs 1"),
        (text().replace("x1 = 0 1", "x1 = 1 0"), "empty"),
        (text() + "\nnonsense line", "expected 'key = value'"),
        (text(extra="[constraint]\nf = u1\nmultiplier = u1"), "not allowed"),
    ],
)
def test_loader_errors(content, fragment):
    with pytest.raises(ProblemFileError, match=fragment):
        loads(content)


def test_comments_and_constraints():
    content = text(extra="# trailing comment\n[constraint]\nf = u1_x1 - 1  # slope\nmultiplier = x1\n")
    pf = loads(content)
    assert len(pf.problem.constraints) == 1


def test_split_file():
    content = """
[problem]
n = 1
m = 2
order = 1
lagrangian = u1_x1^2 + u2_x1^2
split = 1:1
[domain]
x1 = 0 1
grid = 5
[candidate]
u1 = x1
u2 = 1
[constraint]
f = u1*u2
multiplier = 3
multiplier_tilde = 5
"""
    pf = loads(content)
    assert pf.problem.split == (1, 1)
    assert len(pf.problem.extra_multipliers) == 1


# --- command line -------------------------------------------------------------


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_example2_saddle(capsys):
    code, out, _ = run(capsys, "classify", fixture_path("example2"), "--no-timestamp")
    assert code == 0
    assert "verdict: SADDLE" in out


def test_jet_example4_lines(capsys):
    code, out, _ = run(capsys, "jet", fixture_path("example4"))
    assert code == 0
    assert out.splitlines() == ["u1", "u1_x1", "u1_x2", "u1_x1x1", "u1_x1x2", "u1_x2x2"]


def test_corrupted_lagrangian_is_usage_error(tmp_path, capsys):
    path = write(tmp_path, text(lag="sqrt(1 + u1_x1^2"))
    code, _, err = run(capsys, "verify", path)
    assert code == 2
    assert "line 6" in err


def test_inconclusive_gate(tmp_path, capsys):
    path = write(tmp_path, text(lag="u1_x1^2", cand="x1^2"))
    code, out, _ = run(capsys, "classify", path, "--no-timestamp")
    assert code == 4 and "INCONCLUSIVE" in out
    code, _, _ = run(capsys, "classify", path, "--allow-inconclusive", "--no-timestamp")
    assert code == 0


def test_numeric_error_exit(tmp_path, capsys):
    path = write(tmp_path, text(lag="log(u1)", cand="x1 - 1/2"))
    code, _, err = run(capsys, "classify", path)
    assert code == 3 and "x=" in err


def test_usage_error_exit():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate", "x.varc"])
    assert info.value.code == 2


@pytest.mark.parametrize("command", ["jet", "el", "hessian", "classify", "verify"])
def test_machine_report_deterministic(capsys, command):
    args = (command, fixture_path("example1"), "--machine", "--no-timestamp")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    doc = json.loads(first)
    assert doc["version"] == "varcond-report/1"
    assert doc["input"]["options"]["seed"] == 0
    assert "generated" not in doc


def test_timestamp_present_by_default(capsys):
    _, out, _ = run(capsys, "jet", fixture_path("example1"), "--machine")
    assert "generated" in json.loads(out)


@pytest.mark.parametrize("name", NAMES)
def test_el_machine_roundtrip(capsys, name):
    pf = load(fixture_path(name))
    _, out, _ = run(capsys, "el", fixture_path(name), "--machine", "--no-timestamp")
    printed = json.loads(out)["euler_lagrange"]["residuals"]
    system = euler_lagrange(pf.problem.lagrangian, pf.problem.layout)
    lay2 = system.layout
    for text_, expr in zip(printed, system.residuals):
        assert numerically_equal(parse(text_, lay2), expr, count=10)


def test_el_with_constraints(tmp_path, capsys):
    path = write(tmp_path, text(extra="[constraint]\nf = u1\nmultiplier = x1"))
    code, out, _ = run(capsys, "el", path, "--machine", "--no-timestamp")
    el = json.loads(out)["euler_lagrange"]
    assert code == 0
    assert el["multiplier_system"] == ["x1"]
    assert "augmented_lagrangian" in el


def test_hessian_block_addresses(capsys):
    _, out, _ = run(capsys, "hessian", fixture_path("example3"), "--machine", "--no-timestamp")
    entries = json.loads(out)["hessian"]["nonzero"]
    cross = [e for e in entries if e["row"] == 1 and e["col"] == 4]
    assert cross and cross[0]["block"] == [1, 2, 0, 0, 1, 1] and cross[0]["expr"] == "1/2"


def test_verify_reports_all_passed(capsys):
    code, out, _ = run(capsys, "verify", fixture_path("example2"), "--machine", "--no-timestamp", "--seed", "3")
    doc = json.loads(out)
    assert code == 0 and doc["all_passed"]
    assert doc["input"]["options"]["seed"] == 3
    assert doc["falsifier"]["outcome"] in ("counterexample", "no_counterexample")


def test_tol_and_grid_scale_flags(capsys):
    _, out, _ = run(
        capsys, "classify", fixture_path("example1"), "--machine", "--no-timestamp",
        "--tol", "1e-6", "--grid-scale", "2",
    )
    doc = json.loads(out)
    assert doc["classification"]["grid"] == [81]
    assert doc["input"]["options"]["tol"] == 1e-6


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "varcond", "jet", fixture_path("example1")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and proc.stdout.split() == ["u1", "u1_x1"]
