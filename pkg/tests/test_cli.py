import json
from pathlib import Path

import numpy as np
import pytest

from ctrllie.cli import build_report, linear_part, main, render
from ctrllie.fixtures import (FIXTURES, SystemFileError, dump_system_text, fixture, load,
                              parse_system_text, read_system_file)

SLEIGH_TEXT = """\
# classical sleigh with a coupling parameter
name = sleigh2 ; n = 5 ; m = 2
f1 = "q4*cos(q3)"
f2 = "q4*sin(q3)"
f3 = "q5"
f4 = "w1 + A*q4*q5"
f5 = "w2"
K1 = (-1, 1) ; K2 = (-1, 1)
param.A = 0
domain.q3 = (-3, 3)
probe = (0, 0, 0, 0, 0, 0, 0, 0)
"""


def test_load_fixtures():
    b = load("exampleB")
    assert (b.n, b.m) == (1, 2) and [str(e) for e in b.f] == [str(e) for e in fixture("exampleB").system.f]
    assert fixture("sleigh").system.param_values == {"A": 0.0}
    assert fixture("sleigh", A=1.0).system.param_values == {"A": 1.0}
    with pytest.raises(KeyError):
        fixture("nope")


def test_parse_system_file(tmp_path):
    path = tmp_path / "sleigh.sys"
    path.write_text(SLEIGH_TEXT)
    sf = read_system_file(path)
    assert sf.name == "sleigh2" and sf.system.n == 5 and sf.probes == [(0.0,) * 8]
    assert sf.domain().bounds("q3") == (-3.0, 3.0)
    assert sf.domain().bounds("w2") == (-1.0, 1.0)


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_dump_round_trip(name):
    sf = fixture(name)
    again = parse_system_text(dump_system_text(sf))
    assert again.system == sf.system and again.probes == sf.probes


@pytest.mark.parametrize("text, needle", [
    ('name = x ; n = 1 ; m = 1\nf1 = "w1 +* 2"\nK1 = (-1, 1)', 'line 2: bad expression f1 = "w1 +* 2"'),
    ('name = x ; n = 1 ; m = 1\nf1 = "z"\nK1 = (-1, 1)', "unknown identifier 'z'"),
    ('name = x ; n = 1 ; m = 1\nf1 = "w1"', "missing key 'K1'"),
    ('name = x ; n = 1 ; m = 1\nf1 = "w1"\nK1 = (-1, 1)\nbogus = 1', "line 4: unknown key 'bogus'"),
    ('name = x ; n = 1 ; m = 1\nf1 = "w1"\nK1 = (-1, 1)\nprobe = (0, 0, 2)', "outside K"),
    ('name = x ; n = 1 ; m = 1\nf1 = w1\nK1 = (-1, 1)', "double-quoted"),
])
def test_system_file_errors(text, needle):
    with pytest.raises(SystemFileError) as exc:
        parse_system_text(text)
    assert needle in str(exc.value)


def test_render_is_json_safe():
    out = render({"a": (1, np.float64(np.inf)), "b": np.int64(3), "c": np.array([0.5])})
    assert json.loads(out) == {"a": [1, "inf"], "b": 3, "c": [0.5]}


def test_linear_part_detects_nonlinearity():
    A, B = linear_part(fixture("kalman-random"))
    assert A.shape[0] == B.shape[0]
    with pytest.raises(ValueError, match="not linear"):
        linear_part(fixture("exampleB"))


def test_analyze_reports(capsys):
    rep = build_report("analyze", "exampleC")
    assert set(rep) == {"system", "generators", "strata", "adapted", "verdicts", "simulation",
                        "provenance"}
    assert rep["verdicts"]["summary"] == {"hyper_accessible": True, "stlc_points": []}
    assert not build_report("analyze", "exampleA")["verdicts"]["summary"]["hyper_accessible"]


def test_brackets_sleigh_beta_one():
    rep = build_report("brackets", "sleigh", beta=1)
    assert rep["generators"]["W1"]["labels"] == [f"W1^({k})" for k in range(5)]
    assert rep["generators"]["W1"]["last_depth"] == 4


def test_kalman_inline(tmp_path, capsys):
    out = tmp_path / "k.json"
    assert main(["kalman", "--A", "[[0,1],[0,0]]", "--B", "[[0],[1]]", "--json", str(out)]) == 0
    k = json.loads(out.read_text())["verdicts"]["kalman"]
    assert k["n_max"] == 2 and k["controllable"] is True
    assert main(["kalman", "--A", "[[0]]"]) == 1


def test_simulate_writes_cloud(tmp_path):
    cloud = tmp_path / "cloud.txt"
    out = tmp_path / "s.json"
    assert main(["simulate", "exampleB", "--T", "0.5", "--samples", "300", "--seed", "7",
                 "--r", "0.05", "--delta", "0.02", "--cloud", str(cloud), "--json", str(out)]) == 0
    sim = json.loads(out.read_text())["simulation"]
    assert sim["cloud_file"] == str(cloud) and len(cloud.read_text().splitlines()) == 300
    assert sim["covers_ball"]["nodes"] == 5


def test_param_flag_and_errors(tmp_path, capsys):
    out = tmp_path / "b.json"
    assert main(["brackets", "sleigh", "--beta", "1", "--param", "A=1", "--json", str(out)]) == 0
    assert json.loads(out.read_text())["system"]["params"] == {"A": 1.0}
    assert main(["brackets", "sleigh", "--param", "B=1"]) == 1
    assert main(["analyze", str(tmp_path / "missing.sys")]) == 1
    assert "ctrl-lie:" in capsys.readouterr().err


def test_goodness_points_flag(capsys):
    assert main(["goodness", "exampleB", "--point", "0,0,0,0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdicts"]["goodness"][0]["kind"] == "second"


GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_golden_reports(name):
    # regenerate with: ctrl-lie analyze <name> --json tests/golden/<name>.json
    assert render(build_report("analyze", name)) == (GOLDEN / f"{name}.json").read_text()
