import json

import pytest

from rmlax import cli


def run(*argv):
    return cli.main(list(argv))


@pytest.mark.parametrize(
    "text,value",
    [("0+1i", 1j), ("0.8i", 0.8j), ("i", 1j), ("-0.3-2i", -0.3 - 2j), ("1", 1), ("0.3+0.9j", 0.3 + 0.9j)],
)
def test_parse_complex(text, value):
    assert cli.parse_complex(text) == value


def test_rmatrix_example_exits_zero(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", "--suite", "rmatrix", "--ntilde", "2", "--tau", "0+1i", "--seed", "7", "--tol", "1e-9", "--output", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["pass"] and doc["environment"]["seed"] == 7


def test_inadmissible_D_fails_as_expected(capsys):
    assert run("verify", "--suite", "lax", "--system", "D", "--n", "2", "--ntilde", "3", "--expect", "fail") == 0


def test_bc_obstruction_exits_one(capsys):
    assert run("verify", "--suite", "lax", "--system", "BC", "--n", "2", "--g", "0.7", "--nu", "1", "--expect", "pass") == 1
    assert "FAILED lax" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ("verify",),
        ("verify", "--suite", "bogus"),
        ("verify", "--suite", "lax", "--tau", "0.01i"),
        ("verify", "--suite", "rmatrix", "--tau", "abc"),
        ("verify", "--suite", "tops", "--expect", "fail"),
        ("verify", "--suite", "all", "--workers", "0"),
        ("simulate", "--q0", "0.1", "--system", "A", "--n", "2"),
    ],
)
def test_usage_errors_exit_two(argv, capsys):
    assert run(*argv) == 2


def test_reports_are_byte_identical(tmp_path):
    paths = [tmp_path / f"{i}.json" for i in range(2)]
    for p in paths:
        assert run("verify", "--suite", "tops", "--samples", "2", "--seed", "3", "--output", str(p)) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nseed = 4\ntau = 0.8i\nsamples = 2\n")
    out = tmp_path / "r.json"
    assert run("verify", "--suite", "tops", "--config", str(cfg), "--seed", "5", "--output", str(out)) == 0
    env = json.loads(out.read_text())["environment"]
    assert env["seed"] == 5 and env["tau"] == "0.0+0.8i" and env["samples"]["tops"] == 2


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run("verify", "--suite", "tops", "--config", str(cfg)) == 2


def test_table(capsys):
    assert run("table") == 0
    text = capsys.readouterr().out
    assert "g = ±√2ν, μ = 0" in text
    doc = json.loads(text[text.index("{") :])
    rows = {r["root_system"]: r for r in doc["rows"]}
    assert rows["C"]["mu"] == "ν" and rows["D"]["ntilde"] == "2" and rows["BC"]["sites"] == "2N+1"


def test_simulate_writes_files(tmp_path, capsys):
    prefix = tmp_path / "run"
    rc = run("simulate", "--preset", "stationary", "--t-end", "0.05", "--dt", "0.01", "--output", str(prefix))
    assert rc == 0
    assert (tmp_path / "run.csv").exists()
    doc = json.loads((tmp_path / "run.json").read_text())
    assert doc["drift"]["H"] < 1e-14


def test_simulate_collision_exits_one(capsys):
    rc = run("simulate", "--system", "A", "--n", "2", "--ntilde", "1", "--q0", "0,0.05", "--p0", "1,-1", "--t-end", "1", "--dt", "0.01")
    assert rc == 1
    assert "simulation stopped" in capsys.readouterr().err


def test_quantum_check_single_system(capsys):
    assert run("quantum-check", "--system", "A", "--n", "2", "--ntilde", "2", "--samples", "1") == 0
    assert run("quantum-check", "--system", "C", "--n", "2", "--ntilde", "2", "--samples", "1") == 0
    assert run("quantum-check", "--system", "C", "--n", "2", "--ntilde", "2", "--samples", "1", "--expect", "pass") == 1
