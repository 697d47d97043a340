import json

import pytest

from nmext.cli import main, parse_input_line, UsageError


@pytest.fixture
def cfg_path(tmp_path):
    def make(profile="const2src", n=12, k=6, eps=0.25, *extra):
        path = tmp_path / f"{profile}-{eps}-{len(extra)}.cfg"
        args = ["plan", "--profile", profile, "--n", str(n), "--k", str(k), "--eps", str(eps), "-o", str(path)]
        assert main(args + list(extra)) == 0
        return path
    return make


def test_plan_is_byte_identical(cfg_path, capsys):
    a = cfg_path().read_text()
    table = capsys.readouterr().out
    b = cfg_path().read_text()
    assert a == b and capsys.readouterr().out == table
    assert "alpha = 0.5" in a and "delta_prime = 0.1" in a
    assert "D " in table


def test_plan_infeasible_and_bad_override(tmp_path, capsys):
    out = str(tmp_path / "x.cfg")
    assert main(["plan", "--profile", "const2src", "--n", "4", "--k", "8", "--eps", "0.25", "-o", out]) == 2
    assert "violated relation" in capsys.readouterr().err
    assert main(["plan", "--profile", "polylog2src", "--n", "12", "--k", "6", "--eps", "0.25",
                 "--set", "D=14", "-o", out]) == 2
    assert "D odd" in capsys.readouterr().err
    assert main(["plan", "--profile", "const2src", "--n", "12", "--k", "6", "--eps", "0.25",
                 "--set", "B", "-o", out]) == 2
    with pytest.raises(SystemExit):
        main(["plan", "--profile", "nope", "--n", "12", "--k", "6", "--eps", "0.25"])


def test_verify_requires_a_suite(cfg_path, capsys):
    assert main(["verify", "--config", str(cfg_path())]) == 2
    assert "suite" in capsys.readouterr().err


def test_verify_pipelines_report_is_deterministic(cfg_path, tmp_path, monkeypatch):
    cfg = cfg_path("polylogaffine")
    r1, r2, r3 = (tmp_path / f"r{i}.json" for i in range(3))
    assert main(["verify", "--config", str(cfg), "--suite", "pipelines", "--report", str(r1)]) == 0
    assert main(["verify", "--config", str(cfg), "--suite", "pipelines", "--report", str(r2), "--jobs", "2"]) == 0
    monkeypatch.setenv("NMEXT_SEED", "0")
    assert main(["verify", "--config", str(cfg), "--suite", "pipelines", "--report", str(r3)]) == 0
    assert r1.read_bytes() == r2.read_bytes() == r3.read_bytes()
    rep = json.loads(r1.read_text())
    assert rep["passed"] and rep["seed"] == 0 and rep["violations"] == []
    assert "wall_clock_s" not in rep["suites"]["pipelines"]


def test_verify_reports_budget_violations(cfg_path, tmp_path, capsys):
    cfg = cfg_path("polylogaffine", 12, 6, 0.001)
    rep = tmp_path / "r.json"
    assert main(["verify", "--config", str(cfg), "--suite", "pipelines", "--report", str(rep)]) == 1
    data = json.loads(rep.read_text())
    assert not data["passed"] and data["violations"]
    assert "violation:" in capsys.readouterr().err


def test_verify_seed_from_environment(cfg_path, tmp_path, monkeypatch):
    cfg = cfg_path("polylogaffine")
    monkeypatch.setenv("NMEXT_SEED", "5")
    rep = tmp_path / "r.json"
    assert main(["verify", "--config", str(cfg), "--suite", "pipelines", "--report", str(rep), "--timings"]) == 0
    data = json.loads(rep.read_text())
    assert data["seed"] == 5 and "wall_clock_s" in data["suites"]["pipelines"]
    monkeypatch.setenv("NMEXT_SEED", "five")
    assert main(["verify", "--config", str(cfg), "--suite", "pipelines"]) == 2


def test_verify_missing_or_broken_config(tmp_path, capsys):
    assert main(["verify", "--config", str(tmp_path / "none.cfg"), "--suite", "pipelines"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("profile = const2src\nn = twelve\n")
    assert main(["verify", "--config", str(bad), "--suite", "pipelines"]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["verify", "--suite", "components"]) == 2


def test_parse_input_line():
    assert parse_input_line("0x5a3", 12, "x") == 0x5A3
    assert parse_input_line("5A3", 12, "x") == 0x5A3
    assert parse_input_line("100000000000", 12, "x") == 1
    assert parse_input_line("0b010000000000", 12, "x") == 2
    with pytest.raises(UsageError, match="expected 3 hex digits for n=12, got 4"):
        parse_input_line("05a3", 12, "x")
    with pytest.raises(UsageError, match="offset 2: invalid hex digit"):
        parse_input_line("5g3", 12, "x")
    with pytest.raises(UsageError, match="does not fit"):
        parse_input_line("ff", 7, "x")


def test_run_outputs_trace_and_replay(cfg_path, tmp_path, capsys):
    cfg = cfg_path()
    capsys.readouterr()
    xf, yf = tmp_path / "x.txt", tmp_path / "y.txt"
    xf.write_text("# inputs\n5a3\n0x001\n\n100000000001  # bit text\n")
    yf.write_text("0f1\n777\nabc\n")
    tr = tmp_path / "t.txt"
    assert main(["run", "--config", str(cfg), "--x-file", str(xf), "--y-file", str(yf), "--trace", str(tr)]) == 0
    outs = capsys.readouterr().out.split()
    assert len(outs) == 3 and all(o in ("0", "1") for o in outs)
    assert main(["run", "--config", str(cfg), "--replay", str(tr)]) == 0
    assert capsys.readouterr().out.split() == outs
    assert main(["run", "--config", str(cfg), "--x", "5a3", "--y", "0f1"]) == 0
    assert capsys.readouterr().out.split() == outs[:1]
    # a trace recorded under another config no longer replays
    other = cfg_path("const2src", 12, 6, 0.25, "--seed", "3")
    capsys.readouterr()
    assert main(["run", "--config", str(other), "--replay", str(tr)]) == 1
    assert "replay mismatch" in capsys.readouterr().out


def test_run_raw_format(cfg_path, tmp_path, capsys):
    cfg = cfg_path("constaffine")
    capsys.readouterr()
    raw = tmp_path / "x.bin"
    raw.write_bytes((0x5A3).to_bytes(2, "little") + (0x001).to_bytes(2, "little"))
    assert main(["run", "--config", str(cfg), "--x-file", str(raw), "--format", "raw"]) == 0
    outs = capsys.readouterr().out.split()
    assert main(["run", "--config", str(cfg), "--x", "5a3"]) == 0
    assert capsys.readouterr().out.split() == outs[:1]
    raw.write_bytes(b"\x01\x02\x03")
    assert main(["run", "--config", str(cfg), "--x-file", str(raw), "--format", "raw"]) == 2
    assert "offset 2" in capsys.readouterr().err


def test_run_input_errors(cfg_path, capsys):
    two, one = cfg_path(), cfg_path("constaffine")
    assert main(["run", "--config", str(two), "--x", "5a3"]) == 2
    assert "second input" in capsys.readouterr().err
    assert main(["run", "--config", str(one), "--x", "5a3", "--y", "001"]) == 2
    assert "single input" in capsys.readouterr().err
    assert main(["run", "--config", str(one), "--x", "5a"]) == 2
    assert "n=12" in capsys.readouterr().err
    assert main(["run", "--config", str(one)]) == 2
