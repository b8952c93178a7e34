import json

import pytest

from toptime import assets
from toptime.cli import main
from toptime.motiondata import save_trajectory


@pytest.fixture(scope="module")
def suite_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("suite") / "suite.json"
    p.write_text(json.dumps({"motions": ["spike", "slow_reach"], "seeds": [0, 1], "n_intervals": 80,
                             "push_interval": 0.3}))
    return p


def run(*argv):
    return main(["--quiet", *map(str, argv)])


def test_retime_writes_plan(tmp_path):
    out = tmp_path / "plan.json"
    assert run("retime", "spike", "--out", out) == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"trajectory", "dt_s", "total_time_s", "config_hash"}
    assert len(doc["dt_s"]) == 1500 and doc["trajectory"] == "spike"


def test_retime_with_config_and_file(tmp_path):
    traj = tmp_path / "t.json"
    save_trajectory(assets.fast_swing(60), traj)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"cost": {"grid": [0.03]}, "chunk": {"k": 1.0}}))
    out = tmp_path / "plan.json"
    assert run("retime", traj, "--config", cfg, "--out", out) == 0
    assert set(json.loads(out.read_text())["dt_s"]) == {0.03}


def test_simulate_metrics_chain(tmp_path):
    plan = tmp_path / "plan.json"
    trace = tmp_path / "trace.csv"
    assert run("retime", "slow_reach", "--out", plan) == 0
    assert run("simulate", "slow_reach", "--plan", plan, "--trace", trace, "--seed", 3) == 0
    assert (tmp_path / "trace.csv.meta.json").exists()
    m = tmp_path / "m.json"
    assert run("metrics", "--trace", trace, "--ref", "slow_reach", "--out", m) == 0
    rep = json.loads(m.read_text())
    assert rep["seed"] == 3 and rep["success"] is True and rep["E_jpe"] >= 0


def test_zmp_trace(tmp_path, capsys):
    assert run("zmp-trace", "quiescent", "--fixed-dt", "0.01") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "time,zmp_x,zmp_y,d,classification"
    assert len(lines) == 3002 and lines[-1].endswith(",inside")


def test_compare_and_pareto(tmp_path, suite_file):
    out = tmp_path / "cmp"
    assert run("compare", "--suite", suite_file, "--out", out) == 0
    assert (out / "comparison.csv").exists() and (out / "comparison_pareto.svg").exists()
    svg = tmp_path / "front.svg"
    assert run("pareto", "--runs", out, "--out", svg) == 0
    assert 'data-front="1"' in svg.read_text()


def test_sweeps(tmp_path, suite_file):
    assert run("sweep-k", "--suite", suite_file, "--k", "0,0.5", "--out", tmp_path / "k") == 0
    rows = (tmp_path / "k" / "k_sweep.csv").read_text().splitlines()
    assert len(rows) == 3
    assert run("sweep-payload", "--masses", "0.5,3", "--motion", "spike", "--out", tmp_path / "p") == 0
    assert (tmp_path / "p" / "payload_sweep.json").exists()


@pytest.mark.parametrize("argv", [
    ("simulate", "no_such_motion", "--fixed-dt", "0.01", "--trace", "x.csv"),
    ("simulate", "spike", "--trace", "x.csv"),
    ("simulate", "spike", "--fixed-dt", "0.01", "--plan", "p.json", "--trace", "x.csv"),
    ("simulate", "spike", "--fixed-dt", "-0.01", "--trace", "x.csv"),
    ("simulate", "spike", "--fixed-dt", "0.01", "--dt-ctrl", "0.5", "--trace", "x.csv"),
    ("bogus",),
    ("retime", "spike"),
    ("sweep-payload", "--masses", "a,b"),
    ("pareto", "--runs", "nowhere", "--out", "f.svg"),
    ("metrics", "--trace", "missing.csv", "--ref", "spike", "--out", "m.json"),
])
def test_validation_errors_exit_1(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    assert run(*argv) == 1


def test_bad_config_exit_1(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"cost": {"sigma": -1}}))
    assert run("retime", "spike", "--config", cfg, "--out", tmp_path / "p.json") == 1
    cfg.write_text(json.dumps({"unknown": {}}))
    assert run("retime", "spike", "--config", cfg, "--out", tmp_path / "p.json") == 1


def test_runtime_error_exit_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("simulate", "spike", "--fixed-dt", "0.01", "--trace", blocker / "t.csv") == 2


def _outputs(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_byte_identical_reruns(tmp_path, suite_file):
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        assert run("retime", "fast_swing", "--out", d / "plan.json") == 0
        assert run("simulate", "fast_swing", "--plan", d / "plan.json", "--trace", d / "t.csv",
                   "--seed", 5, "--randomize", "--push-interval", 2) == 0
        assert run("metrics", "--trace", d / "t.csv", "--ref", "fast_swing", "--out", d / "m.json") == 0
        assert run("zmp-trace", "spike", "--fixed-dt", "0.02", "--out", d / "z.csv") == 0
        assert run("compare", "--suite", suite_file, "--out", d / "cmp") == 0
        assert run("pareto", "--runs", d / "cmp", "--out", d / "front.svg") == 0
    a, b = _outputs(tmp_path / "a"), _outputs(tmp_path / "b")
    assert a.keys() == b.keys() and len(a) >= 10
    for k in a:
        assert a[k] == b[k], k
