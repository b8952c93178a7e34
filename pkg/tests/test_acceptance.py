"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (with its runtime against the budget) that
is repeated in the pytest terminal summary.
"""

import json
import re
import time

import numpy as np
import pytest

from toptime import analysis as an
from toptime import assets, kinodyn, stability
from toptime import retimer as rt
from toptime import simharness as sh
from toptime.cli import main as cli_main
from toptime.motiondata import MotionTrajectory

ORACLE_MOTIONS = ("slow_reach", "fast_swing", "raise_overhead", "spike", "mix_100")


@pytest.fixture(scope="module", autouse=True)
def compiled_planner(model):
    """Compile the planner kernels once so the budgets time the checks, not numba."""
    rt.retime_trajectory(model, assets.spike(40))


@pytest.fixture(scope="module")
def comparison(model):
    t0 = time.perf_counter()
    res = an.run_comparison(an.SuiteConfig(), model)
    return res, time.perf_counter() - t0


def test_c01_time_cost_identities(acceptance):
    t0 = time.perf_counter()
    expected = {0.01: 15.0, 0.03: 45.0, 0.05: 75.0}
    got = {dt: rt.RetimingPlan.uniform(assets.SUITE_INTERVALS + 1, dt).total_time for dt in expected}
    ok = got == expected
    assert acceptance(1, "fixed-dt time costs", ok, f"{got}", time.perf_counter() - t0, 1.0)


def test_c02_zmp_static_equivalence(model, rng, acceptance):
    t0 = time.perf_counter()
    n = 1000
    q = rng.uniform(-1.5, 1.5, (n, model.n_joints))
    rot = kinodyn.tilt_rotation(*rng.uniform(-0.2, 0.2, (2, n)))
    chain = kinodyn.chain_kinematics(model, q, np.zeros_like(q), rot, model.base_position)
    p_com, P, L = kinodyn.batch_momentum(model, chain, np.zeros_like(q))
    worst = 0.0
    for i in range(n):
        m = kinodyn.MomentumState(P[i], L[i], p_com[i], model.total_mass)
        worst = max(worst, float(np.hypot(*(stability.zmp(m) - p_com[i, :2]))))
    zero = np.zeros((n, 3))
    worst = max(worst, float(np.hypot(*(stability.zmp_series(p_com, zero, zero, model.total_mass)
                                        - p_com[:, :2]).T).max()))
    ok = worst < 1e-12
    assert acceptance(2, "static ZMP = CoM projection", ok, f"max error {worst:.2e} m over {n} states",
                      time.perf_counter() - t0, 1.0)


def test_c03_zml_collinear(rng, acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        m = kinodyn.MomentumState(np.zeros(3), np.zeros(3), rng.uniform([-0.2, -0.2, 0.5], [0.2, 0.2, 1.2]),
                                  60.0, rng.normal(0, 50, 3), rng.normal(0, 20, 3))
        zs = rng.uniform(-1.0, 2.0, 3)
        pts = np.array([np.append(stability.zml_point(m, z_query=z), z) for z in zs])
        u, v = pts[1] - pts[0], pts[2] - pts[0]
        worst = max(worst, float(np.linalg.norm(np.cross(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))))
    ok = worst < 1e-9
    assert acceptance(3, "ZML points collinear", ok, f"max sine {worst:.2e}", time.perf_counter() - t0, 1.0)


def test_c04_momentum_reaction_oracle(model, acceptance):
    t0 = time.perf_counter()
    free = model.copy()
    free.ankle.stiffness = 0.0
    free.ankle.damping = 0.0
    cfg = sh.SimConfig(gravity_torque=False, tilt_max=np.inf)
    R = kinodyn.reaction_matrix(free)[:2]
    dt = 1e-4
    errs = {}
    for name in ORACLE_MOTIONS:
        tr = assets.motion_by_name(name)
        ref = rt.resample(tr, rt.RetimingPlan.uniform(len(tr), tr.frame_period), dt)
        raw = sh.integrate(free, ref.q, ref.dq, dt, cfg)
        f = (raw["ddq"] @ R.T) / free.base_inertia[:2]
        integral = np.vstack([np.zeros(2), np.cumsum(0.5 * dt * (f[1:] + f[:-1]), axis=0)])
        errs[name] = float(np.abs(raw["rate"] - integral).max() / np.abs(integral).max())
    ok = max(errs.values()) < 1e-3
    detail = "max relative error " + ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    assert acceptance(4, "free-base momentum reaction", ok, detail, time.perf_counter() - t0, 30.0)


def test_c05_time_scaling_law(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for tr in assets.bundled_suite():
        base = None
        for s in (1, 2, 5, 10):
            dt = s * tr.frame_period
            ref = rt.resample(tr, rt.RetimingPlan.uniform(len(tr), dt), dt)
            v, a = np.abs(ref.dq).max(), np.abs(np.diff(ref.dq, axis=0) / dt).max()
            if base is None:
                base = (v, a)
                continue
            if base[0] > 0:
                worst = max(worst, abs(v * s / base[0] - 1.0), abs(a * s * s / base[1] - 1.0))
            else:
                worst = max(worst, v, a)
    ok = worst <= 1e-6
    assert acceptance(5, "uniform retiming scales speed 1/s, accel 1/s^2", ok, f"max relative error {worst:.1e}",
                      time.perf_counter() - t0, 5.0)


def test_c06_retimer_oracle(model, acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(25):
        n = int(rng.integers(1, 5))
        grid = tuple(sorted(rng.choice(np.arange(1, 11) / 100.0, 4, replace=False)))
        q = np.cumsum(rng.normal(0, 0.2, size=(n + 1, assets.N_JOINTS)), axis=0)
        tr = MotionTrajectory.from_arrays(q, None, 0.01, "random")
        cfg = rt.RetimeCostConfig(grid=grid)
        pred = rt.TiltPredictor(model, tr)
        state = rt.PlannerState(rng.normal(0, 2e-3, (1, 2)), rng.normal(0, 2e-2, (1, 2)), rng.normal(0, 1, (1, 2)))
        seq = rt.optimize_horizon(state, tr, 0, cfg, rt.ChunkingConfig(horizon=4, buffer_size=4), pred)
        _, best_cost = rt.brute_force_plan(tr, cfg, pred, state)
        mismatches += rt.sequence_cost(pred, state, 0, seq, cfg) != best_cost
    ok = mismatches == 0
    assert acceptance(6, "optimize_horizon = brute force", ok, f"{mismatches} of 25 instances differ",
                      time.perf_counter() - t0, 120.0)


def test_c07_chunk_weights_and_smoothing(model, acceptance):
    t0 = time.perf_counter()
    sums_ok = decay_ok = True
    for k in np.linspace(0.0, 10.0, 201):
        for B in range(1, 12):
            w = rt.chunk_weights(rt.ChunkingConfig(k=float(k), horizon=11, buffer_size=B))
            sums_ok &= abs(w.sum() - 1.0) <= 1e-12
            if k > 0:
                decay_ok &= bool(np.all(np.diff(w) < 0))
    uniform_ok = np.allclose(rt.chunk_weights(rt.ChunkingConfig(k=0.0)), 0.1, rtol=0, atol=1e-15)
    worse = []
    for tr in assets.bundled_suite():
        plan = rt.retime_trajectory(model, tr)
        if np.abs(np.diff(plan.dts)).sum() > np.abs(np.diff(plan.raw_dts)).sum():
            worse.append(tr.name)
    ok = sums_ok and decay_ok and uniform_ok and not worse
    detail = (f"normalised={sums_ok} decreasing={decay_ok} uniform(k=0)={uniform_ok} "
              f"blended TV above raw on {worse or 'no'} motions")
    assert acceptance(7, "chunk weights and blending", ok, detail, time.perf_counter() - t0, 5.0)


def test_c08_trend_reproduction(comparison, acceptance):
    res, elapsed = comparison
    opt, f01, f05 = (res.row("method", m) for m in ("optimized", "fixed_0.01", "fixed_0.05"))
    checks = {
        "a": opt["success_rate"] >= f01["success_rate"],
        "b": opt["E_g"] < f01["E_g"],
        "c": opt["time_cost"] < f05["time_cost"],
        "d": f05["E_jpe"] <= f01["E_jpe"],
    }
    detail = (f"success {opt['success_rate']:.2f} vs {f01['success_rate']:.2f}; "
              f"E_g {opt['E_g']:.2e} vs {f01['E_g']:.2e}; time {opt['time_cost']:.2f} vs {f05['time_cost']:.2f} s; "
              f"E_jpe(0.05) {f05['E_jpe']:.4f} vs E_jpe(0.01) {f01['E_jpe']:.4f}; "
              + " ".join(f"({k})={v}" for k, v in checks.items()))
    assert acceptance(8, "comparison trends", all(checks.values()), detail, elapsed, 600.0)


def test_c09_payload_trend(model, acceptance):
    t0 = time.perf_counter()
    res = an.run_payload_sweep(model=model)
    parts, ok = [], True
    for method in sorted({r["method"] for r in res.rows}):
        rows = sorted((r for r in res.rows if r["method"] == method), key=lambda r: r["payload_kg"])
        d = [r["peak_d"] for r in rows]
        g = [r["E_g"] for r in rows]
        s = [r["success_rate"] for r in rows]
        good = (all(b >= a for a, b in zip(d, d[1:])) and all(b >= a for a, b in zip(g, g[1:]))
                and all(b <= a for a, b in zip(s, s[1:])))
        ok &= good
        parts.append(f"{method}: peak d {[round(x, 3) for x in d]}, E_g {[f'{x:.2e}' for x in g]}, success {s}")
    assert acceptance(9, "payload trend on fast_swing", ok, "; ".join(parts), time.perf_counter() - t0, 120.0)


def test_c10_pareto(comparison, tmp_path, acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    disagree = 0
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        vals = rng.integers(0, 6, size=(n, 3)).astype(float)
        pts = [an.ParetoPoint(*v, tag=str(i)) for i, v in enumerate(vals)]
        brute = {p.tag for p in pts if not any(an.dominates(q.values, p.values) for q in pts)}
        disagree += {p.tag for p in an.pareto_front(pts).front} != brute
    res, _ = comparison
    an.emit_report(res, tmp_path, formats=("svg",))
    marked = set(re.findall(r'data-front="1" data-tag="([^"]+)"', (tmp_path / "comparison_pareto.svg").read_text()))
    pts = an.pareto_points(res.runs)
    dominated = [p.tag for p in pts if p.tag in marked and any(an.dominates(q.values, p.values) for q in pts)]
    ok = disagree == 0 and not dominated and bool(marked)
    detail = f"{disagree} of 1000 random sets disagree; emitted front {len(marked)} runs, {len(dominated)} dominated"
    assert acceptance(10, "Pareto front", ok, detail, time.perf_counter() - t0, 10.0)


def test_c11_cli_determinism(tmp_path, acceptance):
    t0 = time.perf_counter()
    suite = tmp_path / "suite.json"
    suite.write_text(json.dumps({"motions": ["spike", "fast_swing"], "seeds": [0, 1], "n_intervals": 100}))
    codes = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        runs = [
            ["retime", "fast_swing", "--out", d / "plan.json"],
            ["simulate", "fast_swing", "--plan", d / "plan.json", "--trace", d / "t.csv", "--seed", "4",
             "--randomize", "--push-interval", "2"],
            ["metrics", "--trace", d / "t.csv", "--ref", "fast_swing", "--out", d / "m.json"],
            ["zmp-trace", "spike", "--fixed-dt", "0.03", "--out", d / "z.csv"],
            ["compare", "--suite", suite, "--out", d / "cmp"],
            ["sweep-k", "--suite", suite, "--k", "0,0.5,3", "--out", d / "k"],
            ["sweep-payload", "--masses", "0.5,1,3", "--out", d / "p"],
            ["pareto", "--runs", d / "cmp", "--out", d / "front.svg"],
        ]
        codes += [cli_main(["--quiet", *map(str, argv)]) for argv in runs]
    files = {}
    for name in ("a", "b"):
        root = tmp_path / name
        files[name] = {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
    differ = [k for k in files["a"] if files["a"][k] != files["b"].get(k)]
    ok = set(codes) == {0} and files["a"].keys() == files["b"].keys() and not differ
    detail = f"{len(files['a'])} files per run, {len(differ)} differ, exit codes {sorted(set(codes))}"
    assert acceptance(11, "CLI byte-identical reruns", ok, detail, time.perf_counter() - t0, 60.0)


def test_c12_classification_boundaries(acceptance):
    t0 = time.perf_counter()
    got = [stability.classify(d) for d in (0.32, 0.36, 0.3600001)]
    ok = got == [stability.INSIDE, stability.NEAR_EDGE, stability.EXITED]
    assert acceptance(12, "d classification boundaries", ok, f"{got}", time.perf_counter() - t0, 1.0)
