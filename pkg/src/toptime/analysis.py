"""Evaluation metrics, Pareto fronts, regressions and the experiment protocols.

Everything here is a consumer of the other modules: a rollout trace plus the
reference it tracked goes in, scalar metrics come out, and the suite runners
aggregate those into comparison tables that ``emit_report`` writes to disk.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import assets, kinodyn, retimer, simharness, stability
from .motiondata import MotionTrajectory, RobotModel

FIXED_DTS = (0.01, 0.03, 0.05)
DEFAULT_KS = (0.0, 0.2, 0.5, 0.8, 1.5, 3.0)
PAYLOADS = (0.5, 1.0, 3.0)
OPTIMIZED = "optimized"

METRIC_FIELDS = ("time_cost", "success", "E_jpe", "E_eepe", "E_eeoe", "E_g",
                 "E_acc_upper", "E_acc_lower_proxy", "E_action_upper")


class RankDeficientError(ValueError):
    pass


# ---------------------------------------------------------------------------
# metrics


@dataclass
class MetricsReport:
    time_cost: float
    success: bool
    E_jpe: float
    E_eepe: float
    E_eeoe: float
    E_g: float
    E_acc_upper: float
    E_acc_lower_proxy: float  # base tilt acceleration; the model has no leg joints
    E_action_upper: float
    trajectory: str = ""
    plan_hash: str = ""
    seed: int = 0
    peak_d: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def _geodesic(Ra: np.ndarray, Rb: np.ndarray) -> np.ndarray:
    """Rotation angle of Ra^T Rb; atan2 form stays accurate near zero."""
    Rr = np.swapaxes(Ra, -1, -2) @ Rb
    skew = np.stack([Rr[..., 2, 1] - Rr[..., 1, 2], Rr[..., 0, 2] - Rr[..., 2, 0],
                     Rr[..., 1, 0] - Rr[..., 0, 1]], axis=-1)
    s = 0.5 * np.linalg.norm(skew, axis=-1)
    c = 0.5 * (np.trace(Rr, axis1=-2, axis2=-1) - 1.0)
    return np.arctan2(s, c)


def _mean_norm(x: np.ndarray) -> float:
    if len(x) == 0:
        return 0.0
    return float(np.mean(np.linalg.norm(x.reshape(len(x), -1), axis=1)))


def compute_metrics(trace: simharness.RolloutTrace, executed_ref, model: RobotModel,
                    time_cost: Optional[float] = None, trajectory: str = "", plan_hash: str = "",
                    seed: int = 0, align_tol: float = 1e-6) -> MetricsReport:
    """Tracking, balance and smoothness metrics over the executed ticks.

    A trace truncated by a fall is scored over the ticks it contains.  Tracking
    errors compare the tilted robot against the reference on an upright base.
    """
    n = len(trace)
    q_ref_full = np.asarray(executed_ref.q, dtype=float)
    if n == 0 or n > len(q_ref_full):
        raise ValueError(f"trace has {n} ticks, reference has {len(q_ref_full)}")
    q_ref = q_ref_full[:n]
    if np.max(np.abs(q_ref - trace.q_ref)) > align_tol:
        raise ValueError("trace is not tick-aligned with the reference")
    if time_cost is None:
        t = np.asarray(executed_ref.time, dtype=float)
        time_cost = float(t[-1])

    n_j = q_ref.shape[1]
    e_jpe = float(np.mean(np.linalg.norm(q_ref - trace.q, axis=1)) / math.sqrt(n_j))

    R, pos, _, _ = simharness.base_motion(model, trace.base_tilt, trace.base_tilt_rate)
    zeros = np.zeros_like(q_ref)
    act = kinodyn.chain_kinematics(model, trace.q, zeros, R, pos)
    ref = kinodyn.chain_kinematics(model, q_ref, zeros, np.eye(3), model.base_position)
    pa, ra = kinodyn.end_effector_poses(model, act)
    pr, rr = kinodyn.end_effector_poses(model, ref)
    e_eepe = float(np.mean(np.linalg.norm(pa - pr, axis=2)))
    e_eeoe = float(np.mean(_geodesic(ra, rr)))

    e_g = _mean_norm(trace.pg_xy)
    dt = trace.dt
    e_acc = _mean_norm(np.diff(trace.dq, axis=0) / dt) if n > 1 else 0.0
    e_acc_low = _mean_norm(np.diff(trace.base_tilt_rate, axis=0) / dt) if n > 1 else 0.0
    e_action = _mean_norm(np.diff(q_ref, axis=0)) if n > 1 else 0.0
    return MetricsReport(
        time_cost=float(time_cost), success=bool(trace.success), E_jpe=e_jpe, E_eepe=e_eepe,
        E_eeoe=e_eeoe, E_g=e_g, E_acc_upper=e_acc, E_acc_lower_proxy=e_acc_low,
        E_action_upper=e_action, trajectory=trajectory, plan_hash=plan_hash, seed=int(seed),
        peak_d=float(np.max(trace.d)),
    )


def plan_hash(plan: retimer.RetimingPlan) -> str:
    return hashlib.sha256(np.asarray(plan.dts, dtype=float).tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Pareto front


@dataclass(frozen=True)
class ParetoPoint:
    time_cost: float
    E_g: float
    E_eepe: float
    tag: str = ""

    @property
    def values(self) -> Tuple[float, float, float]:
        return (self.time_cost, self.E_g, self.E_eepe)


@dataclass
class ParetoSet:
    front: List[ParetoPoint]
    dominated: List[ParetoPoint]


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """a weakly better everywhere and strictly better somewhere."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def pareto_front(points: Sequence[ParetoPoint]) -> ParetoSet:
    """Non-dominated subset, ordered by time_cost (stable).

    Points are swept in lexicographic order so every dominator of a point is
    met before it; identical points never dominate each other and are all kept.
    """
    if not points:
        raise ValueError("need at least one point")
    order = sorted(range(len(points)), key=lambda i: (points[i].values, i))
    front_idx: List[int] = []
    is_front = [False] * len(points)
    for i in order:
        p = points[i].values
        if not any(dominates(points[j].values, p) for j in front_idx):
            front_idx.append(i)
            is_front[i] = True
    front = sorted((points[i] for i in range(len(points)) if is_front[i]), key=lambda p: p.time_cost)
    rest = [points[i] for i in range(len(points)) if not is_front[i]]
    return ParetoSet(front, rest)


# ---------------------------------------------------------------------------
# regression


@dataclass
class RegressionFit:
    degree: int
    coefficients: np.ndarray
    residual_rms: float
    inputs: Tuple[str, ...] = ("x",)
    target: str = "y"

    def predict(self, x, y=None) -> np.ndarray:
        if len(self.inputs) == 1:
            return _vander(np.asarray(x, float), self.degree) @ self.coefficients
        return _bivariate_basis(np.asarray(x, float), np.asarray(y, float)) @ self.coefficients


def _vander(x: np.ndarray, degree: int) -> np.ndarray:
    return np.vander(x, degree + 1, increasing=True)


def _bivariate_basis(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones_like(x), x, y, x * x, x * y, y * y])


def _normal_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Least squares through the normal equations on unit-norm columns."""
    scale = np.linalg.norm(A, axis=0)
    if np.any(scale == 0):
        raise RankDeficientError("design matrix has an all-zero column")
    As = A / scale
    G = As.T @ As
    if np.linalg.cond(G) > 1e14:
        raise RankDeficientError("normal matrix is numerically singular")
    c = np.linalg.solve(G, As.T @ b)
    # one step of iterative refinement recovers most of the squared conditioning loss
    c = c + np.linalg.solve(G, As.T @ (b - As @ c))
    return c / scale


def polyfit(xs, ys, degree: int, x_label: str = "x", y_label: str = "y") -> RegressionFit:
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if degree < 0 or xs.shape != ys.shape:
        raise ValueError("degree must be >= 0 and inputs equally long")
    if len(np.unique(xs)) < degree + 1:
        raise RankDeficientError(f"degree {degree} needs at least {degree + 1} distinct x values")
    A = _vander(xs, degree)
    c = _normal_solve(A, ys)
    res = ys - A @ c
    return RegressionFit(degree, c, float(np.sqrt(np.mean(res ** 2))), (x_label,), y_label)


def polyfit2(xs, ys, zs, labels=("x", "y"), target: str = "z") -> RegressionFit:
    """Full quadratic in two inputs: basis {1, x, y, x^2, xy, y^2}."""
    xs, ys, zs = (np.asarray(a, dtype=float).ravel() for a in (xs, ys, zs))
    if not xs.shape == ys.shape == zs.shape:
        raise ValueError("inputs must be equally long")
    if len(xs) < 6:
        raise RankDeficientError("bivariate quadratic needs at least 6 samples")
    A = _bivariate_basis(xs, ys)
    c = _normal_solve(A, zs)
    res = zs - A @ c
    return RegressionFit(2, c, float(np.sqrt(np.mean(res ** 2))), tuple(labels), target)


# ---------------------------------------------------------------------------
# suite protocols


@dataclass
class SuiteConfig:
    motions: Tuple[str, ...] = assets.SUITE_NAMES
    seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    fixed_dts: Tuple[float, ...] = FIXED_DTS
    optimized: bool = True
    n_intervals: int = assets.SUITE_INTERVALS
    dt_ctrl: float = 0.005
    randomize: bool = True
    push_interval: float = 5.0
    push_torque: Tuple[float, float] = (-30.0, 30.0)
    payload_mass: float = 0.0
    k: float = 0.5
    horizon: int = 10
    buffer_size: int = 10
    beam_width: int = 16

    def __post_init__(self):
        self.motions = tuple(self.motions)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.fixed_dts = tuple(float(x) for x in self.fixed_dts)
        self.push_torque = tuple(self.push_torque)
        if not self.motions or not self.seeds:
            raise ValueError("suite needs at least one motion and one seed")
        if self.n_intervals < 2:
            raise ValueError("motions need at least two intervals")

    @classmethod
    def from_json(cls, path) -> "SuiteConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown suite keys: {sorted(unknown)}")
        return cls(**data)

    def chunking(self, k: Optional[float] = None) -> retimer.ChunkingConfig:
        return retimer.ChunkingConfig(self.k if k is None else k, self.horizon, self.buffer_size)

    def cost(self) -> retimer.RetimeCostConfig:
        return retimer.RetimeCostConfig(beam_width=self.beam_width)

    def disturbance(self, seed: int, payload: Optional[float] = None) -> simharness.DisturbanceConfig:
        return simharness.DisturbanceConfig(
            push_interval=self.push_interval, push_torque=self.push_torque,
            payload_mass=self.payload_mass if payload is None else payload,
            randomize=self.randomize, seed=seed)


@dataclass
class RunRecord:
    method: str
    motion: str
    seed: int
    metrics: MetricsReport

    def as_row(self) -> dict:
        row = {"method": self.method, "motion": self.motion, "seed": self.seed}
        row.update({f: getattr(self.metrics, f) for f in METRIC_FIELDS})
        row["peak_d"] = self.metrics.peak_d
        row["plan_hash"] = self.metrics.plan_hash
        return row


@dataclass
class Results:
    """Aggregated table plus per-run rows and optional plot series."""

    name: str
    rows: List[dict]
    runs: List[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    series: Dict[str, dict] = field(default_factory=dict)

    def row(self, key: str, value) -> dict:
        for r in self.rows:
            if r.get(key) == value:
                return r
        raise KeyError(f"no row with {key}={value!r}")


def method_label(dt: Optional[float]) -> str:
    return OPTIMIZED if dt is None else f"fixed_{dt:.2f}"


def aggregate(records: Sequence[RunRecord], method: str) -> dict:
    sel = [r.metrics for r in records if r.method == method]
    if not sel:
        raise ValueError(f"no runs for method {method}")
    row = {"method": method, "runs": len(sel), "success_rate": sum(m.success for m in sel) / len(sel)}
    for f in METRIC_FIELDS:
        if f == "success":
            continue
        row[f] = math.fsum(getattr(m, f) for m in sel) / len(sel)
    row["peak_d"] = math.fsum(m.peak_d for m in sel) / len(sel)
    return row


def _evaluate(model: RobotModel, traj: MotionTrajectory, plan: retimer.RetimingPlan, method: str,
              seed: int, suite: SuiteConfig, payload: Optional[float] = None,
              keep: Optional[dict] = None) -> RunRecord:
    ref = retimer.resample(traj, plan, suite.dt_ctrl)
    trace = simharness.rollout(model, ref, suite.dt_ctrl, suite.disturbance(seed, payload))
    m = compute_metrics(trace, ref, simharness.apply_payload(model, suite.payload_mass if payload is None else payload),
                        time_cost=plan.total_time, trajectory=traj.name, plan_hash=plan_hash(plan), seed=seed)
    if keep is not None:
        keep["trace"] = trace
    return RunRecord(method, traj.name, seed, m)


def _suite_motions(suite: SuiteConfig) -> List[MotionTrajectory]:
    try:
        return [assets.motion_by_name(name, suite.n_intervals) for name in suite.motions]
    except KeyError as exc:
        raise FileNotFoundError(f"missing bundled motion: {exc}") from None


def run_comparison(suite: Optional[SuiteConfig] = None, model: Optional[RobotModel] = None,
                   progress=None) -> Results:
    """Fixed-duration baselines and the optimized plan over motions x seeds."""
    suite = suite or SuiteConfig()
    model = model or assets.default_model()
    motions = _suite_motions(suite)
    methods = [method_label(dt) for dt in suite.fixed_dts] + ([OPTIMIZED] if suite.optimized else [])
    records: List[RunRecord] = []
    series: Dict[str, dict] = {}
    cost, chunk = suite.cost(), suite.chunking()
    showcase = "fast_swing" if "fast_swing" in suite.motions else suite.motions[0]
    for traj in motions:
        plans = {method_label(dt): retimer.RetimingPlan.uniform(len(traj), dt) for dt in suite.fixed_dts}
        if suite.optimized:
            plans[OPTIMIZED] = retimer.retime_trajectory(model, traj, cost, chunk)
            if traj.name == showcase:
                series[f"dt_profile/{traj.name}"] = {"x": list(range(len(traj) - 1)),
                                                     "y": list(plans[OPTIMIZED].dts)}
        for method in methods:
            for seed in suite.seeds:
                keep: dict = {}
                records.append(_evaluate(model, traj, plans[method], method, seed, suite, keep=keep))
                if seed == suite.seeds[0] and traj.name == showcase:
                    tr = keep["trace"]
                    series[f"d_trace/{method}"] = {"x": tr.time.tolist(), "y": tr.d.tolist()}
            if progress:
                progress(f"{traj.name} {method}")
    rows = [aggregate(records, m) for m in methods]
    meta = {"suite": asdict(suite), "model": model.name, "success_denominator": "per trajectory run"}
    return Results("comparison", rows, [r.as_row() for r in records], meta, series)


def run_k_sweep(ks: Sequence[float] = DEFAULT_KS, suite: Optional[SuiteConfig] = None,
                model: Optional[RobotModel] = None, progress=None) -> Results:
    """Optimized-plan metrics per blending decay k, with the weight vectors."""
    suite = suite or SuiteConfig()
    model = model or assets.default_model()
    motions = _suite_motions(suite)
    cost = suite.cost()
    rows, runs = [], []
    for k in ks:
        chunk = suite.chunking(k)
        label = f"k={k:g}"
        records = []
        for traj in motions:
            plan = retimer.retime_trajectory(model, traj, cost, chunk)
            tv = float(np.sum(np.abs(np.diff(plan.dts))))
            for seed in suite.seeds:
                rec = _evaluate(model, traj, plan, label, seed, suite)
                records.append(rec)
                run = rec.as_row()
                run["k"] = k
                run["dt_total_variation"] = tv
                runs.append(run)
            if progress:
                progress(f"{label} {traj.name}")
        row = aggregate(records, label)
        row["k"] = k
        row["weights"] = [float(w) for w in retimer.chunk_weights(chunk)]
        rows.append(row)
    meta = {"suite": asdict(suite), "model": model.name}
    return Results("k_sweep", rows, runs, meta)


def run_payload_sweep(masses: Sequence[float] = PAYLOADS, motion: str = "fast_swing",
                      fixed_dts: Sequence[float] = (0.03,), suite: Optional[SuiteConfig] = None,
                      model: Optional[RobotModel] = None, progress=None) -> Results:
    """Payload at every end effector; the planner is given the loaded model.

    Defaults to a single deterministic run per cell (no pushes, no
    randomization) so the payload is the only thing that changes.
    """
    suite = suite or SuiteConfig(motions=(motion,), seeds=(0,), randomize=False, push_interval=0.0)
    model = model or assets.default_model()
    if any(m < 0 for m in masses):
        raise ValueError("payload masses must be non-negative")
    traj = assets.motion_by_name(motion, suite.n_intervals)
    cost, chunk = suite.cost(), suite.chunking()
    rows, runs = [], []
    methods = [method_label(dt) for dt in fixed_dts] + ([OPTIMIZED] if suite.optimized else [])
    for mass in masses:
        loaded = simharness.apply_payload(model, mass)
        plans = {method_label(dt): retimer.RetimingPlan.uniform(len(traj), dt) for dt in fixed_dts}
        if suite.optimized:
            plans[OPTIMIZED] = retimer.retime_trajectory(loaded, traj, cost, chunk)
        for method in methods:
            records = [_evaluate(model, traj, plans[method], method, seed, suite, payload=mass)
                       for seed in suite.seeds]
            row = aggregate(records, method)
            row["payload_kg"] = mass
            rows.append(row)
            for rec in records:
                run = rec.as_row()
                run["payload_kg"] = mass
                runs.append(run)
        if progress:
            progress(f"payload {mass:g} kg")
    meta = {"motion": motion, "suite": asdict(suite), "model": model.name}
    return Results("payload_sweep", rows, runs, meta)


def pareto_points(runs: Iterable[dict]) -> List[ParetoPoint]:
    return [ParetoPoint(float(r["time_cost"]), float(r["E_g"]), float(r["E_eepe"]),
                        f"{r['method']}/{r['motion']}/{r['seed']}") for r in runs]


# ---------------------------------------------------------------------------
# report emission


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return float(format(f, ".12g")) if math.isfinite(f) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def table_csv(rows: Sequence[dict]) -> str:
    columns: List[str] = []
    for r in rows:
        columns += [c for c in r if c not in columns]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


# --- svg -------------------------------------------------------------------

_W, _H, _PAD = 640, 400, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _axes(title: str, xlabel: str, ylabel: str, xr, yr) -> List[str]:
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
           f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
           f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
           f'<text x="{_W // 2}" y="{_H - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
           f'<text x="14" y="{_H // 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 14 {_H // 2})">{ylabel}</text>']
    for frac in (0.0, 0.5, 1.0):
        xv = xr[0] + frac * (xr[1] - xr[0])
        yv = yr[0] + frac * (yr[1] - yr[0])
        px = _PAD + frac * (_W - 2 * _PAD)
        py = _H - _PAD - frac * (_H - 2 * _PAD)
        out.append(f'<text x="{px:.1f}" y="{_H - _PAD + 15}" text-anchor="middle" font-size="10">{xv:.4g}</text>')
        out.append(f'<text x="{_PAD - 4}" y="{py:.1f}" text-anchor="end" font-size="10">{yv:.4g}</text>')
    return out


def _range(values) -> Tuple[float, float]:
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    if len(v) == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def _mapper(xr, yr):
    def f(x, y):
        px = _PAD + (x - xr[0]) / (xr[1] - xr[0]) * (_W - 2 * _PAD)
        py = _H - _PAD - (y - yr[0]) / (yr[1] - yr[0]) * (_H - 2 * _PAD)
        return px, py
    return f


def svg_lines(title: str, curves: Dict[str, dict], xlabel: str = "x", ylabel: str = "y",
              max_points: int = 2000) -> str:
    xs = [x for c in curves.values() for x in c["x"]]
    ys = [y for c in curves.values() for y in c["y"] if math.isfinite(y)]
    xr, yr = _range(xs), _range(ys)
    to = _mapper(xr, yr)
    out = _axes(title, xlabel, ylabel, xr, yr)
    for i, (name, c) in enumerate(sorted(curves.items())):
        x, y = np.asarray(c["x"], float), np.asarray(c["y"], float)
        step = max(1, int(math.ceil(len(x) / max_points)))
        pts = " ".join("%.2f,%.2f" % to(a, b) for a, b in zip(x[::step], y[::step]) if math.isfinite(b))
        color = _COLORS[i % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        out.append(f'<text x="{_W - _PAD}" y="{_PAD + 14 * i}" text-anchor="end" font-size="10" '
                   f'fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_pareto(points: Sequence[ParetoPoint], title: str = "Pareto front") -> str:
    """Time cost against E_g; front members are drawn filled and connected."""
    ps = pareto_front(points)
    xr = _range([p.time_cost for p in points])
    yr = _range([p.E_g for p in points])
    to = _mapper(xr, yr)
    out = _axes(title, "time cost [s]", "E_g", xr, yr)
    for p in ps.dominated:
        x, y = to(p.time_cost, p.E_g)
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="none" stroke="#888888" '
                   f'data-front="0" data-tag="{p.tag}"/>')
    line = " ".join("%.2f,%.2f" % to(p.time_cost, p.E_g) for p in ps.front)
    out.append(f'<polyline fill="none" stroke="#d62728" stroke-width="1" points="{line}"/>')
    for p in ps.front:
        x, y = to(p.time_cost, p.E_g)
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="#d62728" '
                   f'data-front="1" data-tag="{p.tag}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(results: Results, out_dir, formats: Sequence[str] = ("csv", "json", "svg")) -> List[Path]:
    """Write the table (CSV/JSON) and plots (SVG) for ``results`` into ``out_dir``."""
    if not results.rows:
        raise ValueError("results are empty; nothing written")
    bad = set(formats) - {"csv", "json", "svg"}
    if bad:
        raise ValueError(f"unknown formats: {sorted(bad)}")
    files: Dict[str, str] = {}
    name = results.name
    if "csv" in formats:
        files[f"{name}.csv"] = table_csv(results.rows)
        if results.runs:
            files[f"{name}_runs.csv"] = table_csv(results.runs)
    if "json" in formats:
        doc = {"name": name, "rows": results.rows, "runs": results.runs, "meta": results.meta}
        files[f"{name}.json"] = json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n"
    if "svg" in formats:
        if results.runs and all(k in results.runs[0] for k in ("time_cost", "E_g", "E_eepe")):
            files[f"{name}_pareto.svg"] = svg_pareto(pareto_points(results.runs))
        groups: Dict[str, Dict[str, dict]] = {}
        for key, curve in results.series.items():
            kind, _, label = key.partition("/")
            groups.setdefault(kind, {})[label] = curve
        for kind, curves in sorted(groups.items()):
            xl, yl = ("time [s]", "d [m]") if kind == "d_trace" else ("frame", "dt [s]")
            files[f"{name}_{kind}.svg"] = svg_lines(kind, curves, xl, yl)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc}") from None
    written = []
    for fname, text in files.items():
        path = out / fname
        path.write_text(text)
        written.append(path)
    return written
