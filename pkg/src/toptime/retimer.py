"""Per-frame duration assignment over a receding horizon.

At each reference frame a horizon of candidate durations is searched against
a balance/time cost, the prediction is pushed into a chunk buffer, and the
exponentially weighted blend of all buffered predictions covering the frame
is committed.  The committed durations are then used to resample the
reference by linear interpolation.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numba
import numpy as np

from . import kinodyn, stability
from .motiondata import MotionClip, MotionTrajectory, RobotModel, lerp_clip
from .simharness import SimConfig, nominal_com_height

DT_MIN, DT_MAX = 0.01, 0.1
DEFAULT_GRID = tuple(round(0.01 * k, 2) for k in range(1, 11))
DEFAULT_WEIGHTS = {
    "gravity_projection": 2.5,
    "balance_penalty": -1.0,
    "support_constraint": -5.0,
    "small_dt": 5.0,
    "dt_smooth": -0.1,
    "dt_norm": 0.1,
}
KNOT_TOL = 1e-9


class RetimingError(ValueError):
    pass


@dataclass(frozen=True)
class RetimingPlan:
    dts: tuple
    knots: tuple
    total_time: float
    raw_dts: Optional[tuple] = None

    @classmethod
    def from_dts(cls, dts, raw_dts=None) -> "RetimingPlan":
        dts = tuple(float(x) for x in dts)
        if not dts:
            raise RetimingError("plan needs at least one duration")
        if any(not (d > 0 and math.isfinite(d)) for d in dts):
            raise RetimingError("durations must be positive and finite")
        # knots[i] = correctly rounded sum of the first i durations
        knots = [0.0]
        partial: List[float] = []
        for d in dts:
            partial.append(d)
            knots.append(math.fsum(partial))
        return cls(dts, tuple(knots), knots[-1], None if raw_dts is None else tuple(raw_dts))

    @classmethod
    def uniform(cls, n_frames: int, dt: float) -> "RetimingPlan":
        return cls.from_dts([dt] * (n_frames - 1))

    def to_json(self, trajectory: str, config_hash: str = "") -> str:
        return json.dumps({"trajectory": trajectory, "dt_s": list(self.dts),
                           "total_time_s": self.total_time, "config_hash": config_hash}, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RetimingPlan":
        d = json.loads(text)
        return cls.from_dts(d["dt_s"])


@dataclass
class ChunkingConfig:
    k: float = 0.5
    horizon: int = 10
    buffer_size: int = 10

    def __post_init__(self):
        if self.k < 0 or self.horizon < 1 or self.buffer_size < 1:
            raise ValueError("need k >= 0, horizon >= 1, buffer_size >= 1")
        if self.buffer_size > self.horizon + 1:
            raise ValueError("buffer cannot exceed horizon + 1")


@dataclass
class RetimeCostConfig:
    weights: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    sigma: float = 0.5
    dt_bounds: Tuple[float, float] = (DT_MIN, DT_MAX)
    grid: Tuple[float, ...] = DEFAULT_GRID
    support_floor: float = 1e-3
    beam_width: int = 16
    exhaustive_cap: int = 100_000

    def __post_init__(self):
        lo, hi = self.dt_bounds
        if not 0 < lo <= hi:
            raise ValueError("dt bounds must be ordered and positive")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        self.grid = tuple(sorted(float(g) for g in self.grid))
        if any(g < lo - 1e-12 or g > hi + 1e-12 for g in self.grid):
            raise ValueError("grid values must lie inside dt bounds")
        missing = set(DEFAULT_WEIGHTS) - set(self.weights)
        if missing:
            raise ValueError(f"missing cost weights: {sorted(missing)}")


def config_hash(cfg: RetimeCostConfig, chunk: ChunkingConfig) -> str:
    blob = json.dumps({"cost": asdict(cfg), "chunk": asdict(chunk)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# chunk blending


def chunk_weights(cfg: ChunkingConfig, size: Optional[int] = None) -> np.ndarray:
    """w_i = exp(-k i) / sum_j exp(-k j); index 0 is the oldest prediction."""
    B = cfg.buffer_size if size is None else size
    if B < 1:
        raise ValueError("buffer size must be >= 1")
    w = np.exp(-cfg.k * np.arange(B))
    return w / w.sum()


def blend_chunks(buffer: Sequence[float], cfg: ChunkingConfig,
                 dt_bounds: Tuple[float, float] = (DT_MIN, DT_MAX)) -> float:
    """Weighted average of the buffered predictions for the current frame, oldest first."""
    values = np.asarray(buffer, dtype=float)
    if values.size == 0:
        raise RetimingError("empty chunk buffer")
    if values.size > cfg.buffer_size:
        raise RetimingError("buffer longer than configured size")
    w = chunk_weights(cfg, values.size)
    return _blend(values, w, dt_bounds[0], dt_bounds[1])


@numba.njit(cache=True)
def _blend(values, w, lo, hi):
    lo_v = values.min()
    hi_v = values.max()
    acc = 0.0
    for i in range(values.shape[0]):
        acc += w[i] * (values[i] - lo_v)
    blended = min(max(lo_v + acc, lo_v), hi_v)
    return min(max(blended, lo), hi)


# ---------------------------------------------------------------------------
# cost


def _lg(x: float) -> float:
    return math.log10(x)


def retime_cost(dts: Sequence[float], rollout_summary, cfg: RetimeCostConfig) -> float:
    """Negated reward of a duration sequence and its predicted per-frame balance.

    ``rollout_summary`` holds ``pg_xy`` (n, 2) and ``d_support`` (n,).
    """
    pg = np.asarray(rollout_summary["pg_xy"], dtype=float).reshape(-1, 2)
    ds = np.asarray(rollout_summary["d_support"], dtype=float).reshape(-1)
    dts = [float(x) for x in dts]
    if len(pg) != len(dts) or len(ds) != len(dts):
        raise RetimingError("rollout summary must align with the duration sequence")
    if any(math.isnan(x) for x in dts) or np.isnan(pg).any() or np.isnan(ds).any():
        raise RetimingError("NaN in cost inputs")
    w = cfg.weights
    two_sig2 = 2.0 * cfg.sigma ** 2
    norms = [math.hypot(float(a), float(b)) for a, b in pg]
    gravity = math.fsum(math.exp(-20.0 * n) for n in norms)
    balance = math.fsum(math.exp(20.0 * n) - 1.0 for n in norms)
    support = math.fsum(_lg(7.0 * max(float(d), cfg.support_floor)) for d in ds)
    small = math.fsum(math.exp(-(d * d) / two_sig2) for d in dts)
    smooth = math.fsum(abs(dts[i + 1] - dts[i]) for i in range(len(dts) - 1))
    norm = abs(math.fsum(dts))
    reward = math.fsum([
        w["gravity_projection"] * gravity,
        w["balance_penalty"] * balance,
        w["support_constraint"] * support,
        w["small_dt"] * small,
        w["dt_smooth"] * smooth,
        w["dt_norm"] * norm,
    ])
    return -reward


def _step_cost(dt, prev_dt, pg_norm, d_support, cfg: RetimeCostConfig):
    """Vectorised per-step share of retime_cost (used to rank beam candidates)."""
    w = cfg.weights
    e = np.exp(-20.0 * pg_norm)
    r = (w["gravity_projection"] * e
         + w["balance_penalty"] * (1.0 / e - 1.0)
         + w["support_constraint"] * np.log10(7.0 * np.maximum(d_support, cfg.support_floor))
         + (w["small_dt"] * np.exp(-(dt * dt) / (2.0 * cfg.sigma ** 2)) + w["dt_norm"] * dt))
    if prev_dt is not None:
        r = r + w["dt_smooth"] * np.abs(dt - prev_dt)
    return -r


# ---------------------------------------------------------------------------
# planner model


@dataclass
class PlannerState:
    """Tilt state used by the planning model (batched along axis 0)."""

    tilt: np.ndarray       # (B, 2) roll, pitch
    rate: np.ndarray       # (B, 2)
    momentum: np.ndarray   # (B, 2) joint reaction momentum of the last segment

    def take(self, idx) -> "PlannerState":
        return PlannerState(self.tilt[idx], self.rate[idx], self.momentum[idx])

    @property
    def size(self) -> int:
        return self.tilt.shape[0]


@numba.njit(cache=True)
def _transition(k, c, I, t):
    """exp(A t) for A = [[0, 1], [-k/I, -c/I]], one 2x2 block per axis."""
    out = np.empty((I.shape[0], 2, 2))
    for ax in range(I.shape[0]):
        a = k / I[ax]
        mu = -0.5 * c / I[ax]
        nu2 = mu * mu - a
        x2 = nu2 * t * t
        if abs(x2) < 1e-8:
            ch = 1.0 + 0.5 * x2
            sh = t * (1.0 + x2 / 6.0)
        elif nu2 > 0.0:
            nu = math.sqrt(nu2)
            ch = math.cosh(nu * t)
            sh = math.sinh(nu * t) / nu
        else:
            om = math.sqrt(-nu2)
            ch = math.cos(om * t)
            sh = math.sin(om * t) / om
        e = math.exp(mu * t)
        # exp(At) = e^{mu t} [(ch - mu sh) I + sh A]
        out[ax, 0, 0] = e * (ch - mu * sh)
        out[ax, 0, 1] = e * sh
        out[ax, 1, 0] = -e * sh * a
        out[ax, 1, 1] = e * (ch + mu * sh)
    return out


class TiltPredictor:
    """Frame-level prediction of base tilt under a candidate timing.

    Joints are assumed to follow the piecewise-linear reference exactly, so the
    base receives an angular impulse at every knot equal to the change of the
    joint reaction momentum; between knots the linearised ankle pendulum
    evolves freely and is propagated with its exact transition matrix.
    Only +, -, *, / are used on candidate arrays, so results do not depend on
    batch size.
    """

    def __init__(self, model: RobotModel, traj: MotionTrajectory, sim: Optional[SimConfig] = None):
        sim = sim or SimConfig()
        self.model = model
        self.traj = traj
        q = traj.q_array()
        R = kinodyn.reaction_matrix(model)[:2]
        self.seg = (np.diff(q, axis=0) @ R.T)  # (F-1, 2)
        self.I = model.base_inertia[:2].astype(float)
        mgl = model.total_mass * sim.gravity * nominal_com_height(model) if sim.gravity_torque else 0.0
        self.k_eff = model.ankle.stiffness - mgl
        self.c = model.ankle.damping
        n = model.n_joints
        pivot = np.array([0.0, 0.0, model.ankle.pivot_height])
        chain = kinodyn.chain_kinematics(model, q, np.zeros_like(q), np.eye(3), model.base_position)
        p_com, _, _ = kinodyn.batch_momentum(model, chain, np.zeros_like(q))
        self.com_rel = p_com - pivot  # (F, 3)
        self.foot_center = stability.support_polygon(model.contact_points).centroid
        self._phi: Dict[float, np.ndarray] = {}

    @property
    def n_segments(self) -> int:
        return self.seg.shape[0]

    def initial_state(self, batch: int = 1) -> PlannerState:
        return PlannerState(np.zeros((batch, 2)), np.zeros((batch, 2)), np.zeros((batch, 2)))

    def transition(self, dt: float) -> np.ndarray:
        """(2 axes, 2, 2) exact state transition of the free tilt mode."""
        key = float(dt)
        phi = self._phi.get(key)
        if phi is None:
            phi = _transition(self.k_eff, self.c, self.I, key)
            self._phi[key] = phi
        return phi

    def advance(self, state: PlannerState, segment: int, dts) -> Tuple[PlannerState, np.ndarray, np.ndarray]:
        """Advance every batch entry over ``segment`` with its own duration.

        Returns the new state, pg_xy (B, 2) and CoM-projection offsets (B, 2)
        from the foot centre at the end of the segment.
        """
        dts = np.asarray(dts, dtype=float).reshape(-1)
        uniq, inv = np.unique(dts, return_inverse=True)
        phis = np.stack([self.transition(d) for d in uniq])[inv.reshape(-1)]
        m_new = self.seg[segment][None, :] / dts[:, None]
        rate0 = state.rate + (m_new - state.momentum) / self.I
        tilt = phis[:, :, 0, 0] * state.tilt + phis[:, :, 0, 1] * rate0
        rate = phis[:, :, 1, 0] * state.tilt + phis[:, :, 1, 1] * rate0
        c = self.com_rel[segment + 1]
        roll, pitch = tilt[:, 0], tilt[:, 1]
        off = np.column_stack([(c[0] - self.foot_center[0]) + pitch * c[2],
                               (c[1] - self.foot_center[1]) - roll * c[2]])
        pg = np.column_stack([pitch, -roll])
        return PlannerState(tilt, rate, m_new), pg, off


def _summaries(pred: TiltPredictor, state: PlannerState, start: int, seqs: np.ndarray):
    """Roll out (S, n) duration sequences; returns pg (S, n, 2) and offsets (S, n, 2)."""
    S, n = seqs.shape
    st = PlannerState(np.repeat(state.tilt, S, 0), np.repeat(state.rate, S, 0),
                      np.repeat(state.momentum, S, 0)) if state.size == 1 else state
    pgs = np.empty((S, n, 2))
    offs = np.empty((S, n, 2))
    for j in range(n):
        st, pg, off = pred.advance(st, start + j, seqs[:, j])
        pgs[:, j] = pg
        offs[:, j] = off
    return pgs, offs


def _summary_dict(pg_row: np.ndarray, off_row: np.ndarray) -> dict:
    return {"pg_xy": pg_row, "d_support": [math.hypot(float(a), float(b)) for a, b in off_row]}


def sequence_cost(pred: TiltPredictor, state: PlannerState, start: int, seq, cfg: RetimeCostConfig) -> float:
    seqs = np.asarray(seq, dtype=float)[None, :]
    pg, off = _summaries(pred, state, start, seqs)
    return retime_cost(seq, _summary_dict(pg[0], off[0]), cfg)


# ---------------------------------------------------------------------------
# search


def optimize_horizon(state: PlannerState, ref: MotionTrajectory, start_frame: int, cfg: RetimeCostConfig,
                     chunk: ChunkingConfig, sim: TiltPredictor) -> Tuple[float, ...]:
    """Best duration sequence for the next ``chunk.horizon`` segments.

    Exhaustive when |grid|^N <= cfg.exhaustive_cap, otherwise beam search.
    """
    if not cfg.grid:
        raise RetimingError("empty duration grid")
    n = min(chunk.horizon, len(ref) - 1 - start_frame)
    if n <= 0:
        raise RetimingError("no segments left after start frame")
    if len(cfg.grid) ** n <= cfg.exhaustive_cap:
        return _exhaustive(sim, state, start_frame, n, cfg)[0]
    return _beam_search_compiled(state, start_frame, n, cfg, sim)


def _exhaustive(sim: TiltPredictor, state: PlannerState, start: int, n: int, cfg: RetimeCostConfig):
    """Grid optimum over n segments; ties go to the lexicographically smallest sequence.

    Every sequence is ranked by its summed step costs, then all candidates
    within a 1e-9 relative band of the best are re-scored with retime_cost,
    which decides.
    """
    grid = np.array(cfg.grid, dtype=float)
    phis = np.stack([sim.transition(g) for g in grid])
    approx = _enumerate_costs(state.tilt[0], state.rate[0], state.momentum[0], sim.seg, sim.com_rel,
                              sim.foot_center, sim.I, phis, grid, start, n, _weight_vector(cfg),
                              2.0 * cfg.sigma ** 2, cfg.support_floor)
    band = approx.min() + 1e-9 * max(1.0, abs(approx.min()))
    idx = np.flatnonzero(approx <= band)
    # leaf order is itertools.product order, so index order is lexicographic
    seqs = grid[np.stack(np.unravel_index(idx, (len(grid),) * n), axis=1)]
    pg, off = _summaries(sim, state, start, seqs)
    best, best_cost = None, math.inf
    for s in range(len(seqs)):
        c = retime_cost(seqs[s], _summary_dict(pg[s], off[s]), cfg)
        if c < best_cost:
            best, best_cost = s, c
    return tuple(float(x) for x in seqs[best]), best_cost


@numba.njit(cache=True)
def _enumerate_costs(tilt0, rate0, mom0, seg, com_rel, fc, I, phis, grid, start, n, w, two_sig2, floor):
    """Summed step costs of all G**n sequences, depth-first with shared prefixes."""
    G = grid.shape[0]
    out = np.empty(G ** n)
    tilt = np.zeros((n + 1, 2))
    rate = np.zeros((n + 1, 2))
    mom = np.zeros((n + 1, 2))
    acc = np.zeros(n + 1)
    tilt[0] = tilt0
    rate[0] = rate0
    mom[0] = mom0
    small = np.empty(G)
    for g in range(G):
        small[g] = w[3] * np.exp(-(grid[g] * grid[g]) / two_sig2) + w[5] * grid[g]
    digits = np.zeros(n, dtype=np.int64)
    depth = 0
    for leaf in range(out.shape[0]):
        for j in range(depth, n):
            k = start + j
            g = digits[j]
            dt = grid[g]
            for a in range(2):
                m_new = seg[k, a] / dt
                r0 = rate[j, a] + (m_new - mom[j, a]) / I[a]
                tilt[j + 1, a] = phis[g, a, 0, 0] * tilt[j, a] + phis[g, a, 0, 1] * r0
                rate[j + 1, a] = phis[g, a, 1, 0] * tilt[j, a] + phis[g, a, 1, 1] * r0
                mom[j + 1, a] = m_new
            roll = tilt[j + 1, 0]
            pitch = tilt[j + 1, 1]
            pgn = np.hypot(pitch, -roll)
            offn = np.hypot((com_rel[k + 1, 0] - fc[0]) + pitch * com_rel[k + 1, 2],
                            (com_rel[k + 1, 1] - fc[1]) - roll * com_rel[k + 1, 2])
            e = np.exp(-20.0 * pgn)
            r = (w[0] * e + w[1] * (1.0 / e - 1.0) + w[2] * np.log10(7.0 * max(offn, floor)) + small[g])
            if j > 0:
                r = r + w[4] * abs(dt - grid[digits[j - 1]])
            acc[j + 1] = acc[j] - r
        out[leaf] = acc[n]
        j = n - 1
        while j >= 0 and digits[j] == G - 1:
            digits[j] = 0
            j -= 1
        if j >= 0:
            digits[j] += 1
        depth = max(j, 0)
    return out


def _beam_search(state, start, n, grid, cfg, sim):
    """Reference beam search in numpy (ranking by summed step costs, stable ties)."""
    G = len(grid)
    seqs = np.empty((1, 0))
    cost = np.zeros(1)
    st = state
    for j in range(n):
        b = seqs.shape[0]
        cand_dt = np.tile(grid, b)
        parent = np.repeat(np.arange(b), G)
        expanded = st.take(parent)
        new_st, pg, off = sim.advance(expanded, start + j, cand_dt)
        prev = seqs[parent, -1] if j > 0 else None
        step = _step_cost(cand_dt, prev, np.hypot(pg[:, 0], pg[:, 1]), np.hypot(off[:, 0], off[:, 1]), cfg)
        total = cost[parent] + step
        keep = np.argsort(total, kind="stable")[: cfg.beam_width]
        seqs = np.column_stack([seqs[parent[keep]], cand_dt[keep]])
        cost = total[keep]
        st = new_st.take(keep)
    return tuple(float(x) for x in seqs[0])


def _weight_vector(cfg: RetimeCostConfig) -> np.ndarray:
    w = cfg.weights
    return np.array([w["gravity_projection"], w["balance_penalty"], w["support_constraint"],
                     w["small_dt"], w["dt_smooth"], w["dt_norm"]], dtype=float)


def _beam_search_compiled(state, start, n, cfg, sim):
    grid = np.array(cfg.grid, dtype=float)
    phis = np.stack([sim.transition(g) for g in grid])
    seq = _beam_kernel(state.tilt[0], state.rate[0], state.momentum[0], sim.seg, sim.com_rel,
                       sim.foot_center, sim.I, phis, grid, start, n, _weight_vector(cfg),
                       2.0 * cfg.sigma ** 2, cfg.support_floor, cfg.beam_width)
    return tuple(float(x) for x in seq)


@numba.njit(cache=True)
def _stable_top(values, m, width, order, top):
    """Indices of the ``width`` smallest of values[:m], in stable-sort order."""
    cnt = 0
    for idx in range(m):
        v = values[idx]
        if cnt < width:
            pos = cnt
            cnt += 1
        elif v < top[cnt - 1]:
            pos = cnt - 1
        else:
            continue
        while pos > 0 and top[pos - 1] > v:
            top[pos] = top[pos - 1]
            order[pos] = order[pos - 1]
            pos -= 1
        top[pos] = v
        order[pos] = idx
    return cnt


def _beam_kernel_py(tilt0, rate0, mom0, seg, com_rel, fc, I, phis, grid, start, n, w, two_sig2, floor, width):
    """Loop form of _beam_search, compiled with numba below."""
    G = grid.shape[0]
    cap = width * G
    small = np.empty(G)
    for g in range(G):
        small[g] = w[3] * np.exp(-(grid[g] * grid[g]) / two_sig2) + w[5] * grid[g]
    seqs = np.zeros((width, n))
    cost = np.zeros(width)
    tilt = np.zeros((width, 2))
    rate = np.zeros((width, 2))
    mom = np.zeros((width, 2))
    n_seqs = np.zeros((width, n))
    n_cost = np.zeros(width)
    n_tilt = np.zeros((width, 2))
    n_rate = np.zeros((width, 2))
    n_mom = np.zeros((width, 2))
    tilt[0] = tilt0
    rate[0] = rate0
    mom[0] = mom0
    b = 1
    c_total = np.empty(cap)
    c_tilt = np.empty((cap, 2))
    c_rate = np.empty((cap, 2))
    c_mom = np.empty((cap, 2))
    order = np.empty(width, dtype=np.int64)
    top = np.empty(width)
    for j in range(n):
        k = start + j
        cx = com_rel[k + 1, 0] - fc[0]
        cy = com_rel[k + 1, 1] - fc[1]
        cz = com_rel[k + 1, 2]
        for p in range(b):
            for g in range(G):
                idx = p * G + g
                dt = grid[g]
                for a in range(2):
                    m_new = seg[k, a] / dt
                    r0 = rate[p, a] + (m_new - mom[p, a]) / I[a]
                    c_tilt[idx, a] = phis[g, a, 0, 0] * tilt[p, a] + phis[g, a, 0, 1] * r0
                    c_rate[idx, a] = phis[g, a, 1, 0] * tilt[p, a] + phis[g, a, 1, 1] * r0
                    c_mom[idx, a] = m_new
                roll = c_tilt[idx, 0]
                pitch = c_tilt[idx, 1]
                pgn = np.hypot(pitch, -roll)
                offn = np.hypot(cx + pitch * cz, cy - roll * cz)
                e = np.exp(-20.0 * pgn)
                r = (w[0] * e + w[1] * (1.0 / e - 1.0)
                     + w[2] * np.log10(7.0 * max(offn, floor)) + small[g])
                if j > 0:
                    r = r + w[4] * abs(dt - seqs[p, j - 1])
                c_total[idx] = cost[p] - r
        nb = _stable_top(c_total, b * G, width, order, top)
        for i in range(nb):
            idx = order[i]
            p = idx // G
            for jj in range(j):
                n_seqs[i, jj] = seqs[p, jj]
            n_seqs[i, j] = grid[idx % G]
            n_cost[i] = c_total[idx]
            for a in range(2):
                n_tilt[i, a] = c_tilt[idx, a]
                n_rate[i, a] = c_rate[idx, a]
                n_mom[i, a] = c_mom[idx, a]
        seqs, n_seqs = n_seqs, seqs
        cost, n_cost = n_cost, cost
        tilt, n_tilt = n_tilt, tilt
        rate, n_rate = n_rate, rate
        mom, n_mom = n_mom, mom
        b = nb
    return seqs[0].copy()


_beam_kernel = numba.njit(cache=True)(_beam_kernel_py)


@numba.njit(cache=True)
def _plan_kernel(seg, com_rel, fc, I, k_eff, c, phis, grid, n_frames, H, w, two_sig2, floor, width,
                 blend_w, lo, hi):
    """Receding-horizon loop for the frames where every horizon is full length.

    Returns committed and raw durations, the final planner state and the
    chunk buffer (start frames and sequences, oldest first).
    """
    B = blend_w.shape[0]
    dts = np.empty(n_frames)
    raw = np.empty(n_frames)
    tilt = np.zeros(2)
    rate = np.zeros(2)
    mom = np.zeros(2)
    buf_start = np.full(B, -1, dtype=np.int64)
    buf_seq = np.zeros((B, H))
    count = 0
    values = np.empty(B)
    for i in range(n_frames):
        seq = _beam_kernel(tilt, rate, mom, seg, com_rel, fc, I, phis, grid, i, H, w, two_sig2, floor, width)
        if count == B:
            for r in range(B - 1):
                buf_start[r] = buf_start[r + 1]
                buf_seq[r] = buf_seq[r + 1]
            count -= 1
        buf_start[count] = i
        buf_seq[count] = seq
        count += 1
        m = 0
        for r in range(count):
            if i - buf_start[r] < H:
                values[m] = buf_seq[r, i - buf_start[r]]
                m += 1
        dt = _blend(values[:m], blend_w[m - 1, :m], lo, hi)
        dts[i] = dt
        raw[i] = seq[0]
        phi = _transition(k_eff, c, I, dt)
        for a in range(2):
            m_new = seg[i, a] / dt
            r0 = rate[a] + (m_new - mom[a]) / I[a]
            t_new = phi[a, 0, 0] * tilt[a] + phi[a, 0, 1] * r0
            rate[a] = phi[a, 1, 0] * tilt[a] + phi[a, 1, 1] * r0
            tilt[a] = t_new
            mom[a] = m_new
    return dts, raw, tilt, rate, mom, buf_start[:count], buf_seq[:count]


def brute_force_plan(traj: MotionTrajectory, cfg: RetimeCostConfig, sim: TiltPredictor,
                     state: Optional[PlannerState] = None, limit: int = 1_000_000):
    """Exhaustive grid optimum over every segment of a short trajectory.

    Returns (sequence, cost); ties go to the lexicographically smallest
    sequence.
    """
    n = len(traj) - 1
    G = len(cfg.grid)
    if G ** n > limit:
        raise RetimingError(f"{G}^{n} sequences exceed the enumeration limit")
    state = state or sim.initial_state()
    seqs = np.array(list(itertools.product(cfg.grid, repeat=n)), dtype=float)
    # numpy ranking pass, independent of the compiled enumerator
    st = PlannerState(np.repeat(state.tilt, len(seqs), 0), np.repeat(state.rate, len(seqs), 0),
                      np.repeat(state.momentum, len(seqs), 0))
    approx = np.zeros(len(seqs))
    for j in range(n):
        st, pg, off = sim.advance(st, j, seqs[:, j])
        approx += _step_cost(seqs[:, j], seqs[:, j - 1] if j else None, np.hypot(pg[:, 0], pg[:, 1]),
                             np.hypot(off[:, 0], off[:, 1]), cfg)
    band = approx.min() + 1e-9 * max(1.0, abs(approx.min()))
    seqs = seqs[approx <= band]
    pg, off = _summaries(sim, state, 0, seqs)
    best, best_cost = None, math.inf
    for s in range(len(seqs)):
        c = retime_cost(seqs[s], _summary_dict(pg[s], off[s]), cfg)
        if c < best_cost:
            best, best_cost = s, c
    return tuple(float(x) for x in seqs[best]), best_cost


def retime_trajectory(model: RobotModel, traj: MotionTrajectory, cfg: Optional[RetimeCostConfig] = None,
                      chunk: Optional[ChunkingConfig] = None, sim: Optional[SimConfig] = None,
                      predictor: Optional[TiltPredictor] = None, compiled: bool = True) -> RetimingPlan:
    """Plan per-frame durations for a whole trajectory.

    With ``compiled`` the beam-search frames run inside one numba loop; the
    pure Python loop gives the same plan and is kept as the reference.
    """
    cfg = cfg or RetimeCostConfig()
    chunk = chunk or ChunkingConfig()
    pred = predictor or TiltPredictor(model, traj, sim)
    state = pred.initial_state()
    buffer: deque = deque(maxlen=chunk.buffer_size)
    dts: List[float] = []
    raw: List[float] = []
    n_seg = len(traj) - 1
    H = chunk.horizon
    first = 0
    if compiled and H > 0 and len(cfg.grid) ** H > cfg.exhaustive_cap and n_seg >= H:
        grid = np.array(cfg.grid, dtype=float)
        phis = np.stack([pred.transition(g) for g in grid])
        blend_w = np.zeros((chunk.buffer_size, chunk.buffer_size))
        for m in range(1, chunk.buffer_size + 1):
            blend_w[m - 1, :m] = chunk_weights(chunk, m)
        first = n_seg - H + 1
        out = _plan_kernel(pred.seg, pred.com_rel, pred.foot_center, pred.I, pred.k_eff, pred.c, phis, grid,
                           first, H, _weight_vector(cfg), 2.0 * cfg.sigma ** 2, cfg.support_floor,
                           cfg.beam_width, blend_w, cfg.dt_bounds[0], cfg.dt_bounds[1])
        k_dts, k_raw, tilt, rate, mom, starts, seqs = out
        dts = [float(x) for x in k_dts]
        raw = [float(x) for x in k_raw]
        state = PlannerState(tilt[None].copy(), rate[None].copy(), mom[None].copy())
        for start, seq in zip(starts, seqs):
            buffer.append((int(start), tuple(float(x) for x in seq)))
    for i in range(first, n_seg):
        seq = optimize_horizon(state, traj, i, cfg, chunk, pred)
        buffer.append((i, seq))
        covering = [s[i - start] for start, s in buffer if i - start < len(s)]
        dt = blend_chunks(covering, chunk, cfg.dt_bounds)
        raw.append(seq[0])
        dts.append(dt)
        state, _, _ = pred.advance(state, i, [dt])
    return RetimingPlan.from_dts(dts, raw)


# ---------------------------------------------------------------------------
# resampling


@dataclass
class ExecutedReference:
    time: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    frame: np.ndarray   # interval index per tick
    u: np.ndarray       # interpolation parameter per tick
    r: np.ndarray
    theta6: np.ndarray

    def __len__(self) -> int:
        return len(self.time)

    def clip(self, k: int) -> MotionClip:
        return MotionClip(self.r[k], self.theta6[k], self.q[k], self.dq[k])


def locate_ticks(knots, times):
    """Interval index and interpolation parameter for each tick time."""
    knots = np.asarray(knots, dtype=float)
    times = np.asarray(times, dtype=float)
    n_int = len(knots) - 1
    idx = np.searchsorted(knots, times + KNOT_TOL, side="right") - 1
    idx = np.clip(idx, 0, n_int - 1)
    dts = np.diff(knots)
    offset = times - knots[idx]
    offset = np.where(np.abs(offset) <= KNOT_TOL, 0.0, offset)
    u = np.clip(offset / dts[idx], 0.0, 1.0)
    return idx, u


def resample(traj: MotionTrajectory, plan: RetimingPlan, dt_ctrl: float) -> ExecutedReference:
    """Executed reference at every control tick in [0, total_time]."""
    if dt_ctrl <= 0:
        raise ValueError("dt_ctrl must be positive")
    if len(plan.dts) != len(traj) - 1:
        raise RetimingError("plan length does not match trajectory")
    n_ticks = int(math.floor(plan.total_time / dt_ctrl + KNOT_TOL)) + 1
    times = np.arange(n_ticks) * dt_ctrl
    idx, u = locate_ticks(plan.knots, times)
    data = np.stack([f.as_vector() for f in traj.frames])
    a, b = data[idx], data[idx + 1]
    w = (1.0 - u)[:, None]
    out = w * a + u[:, None] * b
    out[u == 0.0] = a[u == 0.0]
    out[u == 1.0] = b[u == 1.0]
    n_j = traj.n_joints
    scale = traj.frame_period / np.asarray(plan.dts)[idx]
    return ExecutedReference(
        time=times, q=out[:, 9 : 9 + n_j], dq=out[:, 9 + n_j :] * scale[:, None], frame=idx, u=u,
        r=out[:, :3], theta6=out[:, 3:9],
    )
