"""Reduced balancing simulator.

Upper-body joints track the executed reference with a PD torque law
(torque limits, optional actuation delay).  The base is a two-axis inverted
pendulum about the ankle pivot with spring-damper compliance, excited by the
reaction to joint accelerations and by external pushes.  Stability fields
(CoM, momentum, ZMP, margin) are evaluated after integration because they do
not feed back into the dynamics.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence(seed)``; stream 0 draws the model perturbation, stream 1 the
push torques.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kinodyn, stability
from .motiondata import RobotModel


class SimulationError(RuntimeError):
    pass


@dataclass
class SimConfig:
    dt_ctrl: float = 0.005
    gravity: float = stability.GRAVITY
    gravity_torque: bool = True
    literal_pd: bool = False
    fall_persist: int = 10
    tilt_max: float = 0.5
    t_inside: float = stability.T_INSIDE
    t_edge: float = stability.T_EDGE


@dataclass
class DisturbanceConfig:
    push_interval: float = 5.0          # s, <= 0 disables pushes
    push_torque: Tuple[float, float] = (-30.0, 30.0)  # N m, per tilt axis
    payload_mass: float = 0.0           # kg at every end effector
    randomize: bool = False
    mass_scale: Tuple[float, float] = (0.8, 1.2)
    gain_scale: Tuple[float, float] = (0.8, 1.2)
    motor_delay_ms: Tuple[float, float] = (0.0, 10.0)
    com_offset: Tuple[float, float] = (-0.05, 0.05)
    seed: int = 0

    def __post_init__(self):
        for name in ("push_torque", "mass_scale", "gain_scale", "motor_delay_ms", "com_offset"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: range is not ordered")


@dataclass(frozen=True)
class Perturbation:
    mass_scale: float = 1.0
    kp_scale: float = 1.0
    kd_scale: float = 1.0
    motor_delay_ms: float = 0.0
    com_offset: Tuple[float, float] = (0.0, 0.0)


@dataclass
class SimState:
    q: np.ndarray
    dq: np.ndarray
    base_tilt: np.ndarray = field(default_factory=lambda: np.zeros(2))
    base_tilt_rate: np.ndarray = field(default_factory=lambda: np.zeros(2))
    time: float = 0.0
    pending_torque_queue: tuple = ()

    @classmethod
    def rest(cls, q0) -> "SimState":
        q0 = np.asarray(q0, dtype=float)
        return cls(q0.copy(), np.zeros_like(q0))


@dataclass
class RolloutTrace:
    dt: float
    time: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    ddq: np.ndarray
    tau_cmd: np.ndarray
    tau: np.ndarray
    q_ref: np.ndarray
    dq_ref: np.ndarray
    base_tilt: np.ndarray
    base_tilt_rate: np.ndarray
    pg_xy: np.ndarray
    p_com: np.ndarray
    P: np.ndarray
    L: np.ndarray
    Pdot: np.ndarray
    Ldot: np.ndarray
    p_zmp: np.ndarray
    d: np.ndarray
    classification: np.ndarray  # codes, see stability.CLASS_CODES
    fall_time: Optional[float] = None
    total_mass: float = 0.0

    @property
    def success(self) -> bool:
        return self.fall_time is None

    def __len__(self) -> int:
        return len(self.time)


# ---------------------------------------------------------------------------
# model perturbations


def pd_torque(kp, kd, q_ref, dq_ref, q, dq, limit, literal: bool = False):
    """Clamped PD law; ``literal`` uses +kd*dq instead of velocity-error damping."""
    if literal:
        tau = kp * (q_ref - q) + kd * dq
    else:
        tau = kp * (q_ref - q) + kd * (dq_ref - dq)
    return np.clip(tau, -limit, limit)


def sample_randomization(d: DisturbanceConfig, seed: Optional[int] = None) -> Perturbation:
    seed = d.seed if seed is None else seed
    if not d.randomize:
        return Perturbation()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed).spawn(2)[0]))
    u = lambda r: float(rng.uniform(r[0], r[1])) if r[0] < r[1] else float(r[0])
    return Perturbation(
        mass_scale=u(d.mass_scale),
        kp_scale=u(d.gain_scale),
        kd_scale=u(d.gain_scale),
        motor_delay_ms=u(d.motor_delay_ms),
        com_offset=(u(d.com_offset), u(d.com_offset)),
    )


def apply_perturbation(model: RobotModel, p: Perturbation) -> RobotModel:
    m = model.copy()
    for link in m.links:
        link.mass *= p.mass_scale
        link.inertia *= p.mass_scale
    for a in m.actuators:
        a.kp *= p.kp_scale
        a.kd *= p.kd_scale
    m.base_com = m.base_com + np.array([p.com_offset[0], p.com_offset[1], 0.0])
    return m


def apply_payload(model: RobotModel, mass: float) -> RobotModel:
    """Attach a point mass at every end effector.

    The holding link's mass/CoM change, and every joint upstream gains the
    payload's inertia about its axis (zero posture) in both its scalar
    inertia and its reflected inertia.
    """
    m = model.copy()
    if mass <= 0:
        return m
    n = m.n_joints
    chain = kinodyn.chain_kinematics(m, np.zeros((1, n)), np.zeros((1, n)), np.eye(3), np.zeros(3))
    for ee in m.end_effectors:
        link = m.links[ee.link]
        total = link.mass + mass
        link.com = (link.mass * link.com + mass * ee.offset) / total
        link.mass = total
        p_ee = chain.origin[0, ee.link + 1] + chain.rot[0, ee.link + 1] @ ee.offset
        j = ee.link
        while j >= 0:
            a = chain.axes[0, j]
            r = p_ee - chain.origin[0, j + 1]
            r_perp = r - np.dot(r, a) * a
            extra = mass * float(np.dot(r_perp, r_perp))
            m.links[j].inertia += extra
            m.actuators[j].reflected_inertia += extra
            j = m.joints[j].parent
    return m


# ---------------------------------------------------------------------------
# integration


class _Dynamics:
    """Per-model constants used by every tick."""

    def __init__(self, model: RobotModel, cfg: SimConfig, delay_ticks: int = 0):
        self.model = model
        self.cfg = cfg
        self.kp = np.array([a.kp for a in model.actuators])
        self.kd = np.array([a.kd for a in model.actuators])
        self.limit = np.array([a.torque_limit for a in model.actuators])
        self.J = np.array([a.reflected_inertia for a in model.actuators])
        self.R = kinodyn.reaction_matrix(model)[:2]  # roll, pitch rows
        self.I_tilt = model.base_inertia[:2].copy()
        self.k = model.ankle.stiffness
        self.c = model.ankle.damping
        self.delay = int(delay_ticks)
        self.M = model.total_mass
        self.pivot = np.array([0.0, 0.0, model.ankle.pivot_height])
        self.l_com = nominal_com_height(model)
        self.mgl = self.M * cfg.gravity * self.l_com if cfg.gravity_torque else 0.0

    def base_accel(self, tilt, rate, reaction, push):
        return (-self.k * tilt - self.c * rate + self.mgl * np.sin(tilt) + reaction + push) / self.I_tilt


def nominal_com_height(model: RobotModel) -> float:
    """Pivot-to-CoM distance at the zero posture."""
    n = model.n_joints
    chain = kinodyn.chain_kinematics(model, np.zeros((1, n)), np.zeros((1, n)), np.eye(3), model.base_position)
    p_com, _, _ = kinodyn.batch_momentum(model, chain, np.zeros((1, n)))
    return float(np.linalg.norm(p_com[0] - np.array([0.0, 0.0, model.ankle.pivot_height])))


def step(model: RobotModel, state: SimState, q_ref, dq_ref, dt_ctrl: float,
         push=(0.0, 0.0), cfg: Optional[SimConfig] = None, delay_ticks: int = 0,
         _dyn: Optional[_Dynamics] = None) -> SimState:
    """Advance one control tick with semi-implicit Euler (velocities, then positions)."""
    if not 1e-4 <= dt_ctrl <= 1e-2:
        raise ValueError("dt_ctrl must lie in [1e-4, 1e-2] s")
    cfg = cfg or SimConfig()
    dyn = _dyn or _Dynamics(model, cfg, delay_ticks)
    tau_cmd = pd_torque(dyn.kp, dyn.kd, q_ref, dq_ref, state.q, state.dq, dyn.limit, cfg.literal_pd)
    queue = tuple(state.pending_torque_queue) + (tau_cmd,)
    if dyn.delay > 0:
        if len(queue) > dyn.delay:
            tau, queue = queue[0], queue[1:]
        else:
            tau = np.zeros_like(tau_cmd)
    else:
        tau, queue = tau_cmd, ()
    ddq = tau / dyn.J
    dq = state.dq + dt_ctrl * ddq
    q = state.q + dt_ctrl * dq
    acc = dyn.base_accel(state.base_tilt, state.base_tilt_rate, dyn.R @ ddq, np.asarray(push, float))
    rate = state.base_tilt_rate + dt_ctrl * acc
    tilt = state.base_tilt + dt_ctrl * rate
    new = SimState(q, dq, tilt, rate, state.time + dt_ctrl, queue)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(tilt))):
        raise SimulationError("integration produced non-finite state")
    return new


def tilt_energy(model: RobotModel, tilt, rate, cfg: Optional[SimConfig] = None) -> np.ndarray:
    """Mechanical energy of each tilt axis: kinetic + spring + gravity potential."""
    cfg = cfg or SimConfig()
    dyn = _Dynamics(model, cfg)
    tilt = np.asarray(tilt, float)
    rate = np.asarray(rate, float)
    return 0.5 * dyn.I_tilt * rate ** 2 + 0.5 * dyn.k * tilt ** 2 + dyn.mgl * (np.cos(tilt) - 1.0)


def _push_schedule(d: DisturbanceConfig, n_ticks: int, dt: float, seed: int) -> dict:
    if d.push_interval is None or d.push_interval <= 0:
        return {}
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed).spawn(2)[1]))
    pushes = {}
    k = 1
    while True:
        tick = int(math.ceil(k * d.push_interval / dt - 1e-9))
        if tick >= n_ticks:
            break
        lo, hi = d.push_torque
        pushes[tick] = rng.uniform(lo, hi, size=2) if lo < hi else np.full(2, float(lo))
        k += 1
    return pushes


def integrate(model: RobotModel, q_ref: np.ndarray, dq_ref: np.ndarray, dt: float,
              cfg: SimConfig, delay_ticks: int = 0, pushes: Optional[dict] = None,
              initial: Optional[SimState] = None) -> dict:
    """Raw tick loop; returns per-tick arrays (stops early once tilt exceeds tilt_max)."""
    dyn = _Dynamics(model, cfg, delay_ticks)
    T, n = q_ref.shape
    pushes = pushes or {}
    state = initial or SimState.rest(q_ref[0])
    q, dq = state.q.astype(float).copy(), state.dq.astype(float).copy()
    tilt, rate = state.base_tilt.astype(float).copy(), state.base_tilt_rate.astype(float).copy()
    out_q = np.empty((T, n)); out_dq = np.empty((T, n)); out_ddq = np.empty((T, n))
    out_cmd = np.empty((T, n)); out_tau = np.empty((T, n))
    out_tilt = np.empty((T, 2)); out_rate = np.empty((T, 2))
    kp, kd, lim, J, R = dyn.kp, dyn.kd, dyn.limit, dyn.J, dyn.R
    k_ank, c_ank, mgl, I_tilt = dyn.k, dyn.c, dyn.mgl, dyn.I_tilt
    delay = dyn.delay
    literal = cfg.literal_pd
    zero = np.zeros(2)
    stop = T
    for t in range(T):
        out_q[t] = q; out_dq[t] = dq; out_tilt[t] = tilt; out_rate[t] = rate
        e = q_ref[t] - q
        if literal:
            raw = kp * e + kd * dq
        else:
            raw = kp * e + kd * (dq_ref[t] - dq)
        cmd = np.minimum(np.maximum(raw, -lim), lim)
        out_cmd[t] = cmd
        tau = out_cmd[t - delay] if t >= delay else np.zeros(n)
        ddq = tau / J
        out_tau[t] = tau
        out_ddq[t] = ddq
        dq = dq + dt * ddq
        q = q + dt * dq
        push = pushes.get(t, zero)
        acc = (-k_ank * tilt - c_ank * rate + mgl * np.sin(tilt) + R @ ddq + push) / I_tilt
        rate = rate + dt * acc
        tilt = tilt + dt * rate
        if not np.all(np.isfinite(tilt)) or not np.all(np.isfinite(q)):
            raise SimulationError("integration produced non-finite state")
        if math.hypot(tilt[0], tilt[1]) > cfg.tilt_max:
            stop = t + 1
            break
    sl = slice(0, stop)
    return {"q": out_q[sl], "dq": out_dq[sl], "ddq": out_ddq[sl], "tau_cmd": out_cmd[sl],
            "tau": out_tau[sl], "tilt": out_tilt[sl], "rate": out_rate[sl], "stopped": stop < T,
            "final": SimState(q, dq, tilt, rate, stop * dt)}


def base_motion(model: RobotModel, tilt, rate):
    """Base rotation, position, angular and linear velocity for tilt samples."""
    tilt = np.atleast_2d(tilt)
    rate = np.atleast_2d(rate)
    R = kinodyn.tilt_rotation(tilt[:, 0], tilt[:, 1])
    pivot = np.array([0.0, 0.0, model.ankle.pivot_height])
    pos = pivot + R @ (model.base_position - pivot)
    omega = np.column_stack([rate[:, 0], rate[:, 1], np.zeros(len(rate))])
    vel = np.cross(omega, pos - pivot)
    return R, pos, omega, vel


def projected_gravity(tilt) -> np.ndarray:
    """Horizontal components of the unit gravity vector in the tilted base frame."""
    tilt = np.atleast_2d(tilt)
    R = kinodyn.tilt_rotation(tilt[:, 0], tilt[:, 1])
    g_body = np.einsum("tji,j->ti", R, np.array([0.0, 0.0, -1.0]))
    return g_body[:, :2]


def stability_fields(model: RobotModel, q, dq, tilt, rate, dt: float, cfg: SimConfig,
                     polygon: Optional[stability.SupportPolygon] = None) -> dict:
    R, pos, omega, vel = base_motion(model, tilt, rate)
    chain = kinodyn.chain_kinematics(model, q, dq, R, pos, omega, vel)
    p_com, P, L = kinodyn.batch_momentum(model, chain, dq)
    if len(q) >= 2:
        Pdot = kinodyn.rate_series(P, dt)
        Ldot = kinodyn.rate_series(L, dt)
    else:
        Pdot = np.zeros_like(P)
        Ldot = np.zeros_like(L)
    zmp = stability.zmp_series(p_com, Pdot, Ldot, model.total_mass, cfg.gravity)
    sp = polygon or stability.support_polygon(model.contact_points)
    d = np.hypot(zmp[:, 0] - sp.centroid[0], zmp[:, 1] - sp.centroid[1])
    d = np.where(np.isnan(d), np.inf, d)
    return {"p_com": p_com, "P": P, "L": L, "Pdot": Pdot, "Ldot": Ldot, "p_zmp": zmp, "d": d,
            "classification": stability.classify_codes(d, cfg.t_inside, cfg.t_edge),
            "pg_xy": projected_gravity(tilt)}


def _fall_tick(codes: np.ndarray, tilt: np.ndarray, stopped: bool, cfg: SimConfig) -> Optional[int]:
    exited = codes == stability.CLASS_CODES[stability.EXITED]
    run = 0
    for t, e in enumerate(exited):
        run = run + 1 if e else 0
        if run >= cfg.fall_persist:
            return t
    if stopped:
        return len(codes) - 1
    return None


def rollout(model: RobotModel, executed_ref, dt_ctrl: Optional[float] = None,
            disturbance: Optional[DisturbanceConfig] = None, cfg: Optional[SimConfig] = None,
            initial: Optional[SimState] = None) -> RolloutTrace:
    """Integrate the full executed reference and derive the stability trace.

    ``executed_ref`` is a resampled reference (see retimer.resample) or any
    object with ``q``/``dq`` arrays of shape (ticks, n_j).
    """
    cfg = cfg or SimConfig()
    dt = cfg.dt_ctrl if dt_ctrl is None else dt_ctrl
    if not 1e-4 <= dt <= 1e-2:
        raise ValueError("dt_ctrl must lie in [1e-4, 1e-2] s")
    d = disturbance or DisturbanceConfig(push_interval=0.0)
    q_ref = np.asarray(executed_ref.q, dtype=float)
    dq_ref = np.asarray(executed_ref.dq, dtype=float)
    if len(q_ref) == 0:
        raise ValueError("executed reference is empty")
    pert = sample_randomization(d)
    sim_model = apply_payload(apply_perturbation(model, pert), d.payload_mass)
    delay_ticks = int(round(pert.motor_delay_ms * 1e-3 / dt))
    pushes = _push_schedule(d, len(q_ref), dt, d.seed)
    raw = integrate(sim_model, q_ref, dq_ref, dt, cfg, delay_ticks, pushes, initial)
    n = len(raw["q"])
    fields = stability_fields(sim_model, raw["q"], raw["dq"], raw["tilt"], raw["rate"], dt, cfg)
    fall = _fall_tick(fields["classification"], raw["tilt"], raw["stopped"], cfg)
    end = n if fall is None else fall + 1
    time = np.arange(n) * dt
    sl = slice(0, end)
    return RolloutTrace(
        dt=dt, time=time[sl], q=raw["q"][sl], dq=raw["dq"][sl], ddq=raw["ddq"][sl],
        tau_cmd=raw["tau_cmd"][sl], tau=raw["tau"][sl], q_ref=q_ref[sl], dq_ref=dq_ref[sl],
        base_tilt=raw["tilt"][sl], base_tilt_rate=raw["rate"][sl],
        pg_xy=fields["pg_xy"][sl], p_com=fields["p_com"][sl], P=fields["P"][sl], L=fields["L"][sl],
        Pdot=fields["Pdot"][sl], Ldot=fields["Ldot"][sl], p_zmp=fields["p_zmp"][sl], d=fields["d"][sl],
        classification=fields["classification"][sl],
        fall_time=None if fall is None else float(time[fall]),
        total_mass=sim_model.total_mass,
    )


# ---------------------------------------------------------------------------
# trace files

_VECTOR_FIELDS = (("q", None), ("dq", None), ("ddq", None), ("tau", None), ("q_ref", None), ("dq_ref", None),
                  ("base_tilt", ("roll", "pitch")), ("base_tilt_rate", ("roll", "pitch")), ("pg_xy", ("x", "y")),
                  ("p_com", "xyz"), ("P", "xyz"), ("L", "xyz"), ("Pdot", "xyz"), ("Ldot", "xyz"),
                  ("p_zmp", ("x", "y")))


def _columns(n_j: int):
    cols = [("time", "time", None)]
    for name, sub in _VECTOR_FIELDS:
        labels = [str(i) for i in range(n_j)] if sub is None else list(sub)
        cols += [(f"{name}_{lab}", name, k) for k, lab in enumerate(labels)]
    cols += [("d", "d", None), ("classification", "classification", None)]
    return cols


def write_trace_csv(trace: RolloutTrace, path) -> None:
    """One row per tick, header first, floats with 9 significant digits."""
    n_j = trace.q.shape[1]
    cols = _columns(n_j)
    parts = []
    for _, name, k in cols:
        a = np.asarray(getattr(trace, name))
        parts.append(a if k is None else a[:, k])
    lines = [",".join(c[0] for c in cols)]
    names = stability.CLASS_CODES_INV
    for t in range(len(trace)):
        row = [format(float(p[t]), ".9g") for p in parts[:-1]]
        row.append(names[int(parts[-1][t])])
        lines.append(",".join(row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace_csv(path, dt: Optional[float] = None, fall_time: Optional[float] = None,
                   total_mass: float = 0.0) -> RolloutTrace:
    """Inverse of write_trace_csv (values carry 9 significant digits)."""
    import csv
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: trace file has no data rows")
    header, body = rows[0], rows[1:]
    n_j = sum(1 for h in header if h.startswith("q_") and not h.startswith("q_ref"))
    cols = _columns(n_j)
    if header != [c[0] for c in cols]:
        raise ValueError(f"{path}: unexpected trace header")
    codes = np.array([stability.CLASS_CODES[r[-1]] for r in body], dtype=int)
    data = np.array([[float(x) for x in r[:-1]] for r in body])
    out = {}
    for j, (_, name, k) in enumerate(cols[:-1]):
        if k is None:
            out[name] = data[:, j]
        else:
            out.setdefault(name, []).append(data[:, j])
    arrays = {name: (np.column_stack(v) if isinstance(v, list) else v) for name, v in out.items()}
    time = arrays.pop("time")
    if dt is None:
        dt = float(time[1] - time[0]) if len(time) > 1 else 0.0
    return RolloutTrace(dt=dt, time=time, tau_cmd=arrays["tau"], classification=codes,
                        fall_time=fall_time, total_mass=total_mass,
                        **{k: v for k, v in arrays.items()})
