"""Bundled 60 kg reduced humanoid and the synthetic motion suite.

Each motion is sampled from a closed-form joint-space formula at h = 0.01 s
over 1500 frame intervals (1501 samples, 15 s at native speed).  Velocities
are central differences of the sampled positions.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from .motiondata import (Actuator, AnkleCompliance, EndEffector, Joint, LinkInertial, MotionTrajectory,
                         RobotModel, load_robot_model)
from . import kinodyn

N_JOINTS = 15
FRAME_PERIOD = 0.01
SUITE_INTERVALS = 1500

JOINT_NAMES = ["waist_yaw"] + [f"{side}_{j}" for side in ("l", "r") for j in
                               ("shoulder_pitch", "shoulder_roll", "shoulder_yaw", "elbow",
                                "wrist_yaw", "wrist_pitch", "wrist_roll")]

MODEL_FILE = Path(__file__).with_name("data") / "humanoid60.json"

# stiffer and more damped than a bare spring so slowing down always lowers tilt
ANKLE_STIFFNESS = 2000.0
ANKLE_DAMPING = 450.0
KP, KD, TORQUE_LIMIT, ARMATURE = 100.0, 4.0, 120.0, 0.1


def _arm(side: float, parent: int):
    X, Y, Z = [1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]
    joints = [
        Joint(parent, Y, [0.0, 0.2 * side, 0.35]),
        Joint(None, X, [0.0, 0.05 * side, 0.0]),
        Joint(None, Z, [0.0, 0.0, -0.05]),
        Joint(None, Y, [0.0, 0.0, -0.23]),
        Joint(None, Z, [0.0, 0.0, -0.12]),
        Joint(None, Y, [0.0, 0.0, -0.12]),
        Joint(None, X, [0.0, 0.0, -0.03]),
    ]
    links = [
        (0.6, [0.0, 0.025 * side, 0.0]),
        (0.6, [0.0, 0.0, -0.02]),
        (1.6, [0.0, 0.0, -0.12]),
        (0.8, [0.0, 0.0, -0.06]),
        (0.8, [0.0, 0.0, -0.06]),
        (0.3, [0.0, 0.0, 0.0]),
        (1.3, [0.0, 0.0, -0.05]),
    ]
    return joints, links


def humanoid60(ankle_stiffness: float = ANKLE_STIFFNESS, ankle_damping: float = ANKLE_DAMPING) -> RobotModel:
    """Base + waist + two 7-DoF arms (6 kg each); 60 kg total."""
    joints = [Joint(-1, [0, 0, 1.0], [0.0, 0.0, 0.15], name="waist_yaw")]
    links = [(15.0, [0.0, 0.0, 0.25])]
    for side in (1.0, -1.0):
        js, ls = _arm(side, 0)
        start = len(joints)
        for k, j in enumerate(js):
            j.parent = 0 if k == 0 else start + k - 1
        joints += js
        links += ls
    for j, name in zip(joints, JOINT_NAMES):
        j.name = name
    link_objs = [LinkInertial(m, np.array(c), 0.0) for m, c in links]
    base_mass = 60.0 - sum(m for m, _ in links)
    acts = [Actuator(KP, KD, TORQUE_LIMIT, 1.0) for _ in joints]
    feet = []
    for y0 in (0.1, -0.1):
        for x in (-0.08, 0.14):
            for dy in (-0.05, 0.05):
                feet.append([x, y0 + dy, 0.0])
    model = RobotModel(
        joints=joints, links=link_objs, actuators=acts,
        base_mass=base_mass, base_com=np.array([-0.05, 0.0, -0.35]),
        base_inertia=np.ones(3), base_position=np.array([0.0, 0.0, 0.95]),
        ankle=AnkleCompliance(ankle_stiffness, ankle_damping, 0.08),
        contact_points=np.array(feet),
        end_effectors=[EndEffector(7, np.array([0.0, 0.0, -0.08]), "left_hand"),
                       EndEffector(14, np.array([0.0, 0.0, -0.08]), "right_hand")],
        name="humanoid60",
    )
    _fill_inertias(model)
    return model


def default_model() -> RobotModel:
    """The bundled model file (regenerate with ``scripts/build_model.py``)."""
    return load_robot_model(MODEL_FILE)


def _fill_inertias(model: RobotModel) -> None:
    """Joint inertias from subtree point masses; base tilt inertia about the pivot."""
    n = model.n_joints
    chain = kinodyn.chain_kinematics(model, np.zeros((1, n)), np.zeros((1, n)), np.eye(3), model.base_position)
    com = chain.com[0]
    children: Dict[int, List[int]] = {i: [] for i in range(n)}
    for i, j in enumerate(model.joints):
        if j.parent >= 0:
            children[j.parent].append(i)

    def subtree(i):
        out = [i]
        for c in children[i]:
            out += subtree(c)
        return out

    for i in range(n):
        a = chain.axes[0, i]
        o = chain.origin[0, i + 1]
        inertia = 0.01
        for k in subtree(i):
            r = com[k + 1] - o
            r_perp = r - np.dot(r, a) * a
            inertia += model.links[k].mass * float(np.dot(r_perp, r_perp))
        model.links[i].inertia = round(inertia, 6)
        model.actuators[i].reflected_inertia = round(inertia + ARMATURE, 6)
    pivot = np.array([0.0, 0.0, model.ankle.pivot_height])
    rel = com - pivot
    m = chain.masses
    I_roll = float(np.sum(m * (rel[:, 1] ** 2 + rel[:, 2] ** 2))) + 3.0
    I_pitch = float(np.sum(m * (rel[:, 0] ** 2 + rel[:, 2] ** 2))) + 3.0
    I_yaw = float(np.sum(m * (rel[:, 0] ** 2 + rel[:, 1] ** 2))) + 1.5
    model.base_inertia = np.round(np.array([I_roll, I_pitch, I_yaw]), 6)


# ---------------------------------------------------------------------------
# motions

def _time(n_intervals: int = SUITE_INTERVALS) -> np.ndarray:
    return np.arange(n_intervals + 1) * FRAME_PERIOD


def smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def _window(t, t0, t1, ramp=0.5):
    """1 inside [t0, t1], smooth quintic ramps of width ``ramp`` outside."""
    return smoothstep((t - t0 + ramp) / ramp) * smoothstep((t1 + ramp - t) / ramp)


def _arms(q, l_idx, r_idx, value, mirror=1.0):
    q[:, 1 + l_idx] += value
    q[:, 8 + r_idx] += mirror * value


SP, SR, SY, EL, WY, WP, WR = range(7)


def _make(name, q):
    return MotionTrajectory.from_arrays(q, np.gradient(q, FRAME_PERIOD, axis=0), FRAME_PERIOD, name)


def _base_posture(t):
    q = np.zeros((len(t), N_JOINTS))
    q[:, 1 + EL] = -0.3
    q[:, 8 + EL] = -0.3
    return q


def quiescent(n_intervals: int = SUITE_INTERVALS) -> MotionTrajectory:
    t = _time(n_intervals)
    return _make("quiescent", _base_posture(t))


def slow_reach(n_intervals: int = SUITE_INTERVALS) -> MotionTrajectory:
    t = _time(n_intervals)
    q = _base_posture(t)
    s = smoothstep(t / 5.0) - smoothstep((t - 9.0) / 5.0)
    _arms(q, SP, SP, -1.0 * s)
    _arms(q, EL, EL, -0.6 * s)
    return _make("slow_reach", q)


def fast_swing(n_intervals: int = SUITE_INTERVALS, freq: float = 1.4, amp: float = 0.9) -> MotionTrajectory:
    """Both arms swing in phase about the shoulder pitch axis."""
    t = _time(n_intervals)
    q = _base_posture(t)
    w = _window(t, 2.0, 12.0, 1.0)
    _arms(q, SP, SP, amp * w * np.sin(2 * np.pi * freq * t))
    _arms(q, EL, EL, -0.4 * w * (1 - np.cos(2 * np.pi * freq * t)))
    return _make("fast_swing", q)


def raise_overhead(n_intervals: int = SUITE_INTERVALS) -> MotionTrajectory:
    t = _time(n_intervals)
    q = _base_posture(t)
    cyc = 0.5 - 0.5 * np.cos(2 * np.pi * 0.45 * t)
    w = _window(t, 1.5, 13.0, 1.0)
    _arms(q, SP, SP, -2.6 * w * cyc)
    _arms(q, SR, SR, 0.3 * w * cyc, mirror=-1.0)
    return _make("raise_overhead", q)


def spike(n_intervals: int = SUITE_INTERVALS, t_spike: float = 7.5, width: float = 0.35) -> MotionTrajectory:
    """Quiet posture with one violent out-and-back shoulder motion."""
    t = _time(n_intervals)
    q = _base_posture(t)
    bump = np.exp(-0.5 * ((t - t_spike) / (width / 4)) ** 2)
    _arms(q, SP, SP, -1.4 * bump)
    return _make("spike", q)


def random_mix(seed: int, n_intervals: int = SUITE_INTERVALS, intensity: float = 1.0) -> MotionTrajectory:
    """Sum of windowed sinusoid bursts on random joints (fixed seed)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    t = _time(n_intervals)
    q = _base_posture(t)
    duration = t[-1]
    for _ in range(int(rng.integers(3, 7))):
        t0 = rng.uniform(0.5, duration - 4.0)
        t1 = t0 + rng.uniform(1.5, 4.0)
        freq = rng.uniform(0.3, 1.6) * intensity
        amp = rng.uniform(0.2, 0.8)
        phase = rng.uniform(0, 2 * np.pi)
        w = _window(t, t0, t1, 0.6)
        wave = amp * w * np.sin(2 * np.pi * freq * (t - t0) + phase) - amp * w * np.sin(phase)
        kind = int(rng.integers(0, 4))
        if kind == 0:
            _arms(q, SP, SP, wave)
        elif kind == 1:
            _arms(q, SP, SP, wave, mirror=-1.0)
        elif kind == 2:
            _arms(q, SR, SR, 0.5 * np.abs(wave), mirror=-1.0)
            _arms(q, EL, EL, -0.5 * np.abs(wave))
        else:
            q[:, 0] += 0.6 * wave
            _arms(q, SY, SY, wave)
    return _make(f"mix_{seed:03d}", q)


SUITE_NAMES = ("quiescent", "slow_reach", "fast_swing", "raise_overhead", "spike") + tuple(
    f"mix_{100 + k:03d}" for k in range(15))


def bundled_suite(n_intervals: int = SUITE_INTERVALS) -> List[MotionTrajectory]:
    """20 motions: five archetypes plus fifteen seeded mixes."""
    return [motion_by_name(name, n_intervals) for name in SUITE_NAMES]


MOTIONS: Dict[str, Callable[..., MotionTrajectory]] = {
    "quiescent": quiescent,
    "slow_reach": slow_reach,
    "fast_swing": fast_swing,
    "raise_overhead": raise_overhead,
    "spike": spike,
}


def motion_by_name(name: str, n_intervals: int = SUITE_INTERVALS) -> MotionTrajectory:
    if name in MOTIONS:
        return MOTIONS[name](n_intervals)
    if name.startswith("mix_"):
        seed = int(name[4:])
        k = seed - 100
        return random_mix(seed, n_intervals, intensity=0.6 + 0.06 * k)
    raise KeyError(f"unknown bundled motion {name!r}")
