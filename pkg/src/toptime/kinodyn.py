"""Forward kinematics, centre of mass and centroidal momentum of the reduced model.

All chain routines accept a leading batch axis so whole rollouts are processed
at once; the single-state wrappers just add and strip that axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .motiondata import DimensionError, RobotModel


@dataclass
class KinematicState:
    base_position: np.ndarray
    base_rotation: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    ddq: Optional[np.ndarray] = None
    base_omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    base_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.dq = np.asarray(self.dq, dtype=float)
        self.ddq = np.zeros_like(self.q) if self.ddq is None else np.asarray(self.ddq, dtype=float)
        self.base_position = np.asarray(self.base_position, dtype=float)
        self.base_rotation = np.asarray(self.base_rotation, dtype=float)
        self.base_omega = np.asarray(self.base_omega, dtype=float)
        self.base_velocity = np.asarray(self.base_velocity, dtype=float)


@dataclass
class MomentumState:
    P: np.ndarray
    L: np.ndarray
    p_com: np.ndarray
    total_mass: float
    Pdot: np.ndarray = field(default_factory=lambda: np.zeros(3))
    Ldot: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class ChainState:
    """Batched kinematic quantities, link index 0 is the base.

    Arrays have shape (T, n_links, ...) with n_links = n_joints + 1.
    """

    rot: np.ndarray        # (T, n, 3, 3) link frame rotations
    origin: np.ndarray     # (T, n, 3) link frame origins
    com: np.ndarray        # (T, n, 3) link centres of mass
    omega: np.ndarray      # (T, n, 3)
    com_vel: np.ndarray    # (T, n, 3)
    axes: np.ndarray       # (T, n_j, 3) joint axes in world frame
    masses: np.ndarray     # (n,)


def rotation_about(axis, angle):
    """Rodrigues rotation; ``angle`` may be an array, giving a stack of matrices."""
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    K = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    s = np.sin(angle)[..., None, None]
    c = np.cos(angle)[..., None, None]
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def tilt_rotation(roll, pitch):
    """Base tilt R = Ry(pitch) @ Rx(roll); broadcasts over arrays."""
    return rotation_about([0.0, 1.0, 0.0], pitch) @ rotation_about([1.0, 0.0, 0.0], roll)


def chain_kinematics(model: RobotModel, q, dq, base_rot, base_pos, base_omega=None, base_vel=None) -> ChainState:
    q = np.atleast_2d(np.asarray(q, dtype=float))
    dq = np.atleast_2d(np.asarray(dq, dtype=float))
    T, n_j = q.shape
    if n_j != model.n_joints or dq.shape != q.shape:
        raise DimensionError(f"model has {model.n_joints} joints, state has {n_j}")
    base_rot = np.broadcast_to(np.asarray(base_rot, float), (T, 3, 3))
    base_pos = np.broadcast_to(np.asarray(base_pos, float), (T, 3))
    base_omega = np.zeros((T, 3)) if base_omega is None else np.broadcast_to(np.asarray(base_omega, float), (T, 3))
    base_vel = np.zeros((T, 3)) if base_vel is None else np.broadcast_to(np.asarray(base_vel, float), (T, 3))

    n = n_j + 1
    rot = np.empty((T, n, 3, 3))
    origin = np.empty((T, n, 3))
    omega = np.empty((T, n, 3))
    vel = np.empty((T, n, 3))  # velocity of each frame origin
    axes = np.empty((T, n_j, 3))
    rot[:, 0] = base_rot
    origin[:, 0] = base_pos
    omega[:, 0] = base_omega
    vel[:, 0] = base_vel
    for i, joint in enumerate(model.joints):
        k = i + 1
        pk = joint.parent + 1
        R_parent = rot[:, pk]
        offset = R_parent @ joint.origin_xyz
        origin[:, k] = origin[:, pk] + offset
        R_fixed = R_parent @ joint.origin_rot
        axis_world = R_fixed @ joint.axis
        rot[:, k] = R_fixed @ rotation_about(joint.axis, q[:, i])
        axes[:, i] = axis_world
        omega[:, k] = omega[:, pk] + axis_world * dq[:, i : i + 1]
        vel[:, k] = vel[:, pk] + np.cross(omega[:, pk], offset)

    local_com = np.stack([model.base_com] + [l.com for l in model.links])
    com = origin + np.einsum("tnij,nj->tni", rot, local_com)
    com_vel = vel + np.cross(omega, com - origin)
    masses = np.array([model.base_mass] + [l.mass for l in model.links])
    return ChainState(rot, origin, com, omega, com_vel, axes, masses)


def end_effector_poses(model: RobotModel, chain: ChainState) -> Tuple[np.ndarray, np.ndarray]:
    """(T, n_ee, 3) positions and (T, n_ee, 3, 3) rotations."""
    pos = np.stack([chain.origin[:, e.link + 1] + chain.rot[:, e.link + 1] @ e.offset
                    for e in model.end_effectors], axis=1)
    rot = np.stack([chain.rot[:, e.link + 1] for e in model.end_effectors], axis=1)
    return pos, rot


def forward_kinematics(model: RobotModel, s: KinematicState) -> dict:
    """Link poses (base first) and end-effector poses for one state."""
    if np.any(np.abs(s.q) > 8 * np.pi):
        raise ValueError("joint positions outside sanity bound")
    chain = chain_kinematics(model, s.q[None], s.dq[None], s.base_rotation, s.base_position)
    ee_pos, ee_rot = end_effector_poses(model, chain)
    return {
        "positions": chain.origin[0],
        "rotations": chain.rot[0],
        "com_positions": chain.com[0],
        "ee_positions": ee_pos[0],
        "ee_rotations": ee_rot[0],
    }


def center_of_mass(model: RobotModel, fk: dict) -> Tuple[np.ndarray, float]:
    masses = np.array([model.base_mass] + [l.mass for l in model.links])
    M = float(masses.sum())
    return masses @ fk["com_positions"] / M, M


def batch_momentum(model: RobotModel, chain: ChainState, dq) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (p_com, P, L) for every batch entry.

    L = I_B w_B + sum_i a_i I_i dq_i + sum_k m_k (c_k - p_com) x v_k
    """
    dq = np.atleast_2d(dq)
    m = chain.masses
    M = m.sum()
    p_com = np.einsum("n,tni->ti", m, chain.com) / M
    P = np.einsum("n,tni->ti", m, chain.com_vel)
    R_B = chain.rot[:, 0]
    w_B = chain.omega[:, 0]
    I_B_world = R_B @ (model.base_inertia[:, None] * np.swapaxes(R_B, 1, 2))
    L = np.einsum("tij,tj->ti", I_B_world, w_B)
    I_joint = np.array([l.inertia for l in model.links])
    L = L + np.einsum("tni,n,tn->ti", chain.axes, I_joint, dq)
    L = L + np.einsum("n,tni->ti", m, np.cross(chain.com - p_com[:, None], chain.com_vel))
    return p_com, P, L


def centroidal_momentum(model: RobotModel, s: KinematicState) -> MomentumState:
    chain = chain_kinematics(model, s.q[None], s.dq[None], s.base_rotation, s.base_position,
                             s.base_omega, s.base_velocity)
    p_com, P, L = batch_momentum(model, chain, s.dq[None])
    return MomentumState(P[0], L[0], p_com[0], model.total_mass)


def momentum_rates(series, t: int, dt: float):
    """Central difference of a (T, 3) momentum series at tick ``t``.

    Returns (rate, one_sided); boundary ticks fall back to a one-sided
    difference and set the flag.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    X = np.asarray(series, dtype=float)
    T = X.shape[0]
    if T < 2:
        raise ValueError("need at least two samples")
    if 0 < t < T - 1:
        return (X[t + 1] - X[t - 1]) / (2.0 * dt), False
    if t == 0:
        return (X[1] - X[0]) / dt, True
    return (X[T - 1] - X[T - 2]) / dt, True


def rate_series(X, dt: float) -> np.ndarray:
    """momentum_rates applied at every tick of a (T, ...) series."""
    X = np.asarray(X, dtype=float)
    out = np.empty_like(X)
    out[1:-1] = (X[2:] - X[:-2]) / (2.0 * dt)
    out[0] = (X[1] - X[0]) / dt
    out[-1] = (X[-1] - X[-2]) / dt
    return out


def reaction_matrix(model: RobotModel) -> np.ndarray:
    """(3, n_j) map from joint accelerations to base torque, -a_i I_i.

    Joint axes are taken in the base frame at the zero posture.
    """
    chain = chain_kinematics(model, np.zeros((1, model.n_joints)), np.zeros((1, model.n_joints)),
                             np.eye(3), np.zeros(3))
    I_joint = np.array([l.inertia for l in model.links])
    return -(chain.axes[0] * I_joint[:, None]).T


def base_reaction(model: RobotModel, ddq) -> np.ndarray:
    ddq = np.asarray(ddq, dtype=float)
    if ddq.shape[-1] != model.n_joints:
        raise DimensionError("ddq length must equal joint count")
    I_B = model.base_inertia
    if np.any(I_B <= 0):
        raise ZeroDivisionError("base inertia must be positive on every axis")
    return (reaction_matrix(model) @ ddq.T).T / I_B
