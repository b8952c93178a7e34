"""Motion clips, trajectories, windows and the reduced robot model.

A motion clip holds the base position, the base orientation in the continuous
6D encoding, and upper-body joint positions/velocities.  Trajectories are
time-ordered clip sequences sampled at a native frame period.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

EPSILON_STD = 1e-8
DEFAULT_FRAME_PERIOD = 0.01


class MotionDataError(ValueError):
    """Base class for trajectory / model validation failures."""


class TrajectoryParseError(MotionDataError):
    pass


class DimensionError(MotionDataError):
    pass


class NonFiniteError(MotionDataError):
    pass


class SingularRotationError(MotionDataError):
    pass


@dataclass(frozen=True)
class MotionClip:
    r: np.ndarray
    theta6: np.ndarray
    q: np.ndarray
    dq: np.ndarray

    def __post_init__(self):
        for name in ("r", "theta6", "q", "dq"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.r.shape != (3,) or self.theta6.shape != (6,):
            raise DimensionError("clip needs r of length 3 and theta6 of length 6")
        if self.q.ndim != 1 or self.q.shape != self.dq.shape:
            raise DimensionError("q and dq must be 1-D with equal length")
        if not all(np.all(np.isfinite(a)) for a in (self.r, self.theta6, self.q, self.dq)):
            raise NonFiniteError("motion clip contains non-finite values")

    @property
    def n_joints(self) -> int:
        return self.q.shape[0]

    def as_vector(self) -> np.ndarray:
        """Flat layout: r(3), theta6(6), q(n_j), dq(n_j)."""
        return np.concatenate([self.r, self.theta6, self.q, self.dq])

    @classmethod
    def from_vector(cls, v: np.ndarray, n_joints: int) -> "MotionClip":
        v = np.asarray(v, dtype=float)
        if v.shape != (9 + 2 * n_joints,):
            raise DimensionError(f"expected vector of length {9 + 2 * n_joints}, got {v.shape}")
        return cls(v[:3], v[3:9], v[9 : 9 + n_joints], v[9 + n_joints :])


@dataclass(frozen=True)
class MotionTrajectory:
    frames: tuple
    frame_period: float = DEFAULT_FRAME_PERIOD
    name: str = "trajectory"

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) < 2:
            raise MotionDataError("trajectory needs at least 2 frames")
        if not (self.frame_period > 0 and math.isfinite(self.frame_period)):
            raise MotionDataError("frame period must be positive")
        n = self.frames[0].n_joints
        if any(f.n_joints != n for f in self.frames):
            raise DimensionError("all frames must share the joint count")

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> MotionClip:
        return self.frames[i]

    @property
    def n_joints(self) -> int:
        return self.frames[0].n_joints

    def q_array(self) -> np.ndarray:
        return np.stack([f.q for f in self.frames])

    def dq_array(self) -> np.ndarray:
        return np.stack([f.dq for f in self.frames])

    @classmethod
    def from_arrays(cls, q, dq=None, frame_period=DEFAULT_FRAME_PERIOD, name="trajectory",
                    r=None, theta6=None) -> "MotionTrajectory":
        """Build a trajectory from (F, n_j) arrays.

        Missing velocities are filled with central differences of q.
        """
        q = np.asarray(q, dtype=float)
        if q.ndim != 2:
            raise DimensionError("q must be (frames, joints)")
        if dq is None:
            dq = np.gradient(q, frame_period, axis=0)
        dq = np.asarray(dq, dtype=float)
        n_frames = q.shape[0]
        r = np.zeros((n_frames, 3)) if r is None else np.broadcast_to(np.asarray(r, float), (n_frames, 3))
        if theta6 is None:
            theta6 = np.broadcast_to(IDENTITY_6D, (n_frames, 6))
        else:
            theta6 = np.broadcast_to(np.asarray(theta6, float), (n_frames, 6))
        frames = [MotionClip(r[i], theta6[i], q[i], dq[i]) for i in range(n_frames)]
        return cls(tuple(frames), float(frame_period), name)


IDENTITY_6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


@dataclass(frozen=True)
class MotionWindow:
    clips: tuple
    center_index: int
    half_width: int

    def __post_init__(self):
        object.__setattr__(self, "clips", tuple(self.clips))
        if len(self.clips) != 2 * self.half_width + 1:
            raise DimensionError("window length must be 2W+1")

    def __len__(self) -> int:
        return len(self.clips)


@dataclass(frozen=True)
class NormalizationStats:
    mean: np.ndarray
    std: np.ndarray
    excluded_dims: tuple


@dataclass(frozen=True)
class CurriculumConfig:
    alpha: float
    default_posture: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        object.__setattr__(self, "default_posture", np.asarray(self.default_posture, dtype=float))


# ---------------------------------------------------------------------------
# Robot model


@dataclass
class Joint:
    parent: int
    axis: np.ndarray
    origin_xyz: np.ndarray
    origin_rot: np.ndarray = field(default_factory=lambda: np.eye(3))
    name: str = ""


@dataclass
class LinkInertial:
    mass: float
    com: np.ndarray
    inertia: float  # scalar inertia about the joint axis


@dataclass
class Actuator:
    kp: float
    kd: float
    torque_limit: float
    reflected_inertia: float


@dataclass
class AnkleCompliance:
    stiffness: float
    damping: float
    pivot_height: float


@dataclass
class EndEffector:
    link: int
    offset: np.ndarray
    name: str = ""


@dataclass
class RobotModel:
    """Floating base on an ankle pivot plus a tree of revolute upper-body joints.

    ``base_inertia`` is the diagonal tilt inertia about the ankle pivot, the
    quantity that scales the base reaction to joint accelerations.
    ``base_position`` is the nominal base-frame origin in world coordinates.
    """

    joints: List[Joint]
    links: List[LinkInertial]
    actuators: List[Actuator]
    base_mass: float
    base_com: np.ndarray
    base_inertia: np.ndarray
    base_position: np.ndarray
    ankle: AnkleCompliance
    contact_points: np.ndarray
    end_effectors: List[EndEffector]
    name: str = "robot"

    def __post_init__(self):
        self.validate()

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def total_mass(self) -> float:
        return float(self.base_mass + sum(l.mass for l in self.links))

    def validate(self) -> None:
        n = len(self.joints)
        if len(self.links) != n or len(self.actuators) != n:
            raise DimensionError("joints, links and actuators must have equal length")
        for i, j in enumerate(self.joints):
            j.axis = np.asarray(j.axis, dtype=float)
            j.origin_xyz = np.asarray(j.origin_xyz, dtype=float)
            j.origin_rot = np.asarray(j.origin_rot, dtype=float)
            if not (-1 <= j.parent < i):
                raise MotionDataError(f"joint {i}: parent must precede child (acyclic ordering)")
            if abs(np.linalg.norm(j.axis) - 1.0) > 1e-9:
                raise MotionDataError(f"joint {i}: axis must be unit length")
        for i, l in enumerate(self.links):
            l.com = np.asarray(l.com, dtype=float)
            if l.mass <= 0:
                raise MotionDataError(f"link {i}: mass must be positive")
        for i, a in enumerate(self.actuators):
            if a.kp <= 0 or a.kd <= 0 or a.reflected_inertia <= 0:
                raise MotionDataError(f"actuator {i}: kp, kd and inertia must be positive")
        if self.base_mass <= 0:
            raise MotionDataError("base mass must be positive")
        self.base_com = np.asarray(self.base_com, dtype=float)
        self.base_inertia = np.asarray(self.base_inertia, dtype=float)
        self.base_position = np.asarray(self.base_position, dtype=float)
        self.contact_points = np.asarray(self.contact_points, dtype=float)
        if self.contact_points.ndim != 2 or self.contact_points.shape[0] < 3:
            raise MotionDataError("need at least 3 contact points")
        pts = self.contact_points[:, :2]
        rel = pts - pts[0]
        if np.linalg.matrix_rank(rel, tol=1e-12) < 2:
            raise MotionDataError("contact points are collinear")
        for ee in self.end_effectors:
            ee.offset = np.asarray(ee.offset, dtype=float)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "joints": [
                {"name": j.name, "parent": j.parent, "axis": j.axis.tolist(),
                 "origin_xyz": j.origin_xyz.tolist(), "origin_rot": j.origin_rot.tolist()}
                for j in self.joints
            ],
            "links": [{"mass": l.mass, "com": l.com.tolist(), "inertia": l.inertia} for l in self.links],
            "actuators": [
                {"kp": a.kp, "kd": a.kd, "torque_limit": a.torque_limit,
                 "reflected_inertia": a.reflected_inertia}
                for a in self.actuators
            ],
            "base": {"mass": self.base_mass, "com": self.base_com.tolist(),
                     "inertia": self.base_inertia.tolist(), "position": self.base_position.tolist()},
            "ankle": {"stiffness": self.ankle.stiffness, "damping": self.ankle.damping,
                      "pivot_height": self.ankle.pivot_height},
            "contact_points": self.contact_points.tolist(),
            "end_effectors": [{"name": e.name, "link": e.link, "offset": e.offset.tolist()}
                              for e in self.end_effectors],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RobotModel":
        try:
            joints = [Joint(j["parent"], np.array(j["axis"], float), np.array(j["origin_xyz"], float),
                            np.array(j.get("origin_rot", np.eye(3)), float), j.get("name", ""))
                      for j in d["joints"]]
            links = [LinkInertial(float(l["mass"]), np.array(l["com"], float), float(l["inertia"]))
                     for l in d["links"]]
            acts = [Actuator(float(a["kp"]), float(a["kd"]), float(a["torque_limit"]),
                             float(a["reflected_inertia"])) for a in d["actuators"]]
            base = d["base"]
            ankle = d["ankle"]
            return cls(
                joints=joints, links=links, actuators=acts,
                base_mass=float(base["mass"]), base_com=np.array(base["com"], float),
                base_inertia=np.array(base["inertia"], float),
                base_position=np.array(base["position"], float),
                ankle=AnkleCompliance(float(ankle["stiffness"]), float(ankle["damping"]),
                                      float(ankle["pivot_height"])),
                contact_points=np.array(d["contact_points"], float),
                end_effectors=[EndEffector(int(e["link"]), np.array(e["offset"], float), e.get("name", ""))
                               for e in d["end_effectors"]],
                name=d.get("name", "robot"),
            )
        except (KeyError, TypeError) as exc:
            raise TrajectoryParseError(f"malformed robot model: {exc}") from exc

    def copy(self) -> "RobotModel":
        return RobotModel.from_dict(self.to_dict())


def load_robot_model(path) -> RobotModel:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TrajectoryParseError(str(exc)) from exc
    return RobotModel.from_dict(d)


def save_robot_model(model: RobotModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Trajectory files


def _check_finite(values, what):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite value in {what}")
    return arr


def load_trajectory(path, format: Optional[str] = None) -> MotionTrajectory:
    """Read a trajectory from JSON or CSV (format inferred from the suffix)."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "json":
        return _load_json(path)
    if fmt == "csv":
        return _load_csv(path)
    raise TrajectoryParseError(f"unknown trajectory format {fmt!r}")


def _load_json(path: Path) -> MotionTrajectory:
    try:
        d = json.loads(path.read_text())
        n_j = int(d["n_joints"])
        h = float(d.get("frame_period_s", DEFAULT_FRAME_PERIOD))
        raw = d["frames"]
        name = str(d.get("name", path.stem))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise TrajectoryParseError(f"{path}: {exc}") from exc
    frames = []
    for i, fr in enumerate(raw):
        try:
            r, th, q, dq = fr["r"], fr["theta6"], fr["q"], fr["dq"]
        except (KeyError, TypeError) as exc:
            raise TrajectoryParseError(f"{path}: frame {i}: {exc}") from exc
        if len(q) != n_j or len(dq) != n_j:
            raise DimensionError(f"{path}: frame {i} has {len(q)} joints, header says {n_j}")
        frames.append(MotionClip(_check_finite(r, "r"), _check_finite(th, "theta6"),
                                 _check_finite(q, "q"), _check_finite(dq, "dq")))
    return MotionTrajectory(tuple(frames), h, name)


def _load_csv(path: Path) -> MotionTrajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise TrajectoryParseError(f"{path}: empty file")
    header = rows[0]
    q_cols = [c for c in header if c.startswith("q")]
    dq_cols = [c for c in header if c.startswith("dq")]
    n_j = len(q_cols)
    expected = ["t", "r0", "r1", "r2"] + [f"th{i}" for i in range(6)] + \
        [f"q{i}" for i in range(n_j)] + [f"dq{i}" for i in range(n_j)]
    if header != expected or len(dq_cols) != n_j:
        raise TrajectoryParseError(f"{path}: unexpected header")
    try:
        data = [[float(x) for x in row] for row in rows[1:] if row]
    except ValueError as exc:
        raise TrajectoryParseError(f"{path}: {exc}") from exc
    if any(len(row) != len(header) for row in data):
        raise DimensionError(f"{path}: row length does not match header")
    arr = _check_finite(data, "csv body")
    if arr.shape[0] < 2:
        raise MotionDataError("trajectory needs at least 2 frames")
    t = arr[:, 0]
    h = float(t[1] - t[0])
    frames = [MotionClip.from_vector(row[1:], n_j) for row in arr]
    return MotionTrajectory(tuple(frames), h, path.stem)


def save_trajectory(traj: MotionTrajectory, path, format: Optional[str] = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    n_j = traj.n_joints
    if fmt == "json":
        d = {
            "name": traj.name,
            "frame_period_s": traj.frame_period,
            "n_joints": n_j,
            "frames": [{"r": f.r.tolist(), "theta6": f.theta6.tolist(), "q": f.q.tolist(),
                        "dq": f.dq.tolist()} for f in traj.frames],
        }
        path.write_text(json.dumps(d) + "\n")
    elif fmt == "csv":
        header = ["t", "r0", "r1", "r2"] + [f"th{i}" for i in range(6)] + \
            [f"q{i}" for i in range(n_j)] + [f"dq{i}" for i in range(n_j)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i, f in enumerate(traj.frames):
                w.writerow([repr(i * traj.frame_period)] + [repr(float(x)) for x in f.as_vector()])
    else:
        raise TrajectoryParseError(f"unknown trajectory format {fmt!r}")


# ---------------------------------------------------------------------------
# Statistics, windows, rotations


def compute_stats(trajectories: Sequence[MotionTrajectory]) -> NormalizationStats:
    """Per-dimension mean/std over every frame; the 6D orientation is excluded."""
    if not trajectories:
        raise MotionDataError("need at least one trajectory")
    n_j = trajectories[0].n_joints
    if any(t.n_joints != n_j for t in trajectories):
        raise DimensionError("trajectories disagree on joint count")
    data = np.stack([f.as_vector() for t in trajectories for f in t.frames])
    mean = data.mean(axis=0)
    std = np.maximum(data.std(axis=0), EPSILON_STD)
    return NormalizationStats(mean, std, tuple(range(3, 9)))


def _window_matrix(w: MotionWindow) -> np.ndarray:
    return np.stack([c.as_vector() for c in w.clips])


def _apply_stats(w: MotionWindow, s: NormalizationStats, forward: bool) -> MotionWindow:
    data = _window_matrix(w)
    if data.shape[1] != s.mean.shape[0]:
        raise DimensionError("stats and window dimensions differ")
    mask = np.ones(data.shape[1], dtype=bool)
    mask[list(s.excluded_dims)] = False
    out = data.copy()
    if forward:
        out[:, mask] = (data[:, mask] - s.mean[mask]) / s.std[mask]
    else:
        out[:, mask] = data[:, mask] * s.std[mask] + s.mean[mask]
    n_j = w.clips[0].n_joints
    return MotionWindow(tuple(MotionClip.from_vector(v, n_j) for v in out), w.center_index, w.half_width)


def normalize_window(w: MotionWindow, s: NormalizationStats) -> MotionWindow:
    return _apply_stats(w, s, forward=True)


def denormalize_window(w: MotionWindow, s: NormalizationStats) -> MotionWindow:
    return _apply_stats(w, s, forward=False)


def extract_window(traj: MotionTrajectory, t: int, W: int) -> MotionWindow:
    """Clips t-W..t+W, edge frames repeated where the window overhangs."""
    if W < 0:
        raise ValueError("half width must be non-negative")
    last = len(traj) - 1
    idx = [min(max(i, 0), last) for i in range(t - W, t + W + 1)]
    return MotionWindow(tuple(traj.frames[i] for i in idx), t, W)


def rot6d_to_matrix(v) -> np.ndarray:
    """Gram-Schmidt: normalize a, orthogonalize b against it, c = a x b."""
    v = np.asarray(v, dtype=float)
    a, b = v[:3], v[3:]
    na = np.linalg.norm(a)
    if na < 1e-12:
        raise SingularRotationError("first 6D column is zero")
    e1 = a / na
    b_perp = b - np.dot(e1, b) * e1
    nb = np.linalg.norm(b_perp)
    if nb < 1e-12 * max(1.0, np.linalg.norm(b)):
        raise SingularRotationError("6D columns are parallel")
    e2 = b_perp / nb
    e3 = np.cross(e1, e2)
    return np.column_stack([e1, e2, e3])


def matrix_to_rot6d(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    return np.concatenate([R[:, 0], R[:, 1]])


def clip_distance(a: MotionClip, b: MotionClip) -> float:
    if a.n_joints != b.n_joints:
        raise DimensionError("clips differ in joint count")
    return float(
        np.linalg.norm(rot6d_to_matrix(a.theta6) - rot6d_to_matrix(b.theta6))
        + np.linalg.norm(a.q - b.q)
        + np.linalg.norm(a.dq - b.dq)
        + np.linalg.norm(a.r - b.r)
    )


def window_distance(a: MotionWindow, b: MotionWindow) -> float:
    if len(a) != len(b):
        raise DimensionError("windows differ in length")
    return sum(clip_distance(x, y) for x, y in zip(a.clips, b.clips)) / len(a)


def scale_amplitude(traj: MotionTrajectory, c: CurriculumConfig) -> MotionTrajectory:
    q0 = c.default_posture
    if q0.shape != (traj.n_joints,):
        raise DimensionError("default posture length must equal the joint count")
    frames = [replace(f, q=q0 + c.alpha * (f.q - q0), dq=c.alpha * f.dq) for f in traj.frames]
    return MotionTrajectory(tuple(frames), traj.frame_period, traj.name)


def lerp_clip(a: MotionClip, b: MotionClip, u: float) -> MotionClip:
    """Componentwise (1-u)*a + u*b; theta6 is re-orthogonalized only by consumers."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"interpolation parameter {u} outside [0, 1]")
    if a.n_joints != b.n_joints:
        raise DimensionError("clips differ in joint count")
    if u == 0.0:
        return a
    if u == 1.0:
        return b
    w = 1.0 - u
    return MotionClip(w * a.r + u * b.r, w * a.theta6 + u * b.theta6,
                      w * a.q + u * b.q, w * a.dq + u * b.dq)
