"""Support polygon, ZMP/ZML and the centre-distance stability margin."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .kinodyn import MomentumState

GRAVITY = 9.81
EPS_DENOMINATOR = 1.0  # N
T_INSIDE = 0.32
T_EDGE = 0.36

INSIDE, NEAR_EDGE, EXITED = "inside", "near_edge", "exited"
CLASS_CODES = {INSIDE: 0, NEAR_EDGE: 1, EXITED: 2}
CLASS_CODES_INV = {v: k for k, v in CLASS_CODES.items()}


class DegeneratePolygonError(ValueError):
    pass


class FreeFallError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SupportPolygon:
    vertices: np.ndarray  # (k, 2) counter-clockwise
    centroid: np.ndarray


@dataclass(frozen=True)
class StabilitySample:
    p_zmp: np.ndarray
    d: float
    classification: str
    com_proj: np.ndarray = None


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> np.ndarray:
    """Andrew's monotone chain; collinear boundary points are dropped."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float)[:, :2].tolist())))
    if len(pts) < 3:
        return np.array(pts)
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polygon_centroid(vertices) -> Tuple[np.ndarray, float]:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy]), area


def support_polygon(contact_points) -> SupportPolygon:
    pts = np.asarray(contact_points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise DegeneratePolygonError("need at least three contact points")
    hull = convex_hull(pts)
    if len(hull) < 3:
        raise DegeneratePolygonError("contact points are collinear")
    centroid, area = polygon_centroid(hull)
    if area <= 1e-15:
        raise DegeneratePolygonError("support polygon has zero area")
    return SupportPolygon(hull, centroid)


def zml_point(m: MomentumState, g: float = GRAVITY, z_query: float = None) -> np.ndarray:
    """ZMP formula with the CoM height replaced by ``z_query``."""
    z = m.p_com[2] if z_query is None else z_query
    Mg = m.total_mass * g
    den = Mg + m.Pdot[2]
    if den <= EPS_DENOMINATOR:
        raise FreeFallError(f"vertical force {den:.3g} N below threshold")
    x = (Mg * m.p_com[0] + z * m.Pdot[0] - m.Ldot[1]) / den
    y = (Mg * m.p_com[1] + z * m.Pdot[1] + m.Ldot[0]) / den
    return np.array([x, y])


def zmp(m: MomentumState, g: float = GRAVITY) -> np.ndarray:
    return zml_point(m, g, m.p_com[2])


def zmp_series(p_com, Pdot, Ldot, total_mass: float, g: float = GRAVITY) -> np.ndarray:
    """Vectorised ZMP over (T, 3) arrays; free-fall ticks give NaN."""
    Mg = total_mass * g
    den = Mg + Pdot[:, 2]
    bad = den <= EPS_DENOMINATOR
    den = np.where(bad, np.nan, den)
    x = (Mg * p_com[:, 0] + p_com[:, 2] * Pdot[:, 0] - Ldot[:, 1]) / den
    y = (Mg * p_com[:, 1] + p_com[:, 2] * Pdot[:, 1] + Ldot[:, 0]) / den
    return np.column_stack([x, y])


def classify(d: float, t_inside: float = T_INSIDE, t_edge: float = T_EDGE) -> str:
    if d <= t_inside:
        return INSIDE
    if d <= t_edge:
        return NEAR_EDGE
    return EXITED


def classify_codes(d, t_inside: float = T_INSIDE, t_edge: float = T_EDGE) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    codes = np.full(d.shape, CLASS_CODES[EXITED], dtype=int)
    codes[d <= t_edge] = CLASS_CODES[NEAR_EDGE]
    codes[d <= t_inside] = CLASS_CODES[INSIDE]
    return codes


def stability_margin(sp: SupportPolygon, zmp_ground, t_inside: float = T_INSIDE,
                     t_edge: float = T_EDGE, com_proj=None) -> StabilitySample:
    p = np.asarray(zmp_ground, dtype=float)
    d = float(np.hypot(*(p - sp.centroid)))
    return StabilitySample(p, d, classify(d, t_inside, t_edge),
                           None if com_proj is None else np.asarray(com_proj, float))


def _segment_distance(p, a, b) -> float:
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.hypot(*(p - (a + t * ab))))


def point_in_polygon(sp: SupportPolygon, p) -> Tuple[bool, float]:
    """Inside-or-on test plus signed distance to the boundary (positive inside)."""
    p = np.asarray(p, dtype=float)
    v = sp.vertices
    k = len(v)
    inside = True
    dist = np.inf
    for i in range(k):
        a, b = v[i], v[(i + 1) % k]
        if _cross(a, b, p) < 0:
            inside = False
        dist = min(dist, _segment_distance(p, a, b))
    return inside, (dist if inside else -dist)
