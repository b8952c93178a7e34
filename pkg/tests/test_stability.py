import numpy as np
import pytest
from hypothesis import given, strategies as st

from toptime import stability as sb
from toptime.kinodyn import MomentumState

SQUARE = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
M, G = 60.0, 9.81


def ms(p_com, Pdot=(0, 0, 0), Ldot=(0, 0, 0)):
    return MomentumState(np.zeros(3), np.zeros(3), np.array(p_com, float), M, np.array(Pdot, float),
                         np.array(Ldot, float))


def test_square_polygon():
    sp = sb.support_polygon(SQUARE)
    assert len(sp.vertices) == 4 and np.allclose(sp.centroid, [0.5, 0.5], atol=1e-15)


def test_interior_point_dropped():
    sp = sb.support_polygon(SQUARE + [[0.5, 0.5, 0]])
    assert len(sp.vertices) == 4 and not any(np.allclose(v, [0.5, 0.5]) for v in sp.vertices)


def test_collinear_degenerate():
    with pytest.raises(sb.DegeneratePolygonError):
        sb.support_polygon([[0, 0, 0], [1, 0, 0], [2, 0, 0]])


def test_too_few_points():
    with pytest.raises(sb.DegeneratePolygonError):
        sb.support_polygon([[0, 0, 0], [1, 0, 0]])


def test_hull_idempotent(rng):
    for _ in range(100):
        pts = rng.uniform(-1, 1, size=(20, 2))
        h1 = sb.convex_hull(pts)
        h2 = sb.convex_hull(h1)
        assert np.array_equal(h1, h2)


def test_zmp_static_example():
    assert np.allclose(sb.zmp(ms([0.02, 0, 0.9])), [0.02, 0], atol=1e-15)


def test_zmp_free_fall():
    with pytest.raises(sb.FreeFallError):
        sb.zmp(ms([0, 0, 0.9], Pdot=[0, 0, -M * G]))


def test_zmp_dynamic_example():
    p = sb.zmp(ms([0, 0, 0.9], Pdot=[30, 0, 0]))
    assert p[0] == pytest.approx(0.9 * 30 / 588.6, abs=1e-12)
    assert p[0] == pytest.approx(0.04587, abs=1e-5)


def test_zml_examples():
    s = ms([0.1, -0.2, 0.9])
    for z in (0.0, 0.3, 2.0):
        assert np.allclose(sb.zml_point(s, G, z), [0.1, -0.2], atol=1e-15)
    d = ms([0, 0, 0.9], Pdot=[30, 0, 0])
    assert np.array_equal(sb.zml_point(d, G, 0.9), sb.zmp(d))
    assert sb.zml_point(d, G, 0.45)[0] == pytest.approx(0.02294, abs=1e-5)


def test_zmp_static_equals_projection(rng):
    for _ in range(1000):
        c = rng.uniform(-1, 1, 3) + [0, 0, 1]
        assert np.max(np.abs(sb.zmp(ms(c)) - c[:2])) < 1e-12


def test_zml_collinear(rng):
    for _ in range(1000):
        s = ms(rng.uniform(-1, 1, 3) + [0, 0, 1], rng.normal(0, 50, 3), rng.normal(0, 50, 3))
        a, b, c = (sb.zml_point(s, G, z) for z in (0.0, 0.7, 1.9))
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        assert abs(cross) < 1e-9


def test_zmp_series_matches_scalar(rng):
    p = rng.uniform(-1, 1, (50, 3)) + [0, 0, 1]
    Pd, Ld = rng.normal(0, 30, (50, 3)), rng.normal(0, 30, (50, 3))
    Pd[7, 2] = -M * G
    out = sb.zmp_series(p, Pd, Ld, M, G)
    assert np.all(np.isnan(out[7]))
    for t in (0, 10, 49):
        assert np.allclose(out[t], sb.zmp(ms(p[t], Pd[t], Ld[t])), rtol=0, atol=1e-14)


def test_margin_examples():
    sp = sb.support_polygon(SQUARE)
    s = sb.stability_margin(sp, sp.centroid)
    assert s.d == 0.0 and s.classification == sb.INSIDE
    assert sb.stability_margin(sp, sp.centroid + [0.2, 0]).classification == sb.INSIDE
    assert sb.stability_margin(sp, sp.centroid + [0.35, 0]).classification == sb.NEAR_EDGE
    assert sb.stability_margin(sp, sp.centroid + [0.40, 0]).classification == sb.EXITED


def test_classification_boundaries():
    assert sb.classify(0.32) == sb.INSIDE
    assert sb.classify(0.36) == sb.NEAR_EDGE
    assert sb.classify(0.3600001) == sb.EXITED
    codes = sb.classify_codes([0.32, 0.36, 0.3600001])
    assert codes.tolist() == [0, 1, 2]


@given(st.floats(0, 2))
def test_classify_codes_agree(d):
    assert sb.CLASS_CODES[sb.classify(d)] == int(sb.classify_codes([d])[0])


def test_point_in_polygon_examples():
    sp = sb.support_polygon(SQUARE)
    inside, dist = sb.point_in_polygon(sp, sp.centroid)
    assert inside and dist > 0
    inside, dist = sb.point_in_polygon(sp, [2.0, 0.5])
    assert not inside and dist == pytest.approx(-1.0)
    inside, dist = sb.point_in_polygon(sp, [1.0, 1.0])
    assert inside and dist == 0.0


def _half_plane_inside(v, p):
    k = len(v)
    return all((v[(i + 1) % k][0] - v[i][0]) * (p[1] - v[i][1]) - (v[(i + 1) % k][1] - v[i][1]) * (p[0] - v[i][0])
               >= 0 for i in range(k))


def test_point_in_polygon_vs_half_planes(rng):
    for _ in range(20):
        sp = sb.support_polygon(np.column_stack([rng.uniform(-1, 1, (12, 2)), np.zeros(12)]))
        for p in rng.uniform(-1.2, 1.2, (500, 2)):
            assert sb.point_in_polygon(sp, p)[0] == _half_plane_inside(sp.vertices, p)
