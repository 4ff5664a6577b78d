import json
import math

import numpy as np
import pytest

from stokes_corners.geometry import (
    GeometryError,
    Polygon,
    Wedge,
    equilateral_triangle,
    parameterize,
    regular_polygon,
    right_triangle,
    rotation_matrix,
    unit_square,
    wedge_frame,
    wedge_param,
)


def test_square_bottom_midpoint_frame():
    fp = parameterize(unit_square(), 0.5)
    np.testing.assert_allclose(fp.position, [0.5, 0.0])
    np.testing.assert_allclose(fp.tangent, [1.0, 0.0])
    np.testing.assert_allclose(fp.normal, [0.0, -1.0])


def test_corner_needs_side_flag():
    sq = unit_square()
    with pytest.raises(GeometryError):
        parameterize(sq, 1.0)
    np.testing.assert_allclose(parameterize(sq, 0.0, side="+").tangent, [1, 0])
    np.testing.assert_allclose(parameterize(sq, 0.0, side="-").tangent, [0, -1])
    np.testing.assert_allclose(parameterize(sq, 1e-9).tangent, [1, 0])


def test_equilateral_second_edge_midpoint():
    fp = parameterize(equilateral_triangle(), 1.5)
    c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    np.testing.assert_allclose(fp.tangent, [c, s], atol=1e-15)
    np.testing.assert_allclose(fp.position, [0.75, math.sqrt(3) / 4], atol=1e-15)


def test_arc_parameter_out_of_range():
    with pytest.raises(GeometryError):
        parameterize(unit_square(), 4.5)
    with pytest.raises(GeometryError):
        parameterize(unit_square(), -0.1)


@pytest.mark.parametrize("poly", [unit_square(), equilateral_triangle(), right_triangle(),
                                  regular_polygon(7)])
def test_frames_and_turning(poly):
    rng = np.random.default_rng(1)
    for s in rng.uniform(0, poly.total_length, 50):
        fp = parameterize(poly, float(s))
        assert abs(np.linalg.norm(fp.tangent) - 1) < 1e-14
        assert abs(fp.tangent @ fp.normal) < 1e-14
        # outward: the normal points away from the centroid side of the edge
        assert not poly.contains(fp.position + 1e-6 * fp.normal)[0]
    assert abs(np.sum(poly.turning_angles) - 2 * math.pi) < 1e-12


def test_angles():
    np.testing.assert_allclose(unit_square().thetas, 0.5)
    np.testing.assert_allclose(equilateral_triangle().thetas, 1 / 3)
    np.testing.assert_allclose(right_triangle().thetas, [0.5, 0.25, 0.25])
    L = Polygon([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])
    np.testing.assert_allclose(L.thetas, [0.5, 0.5, 0.5, 1.5, 0.5, 0.5])


def test_clockwise_rejected_with_hint():
    with pytest.raises(GeometryError, match="counterclockwise"):
        Polygon([[0, 0], [0, 1], [1, 0]])


@pytest.mark.parametrize("verts", [[[0, 0], [1, 0]], [[0, 0], [1, 0], [2, 0]],
                                   [[0, 0], [1, 0], [1, 0], [0, 1]]])
def test_degenerate_rejected(verts):
    with pytest.raises(GeometryError):
        Polygon(verts)


def test_self_intersecting_rejected():
    with pytest.raises(GeometryError):
        Polygon([[0, 0], [1, 1], [1, 0], [0, 1]])


def test_json_roundtrip(tmp_path):
    p = tmp_path / "tri.json"
    p.write_text(json.dumps(right_triangle().to_dict()))
    q = Polygon.from_json(p)
    np.testing.assert_array_equal(q.vertices, right_triangle().vertices)
    p.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [0, 1]], "colour": "red"}))
    with pytest.raises(GeometryError, match="unknown"):
        Polygon.from_json(p)
    with pytest.raises(GeometryError):
        Polygon.from_json(tmp_path / "missing.json")


def test_wedge_param():
    w = Wedge(0.5)
    np.testing.assert_allclose(wedge_param(w, 0.5), [0.5, 0.0])
    np.testing.assert_allclose(wedge_param(w, -0.5), [0.0, 0.5], atol=1e-16)
    np.testing.assert_allclose(wedge_param(Wedge(1.0), -0.3), [-0.3, 0.0], atol=1e-16)
    np.testing.assert_allclose(wedge_param(w, 0.0), [0, 0])
    for t in (-1.0, 1.0, -0.25):
        assert abs(np.linalg.norm(wedge_param(Wedge(1.3), t)) - abs(t)) < 1e-15
    with pytest.raises(GeometryError):
        wedge_param(w, 1.5)
    with pytest.raises(GeometryError):
        Wedge(2.0)


def test_wedge_frame_tangent_is_derivative():
    w = Wedge(0.7)
    for t in (-0.6, -0.1, 0.2, 0.9):
        h = 1e-7
        d = (wedge_param(w, t + h) - wedge_param(w, t - h)) / (2 * h)
        np.testing.assert_allclose(wedge_frame(w, t).tangent, d, atol=1e-8)


def test_rotation_matrix():
    fp = parameterize(unit_square(), 0.5)
    np.testing.assert_array_equal(rotation_matrix(fp), [[1, 0], [0, -1]])
    rng = np.random.default_rng(2)
    poly = regular_polygon(9)
    for s in rng.uniform(0, poly.total_length, 20):
        R = rotation_matrix(parameterize(poly, float(s)))
        np.testing.assert_allclose(R @ R.T, np.eye(2), atol=1e-15)
        assert abs(abs(np.linalg.det(R)) - 1) < 1e-15


def test_contains_and_distance():
    sq = unit_square()
    assert sq.contains([[0.5, 0.5]])[0]
    assert not sq.contains([[1.5, 0.5]])[0]
    assert not sq.contains([[1.0, 0.5]])[0]
    np.testing.assert_allclose(sq.distance_to_boundary([[0.5, 0.25], [2, 0.5]]), [0.25, 1.0])
    assert abs(sq.inradius() - 0.5) < 1e-15
    assert abs(sq.circumradius() - math.sqrt(0.5)) < 1e-15
