import json
import math

import numpy as np
import pytest

from stokes_corners.geometry import GeometryError, equilateral_triangle, unit_square
from stokes_corners.kernels import SingularityError
from stokes_corners.verification import (
    StokesletSource,
    default_sources,
    default_targets,
    error_E,
    load_sources,
    rigid_motion_check,
    stokeslet_experiment,
    stokeslet_field,
)


def test_stokeslet_hand_value():
    s = StokesletSource([0, 0], [1, 0])
    np.testing.assert_allclose(stokeslet_field([s], [[1.0, 0.0]]), [[1 / (4 * math.pi), 0]], atol=1e-17)
    np.testing.assert_allclose(stokeslet_field([s], [[0.0, 2.0]]),
                               [[-math.log(2) / (4 * math.pi), 0]], atol=1e-17)
    with pytest.raises(SingularityError):
        stokeslet_field([s], [[0.0, 0.0]])


def test_stokeslet_divergence_free():
    srcs = [StokesletSource([2, 1], [0.3, -1.2]), StokesletSource([-1, 3], [1, 0.5])]
    x, h = np.array([0.4, 0.2]), 1e-5
    du = (stokeslet_field(srcs, [x + [h, 0]]) - stokeslet_field(srcs, [x - [h, 0]]))[0, 0]
    dv = (stokeslet_field(srcs, [x + [0, h]]) - stokeslet_field(srcs, [x - [0, h]]))[0, 1]
    assert abs(du + dv) / (2 * h) < 1e-8


def test_error_E():
    assert error_E([[1, 0], [0, 1]], [[1, 0], [0, 2]]) == pytest.approx(1 / math.sqrt(5))
    with pytest.raises(ZeroDivisionError):
        error_E([[1, 0]], [[0, 0]])
    with pytest.raises(ValueError):
        error_E([[1, 0]], [[1, 0], [0, 1]])


def test_default_sources_and_targets():
    poly = equilateral_triangle()
    a = default_sources(poly, seed=4)
    b = default_sources(poly, seed=4)
    assert len(a) == 5
    for s, t in zip(a, b):
        np.testing.assert_array_equal(s.location, t.location)
        assert not poly.contains(s.location[None, :])[0]
    tg = default_targets(poly)
    assert np.all(poly.contains(tg))
    with pytest.raises(GeometryError):
        StokesletSource(poly.centroid(), [1, 0]).check_exterior(poly)


def test_experiment_square():
    res = stokeslet_experiment(unit_square(), seed=1)
    assert res.E < 1e-12 and res.n <= 600
    d = res.to_dict()
    assert {"geometry", "n", "E", "kappa", "flux", "timings", "sources"} <= set(d)
    assert abs(res.flux) < 1e-12


def test_rotation():
    assert rigid_motion_check(equilateral_triangle(), "rotation") < 1e-10
    with pytest.raises(ValueError):
        rigid_motion_check(equilateral_triangle(), "shear")


def test_load_sources(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"sources": [{"location": [3, 3], "strength": [1, 0]}],
                             "targets": [[0.5, 0.5]]}))
    srcs, tg = load_sources(p)
    assert srcs[0].to_dict() == {"location": [3.0, 3.0], "strength": [1.0, 0.0]}
    assert tg.shape == (1, 2)
    p.write_text(json.dumps({"sources": [], "extra": 1}))
    with pytest.raises(GeometryError):
        load_sources(p)
    p.write_text(json.dumps({"sources": [{"location": [3, 3]}]}))
    with pytest.raises(GeometryError):
        load_sources(p)
    with pytest.raises(GeometryError):
        load_sources(tmp_path / "missing.json")
