import numpy as np
import pytest

from dualnav.geometry import (direction_from_angles, min_clearance,
                              path_length, segment_point_distances,
                              spherical_angles, unit, wrap_angle)


def test_unit_norm_and_zero():
    v = unit([3.0, 4.0, 0.0])
    assert np.allclose(v, [0.6, 0.8, 0.0])
    assert np.allclose(unit([0.0, 0.0, 0.0]), 0.0)


def test_segment_point_distances_basic():
    d = segment_point_distances([0, 0, 0], [2, 0, 0],
                                [[1, 1, 0], [-1, 0, 0], [3, 0, 0]])
    assert np.allclose(d, [1.0, 1.0, 1.0])


def test_segment_point_distances_degenerate_segment():
    d = segment_point_distances([1, 1, 1], [1, 1, 1], [[1, 1, 3]])
    assert np.allclose(d, [2.0])


def test_path_length():
    assert path_length([[0, 0, 0]]) == 0.0
    assert path_length([[0, 0, 0], [3, 4, 0], [3, 4, 2]]) == pytest.approx(7.0)


def test_min_clearance():
    wp = [[0, 0, 0], [4, 0, 0]]
    pts = [[2, 2, 0], [5, 0, 0]]
    assert min_clearance(wp, pts) == pytest.approx(1.0)
    assert min_clearance(wp, np.zeros((0, 3))) == np.inf


def test_wrap_angle():
    assert wrap_angle(np.pi + 0.1) == pytest.approx(-np.pi + 0.1)
    assert wrap_angle(-np.pi - 0.1) == pytest.approx(np.pi - 0.1)
    assert wrap_angle(0.3) == pytest.approx(0.3)


def test_spherical_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(50):
        v = unit(rng.normal(size=3))
        az, el = spherical_angles(v)
        assert np.allclose(direction_from_angles(az, el), v, atol=1e-12)
