import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lidarspoof.errors import DegenerateRay, InvalidArgument, InvalidResolution
from lidarspoof.geometry import (
    Point,
    PointCloud,
    SphericalCoord,
    assign_azimuth_bins,
    azimuth_bin,
    azimuth_span,
    concatenate,
    from_spherical,
    from_spherical_array,
    in_azimuth_span,
    ray_direction,
    to_spherical,
    to_spherical_array,
)

coords = st.floats(-300, 300, allow_nan=False)


def test_ray_direction_examples():
    np.testing.assert_allclose(ray_direction(Point(3, 4, 0)), [0.6, 0.8, 0.0], atol=1e-15)
    np.testing.assert_allclose(ray_direction(Point(0, 0, 5)), [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(ray_direction((1, 1, 1)), [1 / math.sqrt(3)] * 3, atol=1e-12)


def test_ray_direction_origin_is_degenerate():
    with pytest.raises(DegenerateRay):
        ray_direction((0.0, 0.0, 0.0))


def test_to_spherical_examples():
    s = to_spherical(Point(1, 0, 0))
    assert (s.range, s.azimuth, s.altitude) == pytest.approx((1, 0, 0))
    s = to_spherical(Point(0, 2, 0))
    assert (s.range, s.azimuth, s.altitude) == pytest.approx((2, 90, 0))
    s = to_spherical(Point(1, 1, math.sqrt(2)))
    assert (s.range, s.azimuth, s.altitude) == pytest.approx((2, 45, 45))


def test_from_spherical_examples():
    p = from_spherical(SphericalCoord(1, 0, 0))
    assert (p.x, p.y, p.z) == pytest.approx((1, 0, 0))
    p = from_spherical(SphericalCoord(0, 123, -40))
    assert (p.x, p.y, p.z) == (0.0, 0.0, 0.0)
    p = from_spherical(SphericalCoord(2, 45, 45))
    assert (p.x, p.y, p.z) == pytest.approx((1, 1, math.sqrt(2)))


def test_origin_maps_to_zero_spherical():
    s = to_spherical(Point(0, 0, 0))
    assert (s.range, s.azimuth, s.altitude) == (0.0, 0.0, 0.0)


def test_azimuth_bin_examples():
    assert azimuth_bin(0.05, 0.1) == 0
    assert azimuth_bin(359.95, 0.1) == 3599
    assert azimuth_bin(12.34, 0.1) == 123


def test_azimuth_bin_bad_resolution():
    with pytest.raises(InvalidResolution):
        azimuth_bin(1.0, 0.0)


def test_spherical_round_trip_1e5_points():
    rng = np.random.default_rng(5)
    d = rng.normal(size=(100_000, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    xyz = d * rng.uniform(1e-6, 300, 100_000)[:, None]
    back = from_spherical_array(to_spherical_array(xyz))
    assert np.max(np.linalg.norm(back - xyz, axis=1)) < 1e-9


def test_assign_bins_sets_index_and_keeps_order(cloud_2000):
    binned = assign_azimuth_bins(cloud_2000, 0.1)
    assert binned.azimuth_resolution == 0.1
    np.testing.assert_array_equal(binned.xyz, cloud_2000.xyz)
    np.testing.assert_array_equal(binned.azimuth_index, azimuth_bin(cloud_2000.azimuths(), 0.1))


def test_point_intensity_checked():
    with pytest.raises(InvalidArgument):
        Point(0, 0, 0, intensity=256)
    with pytest.raises(InvalidArgument):
        PointCloud(np.zeros((1, 3)), [-1.0])


def test_cloud_select_preserves_order(cloud_2000):
    idx = np.array([5, 1, 9])
    sub = cloud_2000.select(np.sort(idx))
    np.testing.assert_array_equal(sub.xyz, cloud_2000.xyz[[1, 5, 9]])
    mask = np.zeros(len(cloud_2000), bool)
    mask[[3, 7]] = True
    assert len(cloud_2000.select(mask)) == 2


def test_concatenate_and_points():
    a = PointCloud.from_points([Point(1, 0, 0, 10), Point(0, 1, 0, 20)])
    b = PointCloud.from_points([Point(0, 0, 1, 30)])
    c = concatenate([a, b])
    assert len(c) == 3
    assert c[2].intensity == 30
    assert [p.x for p in c] == [1, 0, 0]
    assert len(concatenate([])) == 0


def test_azimuth_span_wraps():
    xyz = np.array([[1, -0.1, 0], [1, 0.1, 0]], float)
    lo, hi = azimuth_span(xyz)
    assert lo < 0 < hi
    assert in_azimuth_span(np.array([359.0, 1.0, 180.0]), (lo - 2, hi + 2)).tolist() == [True, True, False]


@given(arrays(np.float64, 3, elements=coords))
def test_ray_direction_collinear(p):
    if np.linalg.norm(p) < 1e-6:
        return
    g = ray_direction(p)
    assert abs(np.linalg.norm(g) - 1) < 1e-12
    assert np.linalg.norm(np.cross(g, p)) < 1e-9 * np.linalg.norm(p)


@given(st.floats(0, 360, exclude_max=True), st.sampled_from([0.1, 0.2, 0.5, 1.0, 7.0]))
def test_bin_assignment_total(az, res):
    j = int(azimuth_bin(az, res))
    n = math.ceil(360 / res)
    assert 0 <= j < n
    # az lies in the bin [j*res, (j+1)*res) up to float rounding
    assert j * res <= az + 1e-9 and az < (j + 1) * res + 1e-9


@given(arrays(np.float64, (20, 3), elements=coords))
def test_spherical_round_trip_property(xyz):
    back = from_spherical_array(to_spherical_array(xyz))
    np.testing.assert_allclose(back, xyz, atol=1e-9)
