import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lidarspoof.errors import InvalidArgument
from lidarspoof.evaluation import (
    OrientedBox,
    convex_intersection,
    count_injected,
    count_removed,
    injection_success,
    iou_bev,
    polygon_area,
    removal_percentage_per_azimuth,
    removal_success,
    success_rate,
)
from lidarspoof.geometry import PointCloud, concatenate
from lidarspoof.pc_io import DetectionRecord

from oracles import random_box_pairs, raster_iou

UNIT = OrientedBox((0, 0, 0), (2, 2, 1))


def box(x=0.0, y=0.0, l=2.0, w=2.0, yaw=0.0):
    return OrientedBox((x, y, 0.0), (l, w, 1.0), yaw)


def test_iou_examples():
    assert iou_bev(UNIT, UNIT) == 1.0
    assert iou_bev(box(0), box(100, l=1, w=1)) == 0.0
    assert iou_bev(box(0), box(1)) == pytest.approx(1 / 3, abs=1e-15)


def test_iou_rotated_square_analytic():
    # a unit square rotated 45 deg over itself: overlap is a regular octagon
    a, b = box(l=1, w=1), box(l=1, w=1, yaw=math.pi / 4)
    octagon = 2 * (math.sqrt(2) - 1)
    assert iou_bev(a, b) == pytest.approx(octagon / (2 - octagon), abs=1e-12)


def test_iou_against_raster_oracle():
    for a, b in random_box_pairs(np.random.default_rng(42), 60):
        assert abs(iou_bev(a, b) - raster_iou(a, b)) < 1e-3


def test_polygon_helpers():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert polygon_area(sq) == 1.0
    assert polygon_area(convex_intersection(sq, [(2, 2), (3, 2), (3, 3), (2, 3)])) == 0.0


def test_success_definitions():
    gt = UNIT
    touching = box(2.0)
    assert iou_bev(touching, gt) == 0.0
    assert not injection_success([], gt)
    assert injection_success([gt], gt)
    assert not injection_success([touching], gt)
    assert removal_success([], gt)
    assert not removal_success([DetectionRecord(gt, 0.9, "car")], gt)
    assert removal_success([box(10), box(-10)], gt)


def test_success_rate():
    assert success_rate([True]).success_rate == 1.0
    assert success_rate([True, False]).success_rate == 0.5
    r = success_rate([True] * 37 + [False] * 63)
    assert (r.trials, r.successes, r.success_rate) == (100, 37, 0.37)
    with pytest.raises(InvalidArgument):
        success_rate([])


def wall(n=400, seed=0):
    rng = np.random.default_rng(seed)
    yz = rng.uniform(-5, 5, size=(n, 2))
    return PointCloud(np.column_stack([np.full(n, 10.0), yz]), rng.uniform(0, 70, n))


def test_count_injected():
    b = wall()
    assert count_injected(b, b, 80) == 0
    extra = PointCloud(np.random.default_rng(1).uniform(1, 5, (50, 3)), np.full(50, 255.0))
    att = concatenate([b, extra])
    assert count_injected(b, att, 80) == 50
    assert count_injected(b, att, 255) == 0


def test_count_removed():
    b = wall()
    assert count_removed(b, b) == 0
    keep = np.ones(len(b), bool)
    keep[np.random.default_rng(2).choice(len(b), 30, replace=False)] = False
    assert count_removed(b, b.select(keep)) == 30
    xyz = b.xyz.copy()
    xyz[7, 1] += 0.02
    assert count_removed(b, b.with_xyz(xyz), match_tol=0.01) == 1


def test_count_removed_ignores_bright_points():
    b = wall()
    assert count_removed(b, b.with_xyz(b.xyz, np.full(len(b), 255.0))) == len(b)


def test_count_removed_by_channel():
    b = PointCloud(np.array([[1.0, 0, 0], [1, 0.1, 0], [1, 0.2, 0]]), [1, 1, 1],
                   altitude_index=[0, 0, 1], azimuth_index=[0, 1, 1])
    assert count_removed(b, b.select([0, 2]).with_xyz(np.zeros((2, 3)))) == 1


def test_removal_percentage():
    b = wall(2000, seed=3)
    table = removal_percentage_per_azimuth(b, b, 1.0)
    assert set(table.values()) == {0.0}
    az = b.azimuths()
    j = np.floor(az).astype(int)
    target = np.bincount(j).argmax()
    out = removal_percentage_per_azimuth(b, b.select(j != target), 1.0)
    assert out[target] == 1.0 and all(v == 0.0 for k, v in out.items() if k != target)


def test_removal_percentage_half_bin():
    n = 200
    xyz = np.column_stack([np.full(n, 10.0), np.linspace(0.01, 0.15, n), np.linspace(-1, 1, n)])
    b = PointCloud(xyz, np.zeros(n))
    out = removal_percentage_per_azimuth(b, b.select(np.arange(0, n, 2)), 1.0)
    assert out == {0: 0.5}


boxes = st.builds(
    box,
    st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 6), st.floats(0.1, 6), st.floats(-4, 4),
)


@given(boxes, boxes)
def test_iou_properties(a, b):
    v = iou_bev(a, b)
    assert v == iou_bev(b, a)
    assert 0.0 <= v <= 1.0
    assert iou_bev(a, a) == pytest.approx(1.0, abs=1e-12)


@given(st.lists(st.booleans(), min_size=1, max_size=200))
def test_success_rate_property(outcomes):
    r = success_rate(outcomes)
    assert r.successes <= r.trials and r.success_rate == r.successes / r.trials
