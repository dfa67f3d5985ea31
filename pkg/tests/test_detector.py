import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lidarspoof.detector import DetectorParams, cluster, detect, fit_box
from lidarspoof.errors import InvalidArgument
from lidarspoof.evaluation import OrientedBox, injection_success, iou_bev, removal_success
from lidarspoof.experiments import object_span, sweep_background
from lidarspoof.geometry import PointCloud
from lidarspoof.pc_io import RemovalProfile
from lidarspoof.profiles import builtin_profiles
from lidarspoof.removal import RemovalSpec, apply_removal
from lidarspoof.scenario import place_object, vehicle_box


def ball(n, center, r=0.1, seed=0):
    rng = np.random.default_rng(seed)
    return np.asarray(center) + rng.uniform(-r, r, (n, 3)) / math.sqrt(3)


def pc(xyz):
    return PointCloud(xyz, np.zeros(len(xyz)))


def test_params_validation():
    with pytest.raises(InvalidArgument):
        DetectorParams(cluster_radius=0)
    with pytest.raises(InvalidArgument):
        DetectorParams(min_points=0)


def test_cluster_examples():
    assert cluster(PointCloud.empty()) == []
    (one,) = cluster(pc(ball(20, (5, 0, 0))))
    assert len(one) == 20
    two = cluster(pc(np.vstack([ball(15, (5, 0, 0)), ball(15, (15, 0, 0), seed=1)])))
    assert [len(c) for c in two] == [15, 15]


def test_ground_points_ignored():
    xyz = ball(30, (5, 0, -1.7))
    assert cluster(pc(xyz)) == []


def test_clusters_disjoint_and_cover():
    rng = np.random.default_rng(3)
    xyz = rng.uniform(-5, 5, (500, 3))
    xyz[:, 2] = np.abs(xyz[:, 2])
    cl = cluster(pc(xyz), DetectorParams(cluster_radius=1.0, min_points=1))
    allidx = np.concatenate(cl)
    assert len(allidx) == len(set(allidx.tolist())) == 500


def test_fit_box_axis_aligned():
    g = np.array([[x, y, z] for x in np.linspace(0, 4, 21) for y in np.linspace(0, 2, 11) for z in (0.0, 1.0)])
    b = fit_box(g)
    assert math.isclose(b.yaw % math.pi, 0, abs_tol=1e-9) or math.isclose(b.yaw % math.pi, math.pi, abs_tol=1e-9)
    np.testing.assert_allclose(b.dims, (4, 2, 1), atol=1e-9)
    np.testing.assert_allclose(b.center, (2, 1, 0.5), atol=1e-9)


def test_fit_box_single_point():
    b = fit_box([[1, 2, 3]])
    assert b.dims == (0.1, 0.1, 0.1) and b.center == (1, 2, 3)
    with pytest.raises(InvalidArgument):
        fit_box(np.zeros((0, 3)))


def test_fit_box_rotated_30():
    g = np.array([[x, y, 0] for x in np.linspace(-2, 2, 41) for y in np.linspace(-1, 1, 21)])
    t = math.radians(30)
    rot = np.array([[math.cos(t), -math.sin(t), 0], [math.sin(t), math.cos(t), 0], [0, 0, 1]])
    b = fit_box(g @ rot.T)
    err = (b.yaw - t + math.pi / 2) % math.pi - math.pi / 2
    assert abs(math.degrees(err)) < 1


def test_detect_scores():
    assert detect(PointCloud.empty()) == []
    d = detect(pc(np.vstack([ball(50, (5, 0, 0)), ball(300, (20, 0, 0), seed=2)])))
    assert [r.score for r in d] == [0.5, 1.0]
    assert {r.label for r in d} == {"object"}


def test_vehicle_shaped_cluster_single_detection():
    rng = np.random.default_rng(8)
    local = rng.uniform(-0.5, 0.5, (2000, 3))
    face = rng.integers(0, 3, 2000)
    local[np.arange(2000), face] = np.sign(local[np.arange(2000), face]) * 0.5
    xyz = local * (4.5, 1.8, 1.5) + (10, 2, -0.98)
    dets = detect(pc(xyz))
    assert len(dets) == 1
    assert iou_bev(dets[0].box, OrientedBox((10, 2, -0.98), (4.5, 1.8, 1.5))) > 0.9


def test_vehicle_pipeline():
    bg = sweep_background()
    sc = place_object(bg, vehicle_box(), 5.0)
    assert sc.object_mask.sum() > 1500
    dets = detect(sc.cloud)
    assert injection_success(dets, sc.gt_box)
    span = object_span(sc)
    out = apply_removal(sc.cloud, RemovalSpec("PRA", RemovalProfile([0.0], [1.0]), attack_span=span),
                        builtin_profiles()["VLP-16"])
    assert removal_success(detect(out.surviving), sc.gt_box)


@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    xyz = np.vstack([ball(40, (5, 1, 0), 0.8, seed), ball(25, (12, -3, 0.5), 0.6, seed + 1)])
    a = detect(pc(xyz))
    b = detect(pc(xyz[rng.permutation(len(xyz))]))
    key = lambda r: r.box.center
    assert len(a) == len(b)
    for ra, rb in zip(sorted(a, key=key), sorted(b, key=key)):
        np.testing.assert_allclose(ra.box.center, rb.box.center, atol=1e-9)
        np.testing.assert_allclose(ra.box.dims, rb.box.dims, atol=1e-9)
        assert abs(ra.box.yaw - rb.box.yaw) < 1e-9
        assert ra.score == rb.score


@given(st.integers(0, 2**32 - 1), st.integers(1, 80))
def test_score_monotone(seed, drop):
    xyz = ball(150, (6, 0, 0), 0.3, seed)
    (full,) = detect(pc(xyz))
    rest = detect(pc(xyz[drop:]))
    assert all(r.score <= full.score for r in rest)
