"""
Geometric stand-in detector: single-linkage Euclidean clustering above the
ground followed by a PCA-aligned box fit.

It is meant for pipeline-level checks only and makes no attempt to mimic a
learned 3D detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InvalidArgument
from .evaluation import OrientedBox
from .geometry import PointCloud
from .pc_io import DetectionRecord

MIN_BOX_DIM = 0.1  # m


@dataclass(frozen=True)
class DetectorParams:
    cluster_radius: float = 0.5
    min_points: int = 10
    max_points: Optional[int] = None
    ground_z: float = -1.4

    def __post_init__(self):
        if not self.cluster_radius > 0:
            raise InvalidArgument("cluster_radius must be positive")
        if self.min_points < 1:
            raise InvalidArgument("min_points must be >= 1")


def cluster(cloud: PointCloud, params: DetectorParams = DetectorParams()) -> List[np.ndarray]:
    """Index arrays of each retained cluster, ordered by smallest member index."""
    idx = np.nonzero(cloud.xyz[:, 2] >= params.ground_z)[0]
    if idx.size == 0:
        return []
    pts = cloud.xyz[idx]
    pairs = cKDTree(pts).query_pairs(params.cluster_radius, output_type="ndarray")
    n = len(pts)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.nonzero(np.diff(labels[order]))[0] + 1
    out = []
    for members in np.split(order, splits):
        if len(members) < params.min_points:
            continue
        if params.max_points is not None and len(members) > params.max_points:
            continue
        out.append(np.sort(idx[members]))
    out.sort(key=lambda m: m[0])
    return out


def fit_box(points) -> OrientedBox:
    """Oriented box from the principal axis of the ground-plane spread."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise InvalidArgument("cannot fit a box to no points")
    # canonical order makes the fit independent of input permutation
    pts = pts[np.lexsort(pts.T[::-1])]
    xy = pts[:, :2]
    cov = np.cov(xy.T, bias=True) if len(pts) > 1 else np.zeros((2, 2))
    w, v = np.linalg.eigh(cov)
    major = v[:, np.argmax(w)]
    yaw = math.atan2(major[1], major[0])
    # fold into [-pi/2, pi/2): a box is symmetric under half turns
    if yaw >= math.pi / 2:
        yaw -= math.pi
    elif yaw < -math.pi / 2:
        yaw += math.pi
    c, s = math.cos(yaw), math.sin(yaw)
    u = xy @ np.array([c, s])
    t = xy @ np.array([-s, c])
    lo = np.array([u.min(), t.min(), pts[:, 2].min()])
    hi = np.array([u.max(), t.max(), pts[:, 2].max()])
    mid = (lo + hi) / 2
    dims = np.maximum(hi - lo, MIN_BOX_DIM)
    center = (mid[0] * c - mid[1] * s, mid[0] * s + mid[1] * c, mid[2])
    return OrientedBox(center, tuple(dims), yaw)


def detect(cloud: PointCloud, params: DetectorParams = DetectorParams()) -> List[DetectionRecord]:
    return [
        DetectionRecord(fit_box(cloud.xyz[m]), min(1.0, len(m) / 100.0), "object")
        for m in cluster(cloud, params)
    ]
