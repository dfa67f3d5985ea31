"""Independent reference implementations used to freeze expected values."""

import math

import numpy as np


def _inside(box, gx, gy):
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    dx, dy = gx - box.center[0], gy - box.center[1]
    u = c * dx + s * dy
    v = -s * dx + c * dy
    return (np.abs(u) <= box.dims[0] / 2) & (np.abs(v) <= box.dims[1] / 2)


def raster_iou(a, b, n=1000):
    """BEV IoU by counting cell centers of an n x n grid over both boxes."""
    corners = np.vstack([a.bev_corners(), b.bev_corners()])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    side = max(hi - lo)
    step = side / n
    xs = (lo[0] + (np.arange(n) + 0.5) * step).astype(np.float64)
    ys = (lo[1] + (np.arange(n) + 0.5) * step).astype(np.float64)
    gx, gy = np.meshgrid(xs, ys, sparse=True)
    ia, ib = _inside(a, gx, gy), _inside(b, gx, gy)
    inter = np.count_nonzero(ia & ib)
    union = np.count_nonzero(ia | ib)
    return inter / union if union else 0.0


def random_box_pairs(rng, count):
    from lidarspoof.evaluation import OrientedBox

    pairs = []
    for _ in range(count):
        ca = rng.uniform(-2, 2, 2)
        a = OrientedBox((*ca, 0), (*rng.uniform(0.5, 5, 2), 1.5), rng.uniform(-np.pi, np.pi))
        # keep most pairs overlapping so the comparison is informative
        cb = ca + rng.normal(0, 1.5, 2)
        b = OrientedBox((*cb, 0.3), (*rng.uniform(0.5, 5, 2), 1.0), rng.uniform(-np.pi, np.pi))
        pairs.append((a, b))
    return pairs
