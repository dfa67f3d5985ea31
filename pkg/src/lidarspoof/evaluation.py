"""
Attack success criteria and point-level accounting.

Injection succeeds when some detection overlaps the ground-truth box at
all (BEV IoU > 0); removal succeeds when none does. Spoofed points are
recognized by their intensity, and removed points are the benign points
left unmatched once the spoofed ones are discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgument
from .geometry import PointCloud, azimuth_bin

DEFAULT_MATCH_TOL = 0.01  # m
DEFAULT_INTENSITY_THRESHOLD = 80.0


@dataclass(frozen=True)
class OrientedBox:
    center: tuple
    dims: tuple  # (length, width, height)
    yaw: float = 0.0

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        dims = tuple(float(d) for d in self.dims)
        if len(center) != 3 or len(dims) != 3:
            raise InvalidArgument("center and dims need 3 components")
        if not all(d > 0 and math.isfinite(d) for d in dims):
            raise InvalidArgument(f"box dims must be positive, got {dims}")
        if not all(math.isfinite(c) for c in center) or not math.isfinite(self.yaw):
            raise InvalidArgument("box center and yaw must be finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "yaw", float(self.yaw))

    def bev_corners(self) -> np.ndarray:
        """Counterclockwise ground-plane corners, shape (4, 2)."""
        hl, hw = self.dims[0] / 2, self.dims[1] / 2
        local = np.array([[-hl, -hw], [hl, -hw], [hl, hw], [-hl, hw]])
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array(self.center[:2])

    def to_local(self, xyz: np.ndarray) -> np.ndarray:
        """Express world points in the box frame (origin at the center)."""
        d = np.asarray(xyz, dtype=float) - np.array(self.center)
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        x = c * d[..., 0] + s * d[..., 1]
        y = -s * d[..., 0] + c * d[..., 1]
        return np.stack([x, y, d[..., 2]], axis=-1)

    def contains(self, xyz: np.ndarray, slack: float = 0.0) -> np.ndarray:
        local = np.abs(self.to_local(xyz))
        half = np.array(self.dims) / 2 + slack
        return np.all(local <= half, axis=-1)

    def bev_area(self) -> float:
        return self.dims[0] * self.dims[1]


def _clip(subject: List[tuple], a: tuple, b: tuple) -> List[tuple]:
    """Keep the part of ``subject`` left of the directed edge a->b."""
    out = []
    n = len(subject)
    if n == 0:
        return out
    ex, ey = b[0] - a[0], b[1] - a[1]

    def side(p):
        return ex * (p[1] - a[1]) - ey * (p[0] - a[0])

    prev = subject[-1]
    d_prev = side(prev)
    for cur in subject:
        d_cur = side(cur)
        if d_cur >= 0:
            if d_prev < 0:
                t = d_prev / (d_prev - d_cur)
                out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
            out.append(cur)
        elif d_prev >= 0:
            t = d_prev / (d_prev - d_cur)
            out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
        prev, d_prev = cur, d_cur
    return out


def polygon_area(poly: Sequence[tuple]) -> float:
    if len(poly) < 3:
        return 0.0
    s = 0.0
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def convex_intersection(p: Sequence[tuple], q: Sequence[tuple]) -> List[tuple]:
    """Sutherland-Hodgman clip of polygon ``p`` by the convex CCW polygon ``q``."""
    out = list(p)
    for i in range(len(q)):
        out = _clip(out, q[i], q[(i + 1) % len(q)])
        if not out:
            break
    return out


def _box_key(b: OrientedBox) -> tuple:
    return b.center + b.dims + (b.yaw,)


def iou_bev(a: OrientedBox, b: OrientedBox) -> float:
    """Bird's-eye-view IoU of two yaw-rotated boxes."""
    # fixed argument order keeps iou(a, b) == iou(b, a) bit-for-bit
    if _box_key(b) < _box_key(a):
        a, b = b, a
    ca, cb = a.bev_corners(), b.bev_corners()
    # cheap reject on circumscribed circles
    ra = math.hypot(a.dims[0], a.dims[1]) / 2
    rb = math.hypot(b.dims[0], b.dims[1]) / 2
    if math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1]) > ra + rb:
        return 0.0
    inter = polygon_area(convex_intersection([tuple(c) for c in ca], [tuple(c) for c in cb]))
    union = a.bev_area() + b.bev_area() - inter
    if union <= 0:
        return 0.0
    return min(1.0, max(0.0, inter / union))


def _boxes(detections) -> Iterable[OrientedBox]:
    for d in detections:
        yield d if isinstance(d, OrientedBox) else d.box


def injection_success(detections, gt: OrientedBox) -> bool:
    """True iff some detection overlaps the ground truth (IoU > 0)."""
    return any(iou_bev(b, gt) > 0 for b in _boxes(detections))


def removal_success(detections, gt: OrientedBox) -> bool:
    """True iff no detection overlaps the ground truth; vacuous when empty."""
    return all(iou_bev(b, gt) == 0 for b in _boxes(detections))


@dataclass(frozen=True)
class EvalReport:
    trials: int
    successes: int
    success_rate: float
    per_trial: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "per_trial": list(self.per_trial),
        }


def success_rate(outcomes: Sequence[bool]) -> EvalReport:
    outcomes = tuple(bool(o) for o in outcomes)
    if not outcomes:
        raise InvalidArgument("success_rate needs at least one outcome")
    k = sum(outcomes)
    return EvalReport(len(outcomes), k, k / len(outcomes), outcomes)


def count_injected(benign: PointCloud, attacked: PointCloud, threshold: float = DEFAULT_INTENSITY_THRESHOLD) -> int:
    """Number of attacked points brighter than ``threshold`` (strict)."""
    if not 0 <= threshold <= 255:
        raise InvalidArgument("threshold must lie in [0, 255]")
    return int(np.count_nonzero(attacked.intensity > threshold))


def _matched_by_channel(benign: PointCloud, kept: PointCloud) -> np.ndarray:
    pool: Dict[tuple, int] = {}
    for key in zip(kept.altitude_index.tolist(), kept.azimuth_index.tolist()):
        pool[key] = pool.get(key, 0) + 1
    matched = np.zeros(len(benign), dtype=bool)
    for i, key in enumerate(zip(benign.altitude_index.tolist(), benign.azimuth_index.tolist())):
        if pool.get(key, 0) > 0:
            pool[key] -= 1
            matched[i] = True
    return matched


def _matched_by_distance(benign: PointCloud, kept: PointCloud, match_tol: float) -> np.ndarray:
    matched = np.zeros(len(benign), dtype=bool)
    if len(kept) == 0 or len(benign) == 0:
        return matched
    tree = cKDTree(kept.xyz)
    k = min(8, len(kept))
    dist, idx = tree.query(benign.xyz, k=k, distance_upper_bound=match_tol)
    dist = dist.reshape(len(benign), k)
    idx = idx.reshape(len(benign), k)
    consumed = np.zeros(len(kept), dtype=bool)
    for i in range(len(benign)):
        for d, j in zip(dist[i], idx[i]):
            if not d <= match_tol:
                break
            if not consumed[j]:
                consumed[j] = True
                matched[i] = True
                break
        else:
            # every one of the k nearest was taken; widen the search
            if k == 8 and dist[i, -1] <= match_tol:
                cand = tree.query_ball_point(benign.xyz[i], match_tol)
                cand = sorted(cand, key=lambda j: (np.linalg.norm(kept.xyz[j] - benign.xyz[i]), j))
                for j in cand:
                    if not consumed[j]:
                        consumed[j] = True
                        matched[i] = True
                        break
    return matched


def removed_mask(
    benign: PointCloud,
    attacked: PointCloud,
    threshold: float = DEFAULT_INTENSITY_THRESHOLD,
    match_tol: float = DEFAULT_MATCH_TOL,
) -> np.ndarray:
    """Boolean mask over ``benign`` marking points the attack removed."""
    if not match_tol > 0:
        raise InvalidArgument("match_tol must be positive")
    kept = attacked.select(attacked.intensity <= threshold)
    channel_ok = all(
        c.altitude_index is not None and c.azimuth_index is not None for c in (benign, kept)
    )
    if channel_ok:
        return ~_matched_by_channel(benign, kept)
    return ~_matched_by_distance(benign, kept, match_tol)


def count_removed(
    benign: PointCloud,
    attacked: PointCloud,
    threshold: float = DEFAULT_INTENSITY_THRESHOLD,
    match_tol: float = DEFAULT_MATCH_TOL,
) -> int:
    return int(np.count_nonzero(removed_mask(benign, attacked, threshold, match_tol)))


def removal_percentage_per_azimuth(
    benign: PointCloud,
    attacked: PointCloud,
    bin_deg: float = 1.0,
    threshold: float = DEFAULT_INTENSITY_THRESHOLD,
    match_tol: float = DEFAULT_MATCH_TOL,
) -> Dict[int, float]:
    """Fraction of benign points removed in each azimuth pie.

    Keys are bin indices ``floor(azimuth / bin_deg)``; bins holding no
    benign point are absent.
    """
    if not bin_deg > 0:
        raise InvalidArgument("bin_deg must be positive")
    removed = removed_mask(benign, attacked, threshold, match_tol)
    bins = azimuth_bin(benign.azimuths(), bin_deg)
    total = np.bincount(bins)
    gone = np.bincount(bins, weights=removed.astype(float), minlength=len(total))
    return {int(j): float(gone[j] / total[j]) for j in np.nonzero(total)[0]}
