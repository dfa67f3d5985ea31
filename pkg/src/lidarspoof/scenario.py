"""
Evaluation scenarios: a single target object placed ahead of the victim
sensor, realized by pulling existing background returns onto the object
surface wherever the object occludes them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import FormatError, InvalidArgument, InvalidModel
from .evaluation import OrientedBox
from .geometry import PointCloud, azimuth_bin

SENSOR_HEIGHT = 1.73  # m, KITTI Velodyne mounting height
VEHICLE_DIMS = (4.5, 1.8, 1.5)  # length, width, height in m
_MIN_TRIANGLE_AREA = 1e-12


def _rot(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class ObjectModel:
    """A rigid target, either a triangle mesh or a box primitive.

    ``triangles`` is an (M, 3, 3) array in the object frame; a box
    primitive is centered on the object-frame origin with ``dims``
    (length along x, width along y, height along z).
    """

    triangles: Optional[np.ndarray] = None
    dims: Optional[tuple] = None
    center: tuple = (0.0, 0.0, 0.0)
    yaw: float = 0.0

    def __post_init__(self):
        if (self.triangles is None) == (self.dims is None):
            raise InvalidModel("give exactly one of triangles or dims")
        if self.dims is not None:
            dims = tuple(float(d) for d in self.dims)
            if len(dims) != 3 or not all(d > 0 for d in dims):
                raise InvalidModel(f"box dims must be three positive numbers, got {self.dims}")
            object.__setattr__(self, "dims", dims)
        else:
            tri = np.asarray(self.triangles, dtype=float)
            if tri.ndim != 3 or tri.shape[1:] != (3, 3) or tri.shape[0] == 0:
                raise InvalidModel("triangles must have shape (M, 3, 3) with M > 0")
            if not np.all(np.isfinite(tri)):
                raise InvalidModel("triangle vertices must be finite")
            area = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
            if np.any(area <= _MIN_TRIANGLE_AREA):
                raise InvalidModel(f"{int(np.sum(area <= _MIN_TRIANGLE_AREA))} degenerate triangle(s)")
            object.__setattr__(self, "triangles", tri)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "yaw", float(self.yaw))

    @classmethod
    def box(cls, dims=VEHICLE_DIMS, center=(0.0, 0.0, 0.0), yaw=0.0) -> "ObjectModel":
        return cls(dims=tuple(dims), center=tuple(center), yaw=yaw)

    @property
    def is_box(self) -> bool:
        return self.dims is not None

    def local_vertices(self) -> np.ndarray:
        if self.is_box:
            h = np.array(self.dims) / 2
            signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
            return signs * h
        return self.triangles.reshape(-1, 3)

    def world_vertices(self) -> np.ndarray:
        return self.local_vertices() @ _rot(self.yaw).T + np.array(self.center)

    def to_local(self, xyz: np.ndarray) -> np.ndarray:
        return (np.asarray(xyz, dtype=float) - np.array(self.center)) @ _rot(self.yaw)

    def with_center(self, center) -> "ObjectModel":
        return replace(self, center=tuple(float(c) for c in center))

    def placed_at(self, distance: float, nose_offset: float = 0.0) -> "ObjectModel":
        """Slide along x so the rearmost point sits ``distance`` ahead of the nose."""
        if distance < 0:
            raise InvalidArgument("distance must be >= 0")
        rear = self.world_vertices()[:, 0].min()
        cx = self.center[0] + (distance + nose_offset - rear)
        return self.with_center((cx, self.center[1], self.center[2]))

    def gt_box(self) -> OrientedBox:
        if self.is_box:
            return OrientedBox(self.center, self.dims, self.yaw)
        v = self.local_vertices()
        lo, hi = v.min(axis=0), v.max(axis=0)
        mid = (lo + hi) / 2 @ _rot(self.yaw).T + np.array(self.center)
        dims = np.maximum(hi - lo, 1e-6)
        return OrientedBox(tuple(mid), tuple(dims), self.yaw)


def vehicle_box(dims=VEHICLE_DIMS, sensor_height: float = SENSOR_HEIGHT, lateral: float = 0.0) -> ObjectModel:
    """Box vehicle resting on the ground plane below the sensor."""
    return ObjectModel.box(dims, center=(dims[0] / 2, lateral, -sensor_height + dims[2] / 2))


@dataclass(frozen=True, eq=False)
class Scenario:
    cloud: PointCloud
    gt_box: OrientedBox
    distance: float
    object_mask: np.ndarray
    model: ObjectModel

    @property
    def object_points(self) -> PointCloud:
        return self.cloud.select(self.object_mask)

    @property
    def background(self) -> PointCloud:
        """The scene with the object's returns taken out."""
        return self.cloud.select(~self.object_mask)


def _box_first_hit(model: ObjectModel, dirs: np.ndarray) -> np.ndarray:
    """Slab test; returns first-hit distance per ray or +inf."""
    R = _rot(model.yaw)
    o = -np.array(model.center) @ R  # sensor origin in the box frame
    d = dirs @ R
    h = np.array(model.dims) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-h - o) / d
        t2 = (h - o) / d
    lo = np.where(d == 0, np.where(np.abs(o) <= h, -np.inf, np.inf), np.minimum(t1, t2))
    hi = np.where(d == 0, np.where(np.abs(o) <= h, np.inf, -np.inf), np.maximum(t1, t2))
    tnear = lo.max(axis=1)
    tfar = hi.min(axis=1)
    hit = (tnear <= tfar) & (tfar >= 0)
    t = np.where(tnear >= 0, tnear, tfar)
    return np.where(hit, t, np.inf)


def _mesh_first_hit(model: ObjectModel, dirs: np.ndarray, chunk: int = 2_000_000) -> np.ndarray:
    """Moller-Trumbore against every triangle; brute force, chunked over rays."""
    tri = model.triangles @ _rot(model.yaw).T + np.array(model.center)
    v0 = tri[:, 0]
    e1 = tri[:, 1] - v0
    e2 = tri[:, 2] - v0
    out = np.full(len(dirs), np.inf)
    step = max(1, chunk // len(tri))
    eps = 1e-12
    for s in range(0, len(dirs), step):
        d = dirs[s:s + step, None, :]
        p = np.cross(d, e2[None])
        det = np.einsum("ijk,jk->ij", p, e1)
        ok = np.abs(det) > eps
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = -v0[None]
        u = np.einsum("ijk,ijk->ij", np.broadcast_to(tvec, p.shape), p) * inv
        q = np.cross(np.broadcast_to(tvec, p.shape), e1[None])
        v = np.einsum("ijk,ijk->ij", np.broadcast_to(d, q.shape), q) * inv
        t = np.einsum("ijk,jk->ij", q, e2) * inv
        valid = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > eps)
        out[s:s + step] = np.where(valid, t, np.inf).min(axis=1)
    return out


def first_hit(model: ObjectModel, dirs: np.ndarray) -> np.ndarray:
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    if len(dirs) == 0:
        return np.zeros(0)
    return _box_first_hit(model, dirs) if model.is_box else _mesh_first_hit(model, dirs)


def place_object(background: PointCloud, model: ObjectModel, distance: Optional[float] = None,
                 nose_offset: float = 0.0) -> Scenario:
    """Insert ``model`` into ``background`` by occlusion.

    When ``distance`` is given the model is first slid along x so its rear
    face sits ``distance`` meters ahead of the sensor (plus
    ``nose_offset``); otherwise its pose is used as is. Every background
    point whose ray meets the object before reaching the point is moved to
    that first intersection.
    """
    if distance is not None:
        model = model.placed_at(distance, nose_offset)
    r = background.ranges()
    mask = np.zeros(len(background), dtype=bool)
    xyz = background.xyz.copy()
    valid = r > 0
    if valid.any():
        dirs = background.xyz[valid] / r[valid, None]
        t = first_hit(model, dirs)
        closer = t < r[valid]
        idx = np.nonzero(valid)[0][closer]
        xyz[idx] = dirs[closer] * t[closer, None]
        mask[idx] = True
    cloud = background.with_xyz(xyz)
    d = float(distance) if distance is not None else float(model.world_vertices()[:, 0].min() - nose_offset)
    return Scenario(cloud, model.gt_box(), d, mask, model)


def sweep_distances(d_min: float = 0.0, d_max: float = 14.0, step: float = 1.0) -> np.ndarray:
    if not step > 0:
        raise InvalidArgument("step must be positive")
    if d_max < d_min:
        raise InvalidArgument("d_max must be >= d_min")
    count = int(math.floor((d_max - d_min) / step + 1e-9)) + 1
    return d_min + step * np.arange(count)


def distance_sweep(background: PointCloud, model: ObjectModel, d_min: float = 0.0, d_max: float = 14.0,
                   step: float = 1.0, nose_offset: float = 0.0) -> List[Scenario]:
    """One scenario per distance in ``d_min, d_min + step, ..., <= d_max``."""
    return [place_object(background, model, float(d), nose_offset) for d in sweep_distances(d_min, d_max, step)]


def jitter_pose(model: ObjectModel, lateral_max: float = 1.0, longitudinal_max: float = 1.0,
                rng: Optional[np.random.Generator] = None) -> ObjectModel:
    if lateral_max < 0 or longitudinal_max < 0:
        raise InvalidArgument("jitter maxima must be >= 0")
    rng = rng if rng is not None else np.random.default_rng()
    dx = rng.uniform(-longitudinal_max, longitudinal_max) if longitudinal_max else 0.0
    dy = rng.uniform(-lateral_max, lateral_max) if lateral_max else 0.0
    cx, cy, cz = model.center
    return model.with_center((cx + dx, cy + dy, cz))


def synthetic_background(
    channels: int = 32,
    altitude_range: Sequence[float] = (-25.0, 5.0),
    azimuth_resolution: float = 0.2,
    azimuth_span: Optional[Sequence[float]] = None,
    sensor_height: float = SENSOR_HEIGHT,
    max_range: float = 120.0,
    wall_distance: Optional[float] = None,
    ground_intensity: float = 30.0,
    wall_intensity: float = 50.0,
) -> PointCloud:
    """Uniform ray grid against a flat ground and an optional wall ``x = wall_distance``.

    Rays are cast through azimuth-bin centers, so channel indices are
    exact. Rays with no return within ``max_range`` produce no point.
    """
    if channels < 1:
        raise InvalidArgument("need at least one channel")
    alts = np.linspace(altitude_range[0], altitude_range[1], channels)
    nbins = int(math.ceil(360.0 / azimuth_resolution))
    j = np.arange(nbins)
    az = (j + 0.5) * azimuth_resolution
    if azimuth_span is not None:
        start, end = azimuth_span
        keep = (start + np.mod(az - start, 360.0)) <= end
        j, az = j[keep], az[keep]
    A, J = np.meshgrid(np.radians(alts), j, indexing="ij")
    I = np.broadcast_to(np.arange(channels)[:, None], A.shape)
    AZ = np.radians(np.broadcast_to(az[None, :], A.shape))
    dirs = np.stack([np.cos(A) * np.cos(AZ), np.cos(A) * np.sin(AZ), np.sin(A)], axis=-1).reshape(-1, 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(dirs[:, 2] < 0, -sensor_height / dirs[:, 2], np.inf)
        t_wall = np.inf
        if wall_distance is not None:
            t_wall = np.where(dirs[:, 0] > 0, wall_distance / dirs[:, 0], np.inf)
    t = np.minimum(t_ground, t_wall)
    ok = t <= max_range
    inten = np.where(t_ground <= t_wall, ground_intensity, wall_intensity)
    return PointCloud(
        dirs[ok] * t[ok, None],
        inten[ok],
        altitude_index=I.reshape(-1)[ok],
        azimuth_index=J.reshape(-1)[ok],
        azimuth_resolution=azimuth_resolution,
    )


def surface_distance(model: ObjectModel, xyz: np.ndarray) -> np.ndarray:
    """Unsigned distance from each point to the object surface."""
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    if model.is_box:
        q = np.abs(model.to_local(xyz)) - np.array(model.dims) / 2
        outside = np.linalg.norm(np.maximum(q, 0), axis=1)
        inside = np.minimum(q.max(axis=1), 0)
        return np.abs(outside + inside)
    return _mesh_distance(model.triangles @ _rot(model.yaw).T + np.array(model.center), xyz)


def _mesh_distance(tri: np.ndarray, pts: np.ndarray) -> np.ndarray:
    # closest point on triangle, after Ericson's Real-Time Collision Detection
    a, b, c = tri[None, :, 0], tri[None, :, 1], tri[None, :, 2]
    out = np.empty(len(pts))
    for s in range(0, len(pts), 256):
        p = pts[s:s + 256, None, :]
        ab, ac, ap = b - a, c - a, p - a
        d1, d2 = (ab * ap).sum(-1), (ac * ap).sum(-1)
        bp = p - b
        d3, d4 = (ab * bp).sum(-1), (ac * bp).sum(-1)
        cp = p - c
        d5, d6 = (ab * cp).sum(-1), (ac * cp).sum(-1)
        va = d3 * d6 - d5 * d4
        vb = d5 * d2 - d1 * d6
        vc = d1 * d4 - d3 * d2
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = va + vb + vc
            v = vb / denom
            w = vc / denom
            closest = a + ab * v[..., None] + ac * w[..., None]
            # region tests in reverse priority so the highest-priority match is written last
            t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
            on_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
            closest = np.where(on_bc[..., None], b + (c - b) * t_bc[..., None], closest)
            t_ac = d2 / (d2 - d6)
            on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
            closest = np.where(on_ac[..., None], a + ac * t_ac[..., None], closest)
            closest = np.where(((d6 >= 0) & (d5 <= d6))[..., None], c, closest)
            t_ab = d1 / (d1 - d3)
            on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
            closest = np.where(on_ab[..., None], a + ab * t_ab[..., None], closest)
        closest = np.where(((d3 >= 0) & (d4 <= d3))[..., None], b, closest)
        closest = np.where(((d1 <= 0) & (d2 <= 0))[..., None], a, closest)
        out[s:s + 256] = np.linalg.norm(p - closest, axis=-1).min(axis=1)
    return out


def load_stl_ascii(path) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not an ASCII STL") from exc
    if not text.lstrip().lower().startswith("solid"):
        raise FormatError(f"{path}: ASCII STL must start with 'solid'")
    verts = []
    for line in text.splitlines():
        parts = line.split()
        if parts and parts[0].lower() == "vertex":
            if len(parts) != 4:
                raise FormatError(f"{path}: bad vertex line {line!r}")
            try:
                verts.append([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise FormatError(f"{path}: bad vertex line {line!r}") from exc
    if not verts or len(verts) % 3:
        raise FormatError(f"{path}: vertex count {len(verts)} is not a positive multiple of 3")
    return np.array(verts).reshape(-1, 3, 3)


def load_object_model(path) -> ObjectModel:
    """Read an ASCII STL mesh or a JSON box/mesh description."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix.lower() == ".stl":
        return ObjectModel(triangles=load_stl_ascii(path))
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: object model must be a JSON object")
    kind = doc.get("type", "box")
    try:
        if kind == "box":
            return ObjectModel(dims=tuple(doc["dims"]), center=tuple(doc.get("center", (0, 0, 0))),
                               yaw=float(doc.get("yaw", 0.0)))
        if kind == "mesh":
            return ObjectModel(triangles=np.asarray(doc["triangles"], dtype=float),
                               center=tuple(doc.get("center", (0, 0, 0))), yaw=float(doc.get("yaw", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidModel):
            raise
        raise FormatError(f"{path}: {exc}") from exc
    raise FormatError(f"{path}: unknown model type {kind!r}")


def write_ground_truth(scenario: Scenario, path) -> None:
    """Ground-truth sidecar in the detections schema (one record)."""
    from .pc_io import DetectionRecord, write_detections

    write_detections([DetectionRecord(scenario.gt_box, 1.0, "ground_truth")], path)


def object_azimuth_bins(scenario: Scenario, resolution: float) -> np.ndarray:
    return np.unique(azimuth_bin(scenario.object_points.azimuths(), resolution))
