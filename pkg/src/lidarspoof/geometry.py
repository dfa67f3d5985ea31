"""
Point and point-cloud containers plus the coordinate helpers every attack
model relies on.

Conventions: the sensor sits at the origin, +x forward, +y left, +z up.
Azimuth is measured counterclockwise from +x toward +y in [0, 360) degrees;
altitude is the elevation above the xy-plane in [-90, 90] degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DegenerateRay, InvalidArgument, InvalidResolution

DEFAULT_AZIMUTH_RESOLUTION = 0.1  # degrees, one VLP-16 firing step


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    z: float
    intensity: float = 0.0
    altitude_index: Optional[int] = None
    azimuth_index: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.intensity <= 255.0:
            raise InvalidArgument(f"intensity {self.intensity} outside [0, 255]")

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class SphericalCoord:
    range: float
    azimuth: float
    altitude: float

    def __post_init__(self):
        if self.range < 0:
            raise InvalidArgument("range must be >= 0")


def _optional_index(arr, n, name):
    if arr is None:
        return None
    arr = np.asarray(arr, dtype=np.int64).reshape(-1)
    if arr.shape[0] != n:
        raise InvalidArgument(f"{name} has {arr.shape[0]} entries, expected {n}")
    if np.any(arr < 0):
        raise InvalidArgument(f"{name} must be non-negative")
    return arr


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered frame of points stored column-wise.

    ``xyz`` is an (N, 3) float64 array, ``intensity`` an (N,) array on the
    0-255 scale. Channel indices are optional (N,) integer arrays.
    Operations that drop points always preserve the relative order of the
    survivors.
    """

    xyz: np.ndarray
    intensity: np.ndarray = None
    altitude_index: Optional[np.ndarray] = None
    azimuth_index: Optional[np.ndarray] = None
    frame_id: int = 0
    azimuth_resolution: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=np.float64)
        if xyz.size == 0:
            xyz = xyz.reshape(0, 3)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise InvalidArgument(f"xyz must have shape (N, 3), got {xyz.shape}")
        n = xyz.shape[0]
        if self.intensity is None:
            intensity = np.zeros(n)
        else:
            intensity = np.asarray(self.intensity, dtype=np.float64).reshape(-1)
        if intensity.shape[0] != n:
            raise InvalidArgument("intensity length does not match xyz")
        if n and (intensity.min() < 0 or intensity.max() > 255):
            raise InvalidArgument("intensity must lie in [0, 255]")
        if self.frame_id < 0:
            raise InvalidArgument("frame_id must be >= 0")
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "intensity", intensity)
        object.__setattr__(self, "altitude_index", _optional_index(self.altitude_index, n, "altitude_index"))
        object.__setattr__(self, "azimuth_index", _optional_index(self.azimuth_index, n, "azimuth_index"))

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def __getitem__(self, i: int) -> Point:
        x, y, z = self.xyz[i]
        return Point(
            float(x), float(y), float(z), float(self.intensity[i]),
            None if self.altitude_index is None else int(self.altitude_index[i]),
            None if self.azimuth_index is None else int(self.azimuth_index[i]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def empty(cls, frame_id: int = 0) -> "PointCloud":
        return cls(np.zeros((0, 3)), frame_id=frame_id)

    @classmethod
    def from_points(cls, points: Sequence[Point], frame_id: int = 0) -> "PointCloud":
        points = list(points)
        xyz = np.array([[p.x, p.y, p.z] for p in points], dtype=float).reshape(-1, 3)
        inten = np.array([p.intensity for p in points], dtype=float)
        alt = azi = None
        if points and all(p.altitude_index is not None for p in points):
            alt = [p.altitude_index for p in points]
        if points and all(p.azimuth_index is not None for p in points):
            azi = [p.azimuth_index for p in points]
        return cls(xyz, inten, alt, azi, frame_id=frame_id)

    def select(self, mask_or_index) -> "PointCloud":
        """Subset by boolean mask or sorted integer index, keeping order."""
        idx = np.asarray(mask_or_index)
        if idx.dtype != bool:
            idx = np.sort(idx.astype(np.int64))
        return replace(
            self,
            xyz=self.xyz[idx],
            intensity=self.intensity[idx],
            altitude_index=None if self.altitude_index is None else self.altitude_index[idx],
            azimuth_index=None if self.azimuth_index is None else self.azimuth_index[idx],
            metadata=dict(self.metadata),
        )

    def with_xyz(self, xyz, intensity=None) -> "PointCloud":
        return replace(
            self,
            xyz=xyz,
            intensity=self.intensity if intensity is None else intensity,
            metadata=dict(self.metadata),
        )

    def ranges(self) -> np.ndarray:
        return np.linalg.norm(self.xyz, axis=1)

    def azimuths(self) -> np.ndarray:
        return azimuth_deg(self.xyz)

    def equals(self, other: "PointCloud") -> bool:
        """Bit-exact equality on coordinates and intensity."""
        return (
            len(self) == len(other)
            and np.array_equal(self.xyz, other.xyz)
            and np.array_equal(self.intensity, other.intensity)
        )


def concatenate(clouds: Sequence[PointCloud], frame_id: int = 0) -> PointCloud:
    clouds = [c for c in clouds]
    if not clouds:
        return PointCloud.empty(frame_id)
    xyz = np.concatenate([c.xyz for c in clouds])
    inten = np.concatenate([c.intensity for c in clouds])
    alt = azi = None
    if all(c.altitude_index is not None for c in clouds):
        alt = np.concatenate([c.altitude_index for c in clouds])
    if all(c.azimuth_index is not None for c in clouds):
        azi = np.concatenate([c.azimuth_index for c in clouds])
    res = {c.azimuth_resolution for c in clouds if c.azimuth_resolution is not None}
    return PointCloud(xyz, inten, alt, azi, frame_id=frame_id,
                      azimuth_resolution=res.pop() if len(res) == 1 else None)


def _as_xyz(p: Union[Point, Sequence[float], np.ndarray]) -> np.ndarray:
    if isinstance(p, Point):
        return p.xyz
    return np.asarray(p, dtype=float)


def ray_direction(p) -> np.ndarray:
    """Unit vector from the sensor toward ``p``.

    Accepts a single point (Point or 3-sequence) or an (N, 3) array.

    Raises:
        DegenerateRay: if any input has zero norm.
    """
    xyz = _as_xyz(p)
    norm = np.linalg.norm(xyz, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DegenerateRay("zero-norm point has no ray direction")
    return xyz / norm


def azimuth_deg(xyz: np.ndarray) -> np.ndarray:
    xyz = np.asarray(xyz, dtype=float)
    az = np.degrees(np.arctan2(xyz[..., 1], xyz[..., 0]))
    az = np.where(az < 0, az + 360.0, az)
    # -tiny + 360 rounds to 360.0
    return np.where(az >= 360.0, 0.0, az)


def to_spherical(p) -> SphericalCoord:
    x, y, z = _as_xyz(p)
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0:
        return SphericalCoord(0.0, 0.0, 0.0)
    alt = math.degrees(math.atan2(z, math.hypot(x, y)))
    return SphericalCoord(r, float(azimuth_deg(np.array([x, y, z]))), alt)


def from_spherical(s: SphericalCoord) -> Point:
    az = math.radians(s.azimuth)
    alt = math.radians(s.altitude)
    horiz = s.range * math.cos(alt)
    return Point(horiz * math.cos(az), horiz * math.sin(az), s.range * math.sin(alt))


def to_spherical_array(xyz: np.ndarray) -> np.ndarray:
    """Vectorized form of :func:`to_spherical`; columns are (range, azimuth, altitude)."""
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    r = np.linalg.norm(xyz, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        alt = np.degrees(np.arctan2(xyz[:, 2], np.hypot(xyz[:, 0], xyz[:, 1])))
    az = np.where(r > 0, azimuth_deg(xyz), 0.0)
    return np.column_stack([r, az, alt])


def from_spherical_array(sph: np.ndarray) -> np.ndarray:
    sph = np.asarray(sph, dtype=float).reshape(-1, 3)
    r, az, alt = sph[:, 0], np.radians(sph[:, 1]), np.radians(sph[:, 2])
    horiz = r * np.cos(alt)
    return np.column_stack([horiz * np.cos(az), horiz * np.sin(az), r * np.sin(alt)])


def azimuth_bin(azimuth, resolution: float = DEFAULT_AZIMUTH_RESOLUTION) -> np.ndarray:
    if not resolution > 0:
        raise InvalidResolution(f"resolution must be positive, got {resolution}")
    nbins = math.ceil(360.0 / resolution)
    idx = np.floor(np.asarray(azimuth, dtype=float) / resolution).astype(np.int64)
    return np.clip(idx, 0, nbins - 1)


def bin_center(index, resolution: float) -> np.ndarray:
    return (np.asarray(index, dtype=float) + 0.5) * resolution


def assign_azimuth_bins(cloud: PointCloud, resolution: float = DEFAULT_AZIMUTH_RESOLUTION) -> PointCloud:
    """Return a copy of ``cloud`` with ``azimuth_index = floor(azimuth / resolution)``."""
    idx = azimuth_bin(cloud.azimuths(), resolution)
    return replace(cloud, azimuth_index=idx, azimuth_resolution=float(resolution),
                   metadata=dict(cloud.metadata))


def point_line_cross(displacement: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Norm of the cross product, used for collinearity checks."""
    return np.linalg.norm(np.cross(displacement, direction), axis=-1)


def azimuth_span(xyz: np.ndarray, margin: float = 0.0) -> tuple:
    """Smallest azimuth arc ``(start, end)`` covering the given points.

    ``start`` may be negative when the arc straddles the +x axis, so
    ``end - start`` is always the arc width.
    """
    az = np.sort(azimuth_deg(np.asarray(xyz, dtype=float).reshape(-1, 3)))
    if az.size == 0:
        raise InvalidArgument("cannot take the span of no points")
    gaps = np.diff(np.concatenate([az, [az[0] + 360.0]]))
    k = int(np.argmax(gaps))
    start = az[(k + 1) % az.size]
    end = az[k]
    if end < start:
        start -= 360.0
    start, end = start - margin, end + margin
    if end - start >= 360.0:
        return 0.0, 360.0
    return float(start), float(end)


def in_azimuth_span(azimuth, span: tuple) -> np.ndarray:
    start, end = span
    wrapped = start + np.mod(np.asarray(azimuth, dtype=float) - start, 360.0)
    return wrapped <= end
