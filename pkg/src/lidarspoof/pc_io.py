"""
Readers and writers for point clouds, detections and removal profiles.

Formats
-------
``.bin``
    Packed little-endian float32 quadruples ``(x, y, z, intensity)``.
``.pcd``
    ASCII PCD restricted to ``FIELDS x y z intensity``.
detections
    UTF-8 JSON list of ``{"center", "dims", "yaw", "score", "label"}``
    objects (see ``docs/detections.schema.json``).
removal profile
    Two-column CSV ``azimuth_deg,probability``; ``#`` starts a comment.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from .errors import FormatError, InvalidArgument, ValidationError
from .evaluation import OrientedBox
from .geometry import PointCloud

PathLike = Union[str, Path]

_BIN_DTYPE = np.dtype("<f4")


def _finalize(xyz: np.ndarray, intensity: np.ndarray, rescale, source) -> PointCloud:
    if not (np.all(np.isfinite(xyz)) and np.all(np.isfinite(intensity))):
        raise FormatError(f"{source}: non-finite value")
    rescaled = False
    if rescale == "auto":
        rescale = intensity.size > 0 and intensity.min() >= 0 and intensity.max() <= 1.0
    if rescale:
        intensity = intensity * 255.0
        rescaled = True
    if intensity.size and (intensity.min() < 0 or intensity.max() > 255):
        raise FormatError(f"{source}: intensity outside [0, 255]")
    return PointCloud(xyz, intensity, metadata={"intensity_rescaled": rescaled})


def read_bin(path: PathLike, rescale_intensity="auto") -> PointCloud:
    """Read a KITTI-style ``.bin`` frame.

    With ``rescale_intensity="auto"`` a file whose intensities all lie in
    [0, 1] is treated as normalized and scaled up to [0, 255];
    ``metadata["intensity_rescaled"]`` records whether that happened.
    """
    raw = Path(path).read_bytes()
    if len(raw) % 16:
        raise FormatError(f"{path}: length {len(raw)} is not a multiple of 16 bytes")
    arr = np.frombuffer(raw, dtype=_BIN_DTYPE).reshape(-1, 4).astype(np.float64)
    return _finalize(arr[:, :3], arr[:, 3], rescale_intensity, path)


def write_bin(cloud: PointCloud, path: PathLike) -> None:
    """Write ``cloud`` as packed float32; coordinates are rounded to float32."""
    arr = np.empty((len(cloud), 4), dtype=_BIN_DTYPE)
    arr[:, :3] = cloud.xyz
    arr[:, 3] = cloud.intensity
    Path(path).write_bytes(arr.tobytes())


_PCD_FIELDS = ("x", "y", "z", "intensity")


def read_pcd_ascii(path: PathLike) -> PointCloud:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8 text") from exc
    lines = text.splitlines()
    header = {}
    body_start = None
    for i, line in enumerate(lines):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        header[key.upper()] = rest.split()
        if key.upper() == "DATA":
            body_start = i + 1
            break
    if body_start is None:
        raise FormatError(f"{path}: missing DATA line")
    if header["DATA"] != ["ascii"]:
        raise FormatError(f"{path}: only DATA ascii is supported")
    fields = header.get("FIELDS")
    if fields is None or sorted(fields) != sorted(_PCD_FIELDS):
        raise FormatError(f"{path}: FIELDS must be exactly x y z intensity, got {fields}")
    for key in ("COUNT",):
        if key in header and any(v != "1" for v in header[key]):
            raise FormatError(f"{path}: COUNT other than 1 unsupported")
    rows = [ln.split() for ln in lines[body_start:] if ln.strip()]
    if any(len(r) != 4 for r in rows):
        raise FormatError(f"{path}: every data row needs 4 values")
    try:
        data = np.array(rows, dtype=np.float64).reshape(-1, 4) if rows else np.zeros((0, 4))
    except ValueError as exc:
        raise FormatError(f"{path}: bad data row ({exc})") from exc
    if "POINTS" in header:
        try:
            declared = int(header["POINTS"][0])
        except (ValueError, IndexError) as exc:
            raise FormatError(f"{path}: bad POINTS line") from exc
        if declared != len(rows):
            raise FormatError(f"{path}: POINTS {declared} but {len(rows)} rows")
    order = [fields.index(f) for f in _PCD_FIELDS]
    data = data[:, order]
    return _finalize(data[:, :3], data[:, 3], False, path)


def write_pcd_ascii(cloud: PointCloud, path: PathLike, precision: int = 9) -> None:
    """ASCII PCD; ``precision`` is the number of significant digits per value."""
    n = len(cloud)
    buf = io.StringIO()
    buf.write("# .PCD v0.7 - Point Cloud Data file format\n")
    buf.write("VERSION 0.7\n")
    buf.write("FIELDS x y z intensity\n")
    buf.write("SIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\n")
    buf.write(f"WIDTH {n}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA ascii\n")
    fmt = f"%.{precision}g"
    data = np.column_stack([cloud.xyz, cloud.intensity])
    for row in data:
        buf.write(" ".join(fmt % v for v in row) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_cloud(path: PathLike) -> PointCloud:
    """Dispatch on the file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix == ".bin":
        return read_bin(path)
    if suffix == ".pcd":
        return read_pcd_ascii(path)
    raise FormatError(f"{path}: unknown point cloud suffix {suffix!r}")


def write_cloud(cloud: PointCloud, path: PathLike) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".bin":
        write_bin(cloud, path)
    elif suffix == ".pcd":
        write_pcd_ascii(cloud, path)
    else:
        raise FormatError(f"{path}: unknown point cloud suffix {suffix!r}")


@dataclass(frozen=True)
class DetectionRecord:
    box: OrientedBox
    score: float = 1.0
    label: str = "object"

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"score {self.score} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "center": list(self.box.center),
            "dims": list(self.box.dims),
            "yaw": self.box.yaw,
            "score": self.score,
            "label": self.label,
        }


def _floats(value, n, what):
    if not isinstance(value, list) or len(value) != n:
        raise FormatError(f"{what} must be a list of {n} numbers")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise FormatError(f"{what} must be numeric")
    return [float(v) for v in value]


def parse_detections(doc) -> List[DetectionRecord]:
    if not isinstance(doc, list):
        raise FormatError("detections document must be a JSON list")
    out = []
    for i, obj in enumerate(doc):
        if not isinstance(obj, dict):
            raise FormatError(f"record {i} is not an object")
        try:
            center = _floats(obj["center"], 3, "center")
            dims = _floats(obj["dims"], 3, "dims")
            yaw = obj.get("yaw", 0.0)
            score = obj.get("score", 1.0)
            label = obj.get("label", "object")
        except KeyError as exc:
            raise FormatError(f"record {i} lacks {exc}") from exc
        if not isinstance(yaw, (int, float)) or isinstance(yaw, bool):
            raise FormatError(f"record {i}: yaw must be a number")
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise FormatError(f"record {i}: score must be a number")
        if not isinstance(label, str):
            raise FormatError(f"record {i}: label must be a string")
        if not 0.0 <= score <= 1.0:
            raise ValidationError(f"record {i}: score {score} outside [0, 1]")
        try:
            box = OrientedBox(tuple(center), tuple(dims), float(yaw))
        except InvalidArgument as exc:
            raise ValidationError(f"record {i}: {exc}") from exc
        out.append(DetectionRecord(box, float(score), label))
    return out


def read_detections(path: PathLike) -> List[DetectionRecord]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError, RecursionError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return parse_detections(doc)


def dumps_detections(records: Sequence[DetectionRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2) + "\n"


def write_detections(records: Sequence[DetectionRecord], path: PathLike) -> None:
    Path(path).write_text(dumps_detections(records), encoding="utf-8")


class RemovalProfile:
    """Per-azimuth hit probability, linearly interpolated between samples.

    Azimuths must be strictly increasing and span at most 360 degrees; they
    may start below zero so a span can straddle the +x axis. Queries are
    wrapped into the sampled span; outside it the probability is 0. A
    single-row table is a constant over every azimuth.
    """

    def __init__(self, azimuths, probabilities):
        az = np.asarray(azimuths, dtype=float).reshape(-1)
        p = np.asarray(probabilities, dtype=float).reshape(-1)
        if az.size == 0 or az.size != p.size:
            raise ValidationError("profile needs matching, non-empty columns")
        if not (np.all(np.isfinite(az)) and np.all(np.isfinite(p))):
            raise ValidationError("profile values must be finite")
        if np.any(p < 0) or np.any(p > 1):
            raise ValidationError("probabilities must lie in [0, 1]")
        if np.any(np.diff(az) <= 0):
            raise ValidationError("azimuths must be strictly increasing")
        if az[-1] - az[0] > 360:
            raise ValidationError("profile spans more than 360 degrees")
        self.azimuths = az
        self.probabilities = p

    def __len__(self):
        return self.azimuths.size

    @property
    def constant(self) -> bool:
        return self.azimuths.size == 1

    @property
    def span(self):
        return float(self.azimuths[0]), float(self.azimuths[-1])

    def wrap(self, azimuth) -> np.ndarray:
        """Shift azimuths by multiples of 360 into ``[start, start + 360)``."""
        a0 = self.azimuths[0]
        return a0 + np.mod(np.asarray(azimuth, dtype=float) - a0, 360.0)

    def in_span(self, azimuth) -> np.ndarray:
        if self.constant:
            return np.ones(np.shape(azimuth), dtype=bool)
        return self.wrap(azimuth) <= self.azimuths[-1]

    def __call__(self, azimuth):
        azimuth = np.asarray(azimuth, dtype=float)
        if self.constant:
            return np.full(azimuth.shape, self.probabilities[0])
        w = self.wrap(azimuth)
        return np.where(w <= self.azimuths[-1], np.interp(w, self.azimuths, self.probabilities), 0.0)

    def scaled(self, factor: float) -> "RemovalProfile":
        return RemovalProfile(self.azimuths, np.clip(self.probabilities * factor, 0, 1))


def read_removal_profile(path: PathLike) -> RemovalProfile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8 text") from exc
    try:
        rows = list(csv.reader(io.StringIO(text)))
    except csv.Error as exc:
        raise FormatError(f"{path}: {exc}") from exc
    az, p = [], []
    for lineno, row in enumerate(rows, 1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if len(row) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 columns")
        try:
            a, q = float(row[0]), float(row[1])
        except ValueError:
            if not az and row[0].strip() == "azimuth_deg":
                continue  # header row
            raise FormatError(f"{path}:{lineno}: non-numeric value") from None
        az.append(a)
        p.append(q)
    if not az:
        raise FormatError(f"{path}: no profile rows")
    return RemovalProfile(az, p)


def write_removal_profile(profile: RemovalProfile, path: PathLike) -> None:
    lines = ["azimuth_deg,probability"]
    lines += [f"{a!r},{q!r}" for a, q in zip(profile.azimuths.tolist(), profile.probabilities.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
