"""
LiDAR profiles and the timing-randomization error model.

The nine built-in profiles carry the range envelope, field of view and
security features of the sensors studied, with randomization expressed
directly as a range error in meters.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Optional, Union

import numpy as np

from .errors import FormatError, InvalidArgument, ValidationError
from .geometry import DEFAULT_AZIMUTH_RESOLUTION

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class Generation(str, Enum):
    FIRST = "First"
    NEW = "New"


@dataclass(frozen=True)
class RandModel:
    """Range error induced by randomized laser firing.

    ``kind`` is ``"none"``, ``"gaussian"`` (``scale`` = sigma) or
    ``"uniform"`` (``scale`` = half width), all in meters.
    """

    kind: str = "none"
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "uniform"):
            raise InvalidArgument(f"unknown randomization kind {self.kind!r}")
        if self.scale < 0 or not math.isfinite(self.scale):
            raise InvalidArgument("randomization scale must be finite and >= 0")
        if self.kind == "none" and self.scale != 0:
            object.__setattr__(self, "scale", 0.0)

    @classmethod
    def none(cls) -> "RandModel":
        return cls("none", 0.0)

    @classmethod
    def gaussian(cls, sigma: float) -> "RandModel":
        return cls("gaussian", float(sigma))

    @classmethod
    def uniform(cls, half_width: float) -> "RandModel":
        return cls("uniform", float(half_width))

    @property
    def is_none(self) -> bool:
        return self.kind == "none"

    def __str__(self):
        if self.kind == "gaussian":
            return f"N(0,{self.scale:g})"
        if self.kind == "uniform":
            return f"U(-{self.scale:g},{self.scale:g})"
        return "none"


@dataclass(frozen=True)
class FiringIntervalDist:
    """Measured laser firing interval distribution, in microseconds."""

    kind: str
    a: float  # min_us (uniform) or mean_us (gaussian)
    b: float  # max_us (uniform) or std_us (gaussian)

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian"):
            raise InvalidArgument(f"unknown interval distribution {self.kind!r}")
        if self.a <= 0 or self.b <= 0:
            raise InvalidArgument("interval parameters must be positive")
        if self.kind == "uniform" and self.b <= self.a:
            raise InvalidArgument("max_us must exceed min_us")

    def range_error_model(self) -> RandModel:
        """Convert the interval spread to a range error.

        Uniform intervals map to half the interval span, Gaussian ones to
        the interval std, each turned into meters with the round-trip rule.
        """
        if self.kind == "uniform":
            return RandModel.uniform(interval_to_distance((self.b - self.a) / 2 * 1e-6))
        return RandModel.gaussian(interval_to_distance(self.b * 1e-6))


@dataclass(frozen=True)
class LidarProfile:
    name: str
    generation: Generation
    mot: float
    max_range: float
    vertical_fov: float
    horizontal_fov: float
    channels: Optional[int]
    rand_model: RandModel = field(default_factory=RandModel.none)
    fingerprint: bool = False
    azimuth_resolution: float = DEFAULT_AZIMUTH_RESOLUTION
    simultaneous_firing: int = 1
    firing_interval: Optional[FiringIntervalDist] = None

    def __post_init__(self):
        if not self.max_range > self.mot >= 0:
            raise ValidationError(f"{self.name}: need max_range > mot >= 0")
        if not 0 < self.horizontal_fov <= 360:
            raise ValidationError(f"{self.name}: horizontal_fov outside (0, 360]")
        if not 0 < self.vertical_fov <= 180:
            raise ValidationError(f"{self.name}: vertical_fov outside (0, 180]")
        if self.azimuth_resolution <= 0:
            raise ValidationError(f"{self.name}: azimuth_resolution must be positive")

    @property
    def randomized(self) -> bool:
        return not self.rand_model.is_none

    def to_dict(self) -> dict:
        d = asdict(self)
        d["generation"] = self.generation.value
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "LidarProfile":
        try:
            d = dict(d)
            d["generation"] = Generation(d["generation"])
            d["rand_model"] = RandModel(**d.get("rand_model") or {})
            if d.get("firing_interval"):
                d["firing_interval"] = FiringIntervalDist(**d["firing_interval"])
            return cls(**d)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise FormatError(f"bad profile entry: {exc}") from exc


def _builtin() -> dict:
    U, N = RandModel.uniform, RandModel.gaussian
    first, new = Generation.FIRST, Generation.NEW
    profiles = [
        LidarProfile("VLP-16", first, 1.0, 100.0, 30.0, 360.0, 16, simultaneous_firing=1),
        LidarProfile("VLP-32c", first, 1.0, 200.0, 40.0, 360.0, 32, simultaneous_firing=2),
        LidarProfile("VLS-128", first, 0.5, 300.0, 40.0, 360.0, 128, simultaneous_firing=8),
        LidarProfile("Pixell", new, 0.1, 56.0, 16.0, 180.0, 8, U(191.0), simultaneous_firing=3,
                     firing_interval=FiringIntervalDist("uniform", 4.5, 5.8)),
        LidarProfile("OS1-32", new, 0.3, 120.0, 45.0, 360.0, 32, U(58.0), simultaneous_firing=32,
                     firing_interval=FiringIntervalDist("uniform", 1.4, 1.8)),
        LidarProfile("L515", new, 0.25, 9.0, 55.0, 70.0, None, N(7.5), simultaneous_firing=1,
                     firing_interval=FiringIntervalDist("gaussian", 51.0, 0.025)),
        LidarProfile("Horizon", new, 0.5, 260.0, 25.1, 81.7, None, U(45.0), simultaneous_firing=1,
                     firing_interval=FiringIntervalDist("uniform", 4.0, 4.3)),
        LidarProfile("XT32", new, 0.0, 120.0, 31.0, 360.0, 32, fingerprint=True, simultaneous_firing=1),
        LidarProfile("Helios", new, 0.2, 150.0, 70.0, 360.0, 32, N(1.5), simultaneous_firing=1,
                     firing_interval=FiringIntervalDist("gaussian", 1.6, 0.005)),
    ]
    return {p.name: p for p in profiles}


_BUILTIN = MappingProxyType(_builtin())


def builtin_profiles() -> Mapping[str, LidarProfile]:
    """Read-only mapping of the nine studied LiDARs."""
    return _BUILTIN


def load_profiles(path: Union[str, Path], base: Optional[Mapping[str, LidarProfile]] = None) -> Mapping[str, LidarProfile]:
    """Load profiles from a JSON document, layered over ``base``.

    The document is an object mapping profile name to its fields. Entries
    may omit fields, in which case they are taken from the profile of the
    same name in ``base`` (the built-ins by default).
    """
    base = builtin_profiles() if base is None else base
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top level must be an object")
    out = dict(base)
    for name, fields in doc.items():
        if not isinstance(fields, dict):
            raise FormatError(f"{path}: entry {name!r} must be an object")
        merged = out[name].to_dict() if name in out else {}
        merged.update(fields)
        merged["name"] = name
        out[name] = LidarProfile.from_dict(merged)
    return MappingProxyType(out)


def dump_profiles(profiles: Mapping[str, LidarProfile], path: Union[str, Path]) -> None:
    doc = {name: {k: v for k, v in p.to_dict().items() if k != "name"} for name, p in profiles.items()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def interval_to_distance(dt: float) -> float:
    """Range offset in meters produced by a timing offset ``dt`` seconds."""
    if dt < 0:
        raise InvalidArgument("timing difference must be >= 0")
    return dt * SPEED_OF_LIGHT / 2.0


def sample_delta_rand(model: RandModel, rng: np.random.Generator, size=None):
    """Draw the randomization range error for ``size`` points."""
    if model.kind == "gaussian":
        return rng.normal(0.0, model.scale, size)
    if model.kind == "uniform":
        return rng.uniform(-model.scale, model.scale, size)
    return 0.0 if size is None else np.zeros(size)
