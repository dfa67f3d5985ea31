"""
Chosen-pattern point injection.

Each spoofed point can only slide along its own laser ray, so every error
source is a signed range offset applied along ``x / ||x||``:

    y = x + (delta_rand + delta_inner + delta_inter) * x / ||x||

``delta_rand`` (timing randomization) and ``delta_inner`` are drawn per
point, ``delta_inter`` once per injected frame. Pulse fingerprinting is
modelled by first keeping only a random ``n``-subset of the pattern.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import InvalidArgument
from .geometry import DEFAULT_AZIMUTH_RESOLUTION, PointCloud, azimuth_bin, concatenate, ray_direction
from .profiles import RandModel, sample_delta_rand

INNER_FRAME_SIGMA = 0.10  # m
INTER_FRAME_SIGMA = 0.35  # m
SPOOFED_INTENSITY = 255.0

# forward, left, up offsets of the Frustum-attack error model, meters
FRUSTUM_MEANS = (1.0, 0.0, 1.0)
FRUSTUM_STDS = (0.1, 0.5, 0.2)


@dataclass(frozen=True)
class InjectionSpec:
    pattern: PointCloud
    downsample_n: Optional[int] = None
    inner_sigma: float = INNER_FRAME_SIGMA
    inter_sigma: float = INTER_FRAME_SIGMA
    rand_model: RandModel = field(default_factory=RandModel.none)
    spoofed_intensity: float = SPOOFED_INTENSITY
    seed: int = 0
    inner_sigma_by_altitude: Optional[Mapping[int, float]] = None

    def __post_init__(self):
        if self.inner_sigma < 0 or self.inter_sigma < 0:
            raise InvalidArgument("error sigmas must be >= 0")
        if self.downsample_n is not None and not 0 <= self.downsample_n <= len(self.pattern):
            raise InvalidArgument(
                f"downsample_n={self.downsample_n} outside [0, {len(self.pattern)}]"
            )
        if not 0 <= self.spoofed_intensity <= 255:
            raise InvalidArgument("spoofed_intensity must lie in [0, 255]")


def _streams(seed: int):
    """Independent generators for (downsample, rand, inner, inter)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]


def downsample_pattern(pattern: PointCloud, n: int, rng: np.random.Generator) -> PointCloud:
    """Uniformly random ``n``-subset of ``pattern`` in original order."""
    if not 0 <= n <= len(pattern):
        raise InvalidArgument(f"cannot keep {n} of {len(pattern)} points")
    if n == len(pattern):
        return pattern
    keep = rng.choice(len(pattern), size=n, replace=False)
    return pattern.select(np.sort(keep))


def displace_along_rays(xyz: np.ndarray, offsets) -> tuple:
    """Move each point by a signed range offset along its ray.

    Returns ``(moved, keep)`` where ``keep`` flags points whose new range
    stays positive; the caller drops the rest.
    """
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    g = ray_direction(xyz) if len(xyz) else xyz
    offsets = np.broadcast_to(np.asarray(offsets, dtype=float), (len(xyz),))
    moved = xyz + offsets[:, None] * g
    keep = np.linalg.norm(xyz, axis=1) + offsets > 0
    return moved, keep


def inject_with_draws(pattern: PointCloud, delta_rand, delta_inner, delta_inter: float,
                      spoofed_intensity: float = SPOOFED_INTENSITY) -> PointCloud:
    """Apply the injection model with caller-supplied error draws."""
    total = np.asarray(delta_rand, dtype=float) + np.asarray(delta_inner, dtype=float) + float(delta_inter)
    moved, keep = displace_along_rays(pattern.xyz, total)
    out = pattern.with_xyz(moved, np.full(len(pattern), float(spoofed_intensity)))
    return out if keep.all() else out.select(keep)


def _inner_sigmas(spec: InjectionSpec, pattern: PointCloud) -> np.ndarray:
    sig = np.full(len(pattern), spec.inner_sigma)
    if spec.inner_sigma_by_altitude:
        if pattern.altitude_index is None:
            raise InvalidArgument("per-altitude inner sigma needs altitude indices on the pattern")
        for alt, s in spec.inner_sigma_by_altitude.items():
            if s < 0:
                raise InvalidArgument("inner sigma must be >= 0")
            sig[pattern.altitude_index == int(alt)] = s
    return sig


def apply_injection(spec: InjectionSpec) -> PointCloud:
    """Spoofed point cloud produced by injecting ``spec.pattern``.

    Deterministic for a given ``spec.seed``. Points pushed to a
    non-positive range are dropped.
    """
    r_down, r_rand, r_inner, r_inter = _streams(spec.seed)
    pattern = spec.pattern
    if spec.downsample_n is not None:
        pattern = downsample_pattern(pattern, spec.downsample_n, r_down)
    n = len(pattern)
    d_rand = sample_delta_rand(spec.rand_model, r_rand, n)
    d_inner = r_inner.normal(0.0, 1.0, n) * _inner_sigmas(spec, pattern)
    d_inter = r_inter.normal(0.0, spec.inter_sigma)
    return inject_with_draws(pattern, d_rand, d_inner, d_inter, spec.spoofed_intensity)


def apply_frustum_error(
    pattern: PointCloud,
    rng: Optional[np.random.Generator] = None,
    frame: Optional[np.ndarray] = None,
    means: Sequence[float] = FRUSTUM_MEANS,
    stds: Sequence[float] = FRUSTUM_STDS,
    draws: Optional[np.ndarray] = None,
) -> PointCloud:
    """Comparison error model: independent Gaussian offsets per Cartesian axis.

    ``frame`` holds the forward, left and up unit vectors as rows
    (sensor axes by default). ``draws`` short-circuits sampling with an
    (N, 3) or (3,) array of forward/left/up offsets.
    """
    frame = np.eye(3) if frame is None else np.asarray(frame, dtype=float)
    if frame.shape != (3, 3):
        raise InvalidArgument("frame must be a 3x3 matrix of row vectors")
    n = len(pattern)
    if draws is None:
        if rng is None:
            raise InvalidArgument("rng is required unless draws are given")
        draws = rng.normal(np.asarray(means, float), np.asarray(stds, float), size=(n, 3))
    draws = np.broadcast_to(np.asarray(draws, dtype=float), (n, 3))
    return pattern.with_xyz(pattern.xyz + draws @ frame)


def merge_into_scene(scene: PointCloud, spoofed: PointCloud, policy: str = "replace",
                     resolution: Optional[float] = None) -> PointCloud:
    """Compose spoofed returns with a background frame.

    ``"replace"`` first drops every scene point sharing an azimuth bin with
    a spoofed point, since the attack pulse overrides the legitimate echo
    at that firing; ``"append"`` is a plain union.
    """
    if policy not in ("replace", "append"):
        raise InvalidArgument(f"unknown merge policy {policy!r}")
    if len(spoofed) == 0:
        return scene
    if len(scene) == 0:
        return spoofed
    if policy == "replace" and len(scene):
        res = resolution or spoofed.azimuth_resolution or DEFAULT_AZIMUTH_RESOLUTION
        hit = np.unique(azimuth_bin(spoofed.azimuths(), res))
        scene = scene.select(~np.isin(azimuth_bin(scene.azimuths(), res), hit))
    return concatenate([scene, spoofed], frame_id=scene.frame_id)
