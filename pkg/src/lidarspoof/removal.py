"""
Point removal by spoofing: synchronized physical removal (PRA) and
asynchronous high-frequency removal (HFR).

Every point in azimuth bin ``j`` is hit independently with probability
``p_j``. A hit point collapses onto its own ray at range ``xi``:
``xi = 0`` for PRA, ``xi ~ U(0, c / (2 f))`` for HFR with pulse frequency
``f``. The LiDAR then discards hit points closer than its minimum
operational threshold or farther than its maximum range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ApplicabilityError, InvalidArgument, PreconditionError
from .geometry import DEFAULT_AZIMUTH_RESOLUTION, PointCloud, bin_center, in_azimuth_span
from .pc_io import RemovalProfile
from .profiles import SPEED_OF_LIGHT, LidarProfile

DEFAULT_FREQUENCY_HZ = 1e6
SPOOFED_INTENSITY = 255.0
# most points ever spoofed through XT32's pulse fingerprinting in measurement
FINGERPRINT_COINCIDENCE_CAP = 113

NOT_APPLICABLE = "Attack is not applicable to the LiDAR"


def xi_max(frequency_hz: float) -> float:
    """Largest range an HFR pulse train can fake: ``c / (2 f)``."""
    if not frequency_hz > 0:
        raise InvalidArgument("frequency must be positive")
    return SPEED_OF_LIGHT / (2.0 * frequency_hz)


@dataclass(frozen=True)
class Plateau:
    """Flat ``p_center`` in the middle, linear falloff to 0 on both sides."""

    p_center: float = 0.97
    plateau_deg: Optional[float] = None  # default: 60 % of the span
    falloff_deg: Optional[float] = None  # default: 20 % of the span


@dataclass(frozen=True)
class FromTable:
    table: RemovalProfile


def _span_tuple(span) -> Tuple[float, float]:
    if isinstance(span, (int, float)):
        if not span > 0:
            raise InvalidArgument("span width must be positive")
        return -span / 2.0, span / 2.0
    start, end = (float(v) for v in span)
    if not end > start or end - start > 360:
        raise InvalidArgument(f"bad azimuth span {span!r}")
    return start, end


def build_removal_profile(shape: Union[Plateau, FromTable], span=None) -> RemovalProfile:
    """Per-azimuth hit probability over an attack span.

    ``span`` is either a width in degrees (centered on azimuth 0) or a
    ``(start, end)`` pair; ``start`` may be negative.
    """
    if isinstance(shape, FromTable):
        return shape.table
    start, end = _span_tuple(span)
    width = end - start
    plateau = 0.6 * width if shape.plateau_deg is None else float(shape.plateau_deg)
    falloff = 0.2 * width if shape.falloff_deg is None else float(shape.falloff_deg)
    if not 0 <= shape.p_center <= 1:
        raise InvalidArgument("p_center must lie in [0, 1]")
    if plateau < 0 or falloff < 0 or plateau + 2 * falloff > width * (1 + 1e-12):
        raise InvalidArgument("plateau + 2 * falloff must fit inside the span")
    c = (start + end) / 2.0
    p = shape.p_center
    knots = [
        (start, 0.0),
        (c - plateau / 2 - falloff, 0.0),
        (c - plateau / 2, p),
        (c + plateau / 2, p),
        (c + plateau / 2 + falloff, 0.0),
        (end, 0.0),
    ]
    if falloff == 0:
        # a vertical step needs two distinct abscissae
        knots[1] = (np.nextafter(knots[2][0], -np.inf), 0.0)
        knots[4] = (np.nextafter(knots[3][0], np.inf), 0.0)
    az, prob = [], []
    for a, q in knots:
        a = min(max(a, start), end)
        if az and a <= az[-1]:
            # coincident knot: the one nearer the center wins
            if q > prob[-1]:
                prob[-1] = q
            continue
        az.append(a)
        prob.append(q)
    if len(az) == 1:
        az.append(np.nextafter(az[0], np.inf))
        prob.append(prob[0])
    return RemovalProfile(az, prob)


@dataclass(frozen=True)
class RemovalSpec:
    kind: str = "HFR"  # "HFR" or "PRA"
    prob_profile: RemovalProfile = None
    frequency_hz: float = DEFAULT_FREQUENCY_HZ
    attack_span: Optional[Tuple[float, float]] = None
    seed: int = 0
    allow_inapplicable: bool = False
    fingerprint_cap: Optional[float] = FINGERPRINT_COINCIDENCE_CAP

    def __post_init__(self):
        if self.kind not in ("HFR", "PRA"):
            raise InvalidArgument(f"unknown removal kind {self.kind!r}")
        if self.kind == "HFR" and not self.frequency_hz > 0:
            raise InvalidArgument("HFR frequency must be positive")
        if self.prob_profile is None:
            raise InvalidArgument("a removal probability profile is required")
        if self.attack_span is not None:
            object.__setattr__(self, "attack_span", _span_tuple(self.attack_span))


@dataclass(frozen=True)
class RemovalOutcome:
    surviving: PointCloud
    removed_count: int
    noise_count: int  # hit points that survived at a random position
    hit_count: int
    hit_mask: np.ndarray  # over the input cloud
    removed_mask: np.ndarray  # over the input cloud


def check_applicability(kind: str, profile: LidarProfile) -> None:
    """Refuse PRA against LiDARs it cannot synchronize with."""
    if kind == "PRA" and (profile.randomized or profile.fingerprint):
        feature = "timing randomization" if profile.randomized else "pulse fingerprinting"
        raise ApplicabilityError(f"{NOT_APPLICABLE} {profile.name}: PRA needs synchronization, "
                                 f"defeated by {feature}")


def hit_probabilities(cloud: PointCloud, spec: RemovalSpec, profile: LidarProfile) -> np.ndarray:
    """Per-point ``p_j`` after span restriction and fingerprint capping."""
    if cloud.azimuth_index is None:
        raise PreconditionError("cloud has no azimuth bins; run assign_azimuth_bins first")
    res = cloud.azimuth_resolution or profile.azimuth_resolution or DEFAULT_AZIMUTH_RESOLUTION
    centers = bin_center(cloud.azimuth_index, res)
    p = np.asarray(spec.prob_profile(centers), dtype=float)
    if spec.attack_span is not None:
        p = np.where(in_azimuth_span(centers, spec.attack_span), p, 0.0)
    if spec.kind == "HFR" and profile.fingerprint and spec.fingerprint_cap is not None:
        expected = p.sum()
        if expected > spec.fingerprint_cap:
            p = p * (spec.fingerprint_cap / expected)
    return p


def apply_removal(cloud: PointCloud, spec: RemovalSpec, profile: LidarProfile) -> RemovalOutcome:
    """Apply the removal model to a binned cloud.

    Unhit points are returned untouched. Hit points that stay inside the
    sensing envelope (``mot <= r <= max_range``) remain as noise at their
    new range, tagged with the attack intensity.

    Raises:
        ApplicabilityError: PRA against a randomizing or fingerprinting
            LiDAR, unless ``spec.allow_inapplicable``.
        PreconditionError: the cloud carries no azimuth bins.
    """
    if not spec.allow_inapplicable:
        check_applicability(spec.kind, profile)
    p = hit_probabilities(cloud, spec, profile)
    hit_rng, xi_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(2))
    n = len(cloud)
    hit = hit_rng.random(n) < p
    if spec.kind == "HFR":
        xi = xi_rng.uniform(0.0, xi_max(spec.frequency_hz), n)
    else:
        xi = np.zeros(n)
    r = np.linalg.norm(cloud.xyz, axis=1)
    safe = np.where(r > 0, r, 1.0)
    moved = cloud.xyz * (xi / safe)[:, None]
    gone = hit & ((xi < profile.mot) | (xi > profile.max_range))
    xyz = np.where(hit[:, None], moved, cloud.xyz)
    intensity = np.where(hit, SPOOFED_INTENSITY, cloud.intensity)
    surviving = cloud.with_xyz(xyz, intensity).select(~gone)
    return RemovalOutcome(
        surviving=surviving,
        removed_count=int(gone.sum()),
        noise_count=int((hit & ~gone).sum()),
        hit_count=int(hit.sum()),
        hit_mask=hit,
        removed_mask=gone,
    )


def expected_hfr_removed_fraction(profile: LidarProfile, frequency_hz: float = DEFAULT_FREQUENCY_HZ) -> float:
    """Share of hit points HFR pushes out of the sensing envelope."""
    top = xi_max(frequency_hz)
    inside = max(0.0, min(top, profile.max_range) - min(profile.mot, top))
    return 1.0 - inside / top
