"""
Attack configuration documents and seeded Monte Carlo sweep cells.

An attack config is a JSON object naming a LiDAR profile, a seed and
exactly one of ``"injection"`` or ``"removal"``::

    {
      "profile": "VLP-16",
      "seed": 7,
      "removal": {"kind": "HFR", "frequency_hz": 1e6,
                  "probability": 1.0, "attack_span": [-10, 10]}
    }

Every random draw in a sweep comes from ``derive_seed(root, ...)`` keyed by
cell and trial, so any single cell can be re-run on its own.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .detector import DetectorParams, detect
from .errors import FormatError, InvalidArgument, ValidationError
from .evaluation import injection_success, removal_success
from .geometry import PointCloud, assign_azimuth_bins, azimuth_span
from .injection import InjectionSpec, apply_injection, merge_into_scene
from .pc_io import RemovalProfile, read_cloud, read_removal_profile
from .profiles import LidarProfile, RandModel, builtin_profiles
from .removal import FINGERPRINT_COINCIDENCE_CAP, Plateau, RemovalSpec, apply_removal, build_removal_profile
from .scenario import Scenario, synthetic_background

OBJECT_SPAN_MARGIN = 0.5  # deg added on each side of the target's azimuth extent


def derive_seed(root: int, *keys: int) -> int:
    """Deterministic 32-bit child seed for a (root, key...) path."""
    ss = np.random.SeedSequence([int(root) & 0xFFFFFFFF, *(int(k) & 0xFFFFFFFF for k in keys)])
    return int(ss.generate_state(1)[0])


@dataclass
class InjectionParams:
    downsample_n: Optional[int] = None
    inner_sigma: float = 0.10
    inter_sigma: float = 0.35
    rand_model: Union[str, RandModel] = "profile"
    spoofed_intensity: float = 255.0
    scene: Optional[str] = None
    merge_policy: str = "replace"

    def resolved_rand(self, profile: LidarProfile) -> RandModel:
        if isinstance(self.rand_model, RandModel):
            return self.rand_model
        return profile.rand_model if self.rand_model == "profile" else parse_rand_model(self.rand_model)


@dataclass
class RemovalParams:
    kind: str = "HFR"
    frequency_hz: float = 1e6
    probability: Optional[float] = None
    profile_csv: Optional[str] = None
    plateau: Optional[Dict[str, float]] = None
    attack_span: Optional[Tuple[float, float]] = None
    allow_inapplicable: bool = False
    fingerprint_cap: Optional[float] = FINGERPRINT_COINCIDENCE_CAP

    def table(self, span: Optional[Tuple[float, float]]) -> RemovalProfile:
        if self.profile_csv is not None:
            return read_removal_profile(self.profile_csv)
        if span is None:
            raise InvalidArgument("removal needs attack_span unless a profile_csv is given")
        if self.plateau is not None:
            return build_removal_profile(Plateau(**self.plateau), span)
        p = 1.0 if self.probability is None else float(self.probability)
        return RemovalProfile(list(span), [p, p])

    def spec(self, seed: int, span: Optional[Tuple[float, float]] = None) -> RemovalSpec:
        span = self.attack_span if self.attack_span is not None else span
        return RemovalSpec(
            kind=self.kind,
            prob_profile=self.table(span),
            frequency_hz=self.frequency_hz,
            attack_span=span,
            seed=seed,
            allow_inapplicable=self.allow_inapplicable,
            fingerprint_cap=self.fingerprint_cap,
        )


@dataclass
class AttackConfig:
    profile: str
    seed: int = 0
    injection: Optional[InjectionParams] = None
    removal: Optional[RemovalParams] = None

    @property
    def kind(self) -> str:
        return "injection" if self.injection is not None else "removal"


def parse_rand_model(text: Union[str, Mapping]) -> RandModel:
    """``"none"``, ``"gaussian:1.5"``, ``"uniform:45"``, a profile name, or a dict."""
    if isinstance(text, Mapping):
        return RandModel(**text)
    if text.lower() in ("none", "null", "0"):
        return RandModel.none()
    if ":" in text:
        kind, _, scale = text.partition(":")
        try:
            return RandModel(kind.lower(), float(scale))
        except ValueError as exc:
            raise InvalidArgument(f"bad randomization model {text!r}") from exc
    profiles = builtin_profiles()
    if text in profiles:
        return profiles[text].rand_model
    raise InvalidArgument(f"unknown randomization model {text!r}")


def _resolve(base: Path, value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    p = Path(value)
    return str(p if p.is_absolute() else base / p)


def parse_attack_config(doc: Mapping, base_dir: Union[str, Path] = ".",
                        profiles: Optional[Mapping[str, LidarProfile]] = None) -> AttackConfig:
    profiles = builtin_profiles() if profiles is None else profiles
    if not isinstance(doc, Mapping):
        raise FormatError("attack config must be a JSON object")
    kinds = [k for k in ("injection", "removal") if k in doc]
    if len(kinds) != 1:
        raise ValidationError("attack config needs exactly one of 'injection' or 'removal'")
    name = doc.get("profile")
    if name not in profiles:
        raise ValidationError(f"unknown profile {name!r}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValidationError("seed must be a non-negative integer")
    body = doc[kinds[0]]
    if not isinstance(body, Mapping):
        raise FormatError(f"'{kinds[0]}' must be an object")
    base = Path(base_dir)
    try:
        if kinds[0] == "injection":
            params = InjectionParams(**body)
            params.scene = _resolve(base, params.scene)
            if not isinstance(params.rand_model, str):
                params.rand_model = parse_rand_model(params.rand_model)
            return AttackConfig(name, seed, injection=params)
        params = RemovalParams(**body)
    except TypeError as exc:
        raise FormatError(f"bad {kinds[0]} section: {exc}") from exc
    params.profile_csv = _resolve(base, params.profile_csv)
    if params.attack_span is not None:
        params.attack_span = tuple(float(v) for v in params.attack_span)
    return AttackConfig(name, seed, removal=params)


def load_attack_config(path, profiles=None) -> AttackConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return parse_attack_config(doc, path.parent, profiles)


def run_injection(pattern: PointCloud, params: InjectionParams, profile: LidarProfile, seed: int,
                  scene: Optional[PointCloud] = None) -> PointCloud:
    """Spoofed pattern, merged into ``scene`` (or the configured scene file) if any."""
    n = params.downsample_n
    if n is not None:
        # a far object may return fewer points than the requested sample
        n = min(n, len(pattern))
    spec = InjectionSpec(
        pattern=pattern,
        downsample_n=n,
        inner_sigma=params.inner_sigma,
        inter_sigma=params.inter_sigma,
        rand_model=params.resolved_rand(profile),
        spoofed_intensity=params.spoofed_intensity,
        seed=seed,
    )
    spoofed = apply_injection(spec)
    if scene is None and params.scene is not None:
        scene = read_cloud(params.scene)
    if scene is None:
        return spoofed
    return merge_into_scene(scene, spoofed, params.merge_policy)


def sweep_background() -> PointCloud:
    """Forward-facing synthetic ground used by sweeps: 32 channels, 0.2 deg, +-60 deg."""
    return synthetic_background(channels=32, altitude_range=(-25.0, 3.0), azimuth_resolution=0.2,
                                azimuth_span=(-60.0, 60.0))


def ensure_bins(cloud: PointCloud, profile: LidarProfile) -> PointCloud:
    if cloud.azimuth_index is None:
        return assign_azimuth_bins(cloud, profile.azimuth_resolution)
    return cloud


def object_span(scenario: Scenario, margin: float = OBJECT_SPAN_MARGIN) -> Tuple[float, float]:
    return azimuth_span(scenario.object_points.xyz, margin)


@dataclass(frozen=True)
class Cell:
    """One sweep cell: an attack variant evaluated on one scenario."""

    index: int
    value: Any
    kind: str
    profile: LidarProfile
    injection: Optional[InjectionParams] = None
    removal: Optional[RemovalParams] = None


def trial_outcome(cell: Cell, scenario: Scenario, seed: int,
                  params: DetectorParams = DetectorParams()) -> bool:
    """Attack ``scenario`` once with the oracle detector in the loop."""
    attacked = attacked_cloud(cell, scenario, seed)
    dets = detect(attacked, params)
    if cell.kind == "injection":
        return injection_success(dets, scenario.gt_box)
    return removal_success(dets, scenario.gt_box)


def attacked_cloud(cell: Cell, scenario: Scenario, seed: int) -> PointCloud:
    if cell.kind == "injection":
        return run_injection(scenario.object_points, cell.injection, cell.profile, seed, scene=scenario.background)
    cloud = ensure_bins(scenario.cloud, cell.profile)
    spec = cell.removal.spec(seed, span=object_span(scenario))
    return apply_removal(cloud, spec, cell.profile).surviving


def cell_success_rate(cell: Cell, scenario: Scenario, trials: int, root_seed: int, scenario_index: int,
                      params: DetectorParams = DetectorParams()) -> Tuple[int, int]:
    wins = 0
    for t in range(trials):
        seed = derive_seed(root_seed, cell.index, scenario_index, t)
        wins += trial_outcome(cell, scenario, seed, params)
    return wins, trials


SWEEP_AXES = ("rand_model", "downsample_n", "frequency", "distance")


def build_cells(axis: str, values: Sequence[str], config: AttackConfig,
                profiles: Optional[Mapping[str, LidarProfile]] = None) -> List[Cell]:
    """Expand a sweep axis into cells derived from the base config."""
    profiles = builtin_profiles() if profiles is None else profiles
    if axis not in SWEEP_AXES:
        raise InvalidArgument(f"unknown sweep axis {axis!r}; pick one of {SWEEP_AXES}")
    if not values:
        raise InvalidArgument("sweep needs at least one value")
    base_profile = profiles[config.profile]
    cells = []
    for i, raw in enumerate(values):
        inj = replace(config.injection) if config.injection else None
        rem = replace(config.removal) if config.removal else None
        prof = base_profile
        value: Any = raw
        if axis == "rand_model":
            if inj is not None:
                inj.rand_model = parse_rand_model(raw)
            else:
                if raw not in profiles:
                    raise InvalidArgument(f"removal rand_model sweep takes profile names, got {raw!r}")
                prof = profiles[raw]
        elif axis == "downsample_n":
            if inj is None:
                raise InvalidArgument("downsample_n sweeps need an injection config")
            inj.downsample_n = None if raw in ("all", "none") else int(raw)
            value = "all" if inj.downsample_n is None else inj.downsample_n
        elif axis == "frequency":
            if rem is None or rem.kind != "HFR":
                raise InvalidArgument("frequency sweeps need an HFR removal config")
            rem.frequency_hz = float(raw)
            value = rem.frequency_hz
        else:
            value = float(raw)
        cells.append(Cell(i, value, config.kind, prof, inj, rem))
    return cells
