"""Simulation of LiDAR spoofing attacks: point injection and point removal."""

from .errors import (
    ApplicabilityError,
    DegenerateRay,
    FormatError,
    InvalidArgument,
    InvalidModel,
    InvalidResolution,
    LidarSpoofError,
    PreconditionError,
    ValidationError,
)
from .geometry import (
    Point,
    PointCloud,
    SphericalCoord,
    assign_azimuth_bins,
    from_spherical,
    ray_direction,
    to_spherical,
)
from .profiles import (
    FiringIntervalDist,
    LidarProfile,
    RandModel,
    builtin_profiles,
    interval_to_distance,
    sample_delta_rand,
)
from .injection import InjectionSpec, apply_frustum_error, apply_injection, downsample_pattern, merge_into_scene
from .removal import FromTable, Plateau, RemovalOutcome, RemovalSpec, apply_removal, build_removal_profile, xi_max
from .evaluation import (
    EvalReport,
    OrientedBox,
    count_injected,
    count_removed,
    injection_success,
    iou_bev,
    removal_percentage_per_azimuth,
    removal_success,
    success_rate,
)
from .scenario import (
    ObjectModel,
    Scenario,
    distance_sweep,
    jitter_pose,
    place_object,
    synthetic_background,
    vehicle_box,
)
from .detector import DetectorParams, cluster, detect, fit_box
from .pc_io import read_cloud, read_detections, write_cloud, write_detections

__version__ = "0.1.0"
