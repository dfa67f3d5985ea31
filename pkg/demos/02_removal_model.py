"""
Removing an object
==================

PRA collapses hit points to the sensor origin, below the minimum
operational threshold. HFR fires faster than the LiDAR so hit points land
at a random range in [0, c / 2f]; those closer than mot or farther than
max_range are discarded.
"""

from lidarspoof import builtin_profiles, detect, removal_success, place_object, vehicle_box
from lidarspoof.errors import ApplicabilityError
from lidarspoof.experiments import object_span, sweep_background
from lidarspoof.pc_io import RemovalProfile
from lidarspoof.removal import Plateau, RemovalSpec, apply_removal, build_removal_profile, expected_hfr_removed_fraction, xi_max

profiles = builtin_profiles()
scene = place_object(sweep_background(), vehicle_box(), 8.0)
span = object_span(scene)
print(f"object spans azimuth {span[0]:.1f} .. {span[1]:.1f} deg, {int(scene.object_mask.sum())} points")

full = RemovalProfile([0.0], [1.0])

# PRA against a first-generation LiDAR
out = apply_removal(scene.cloud, RemovalSpec("PRA", full, attack_span=span), profiles["VLP-16"])
print("PRA on VLP-16: removed", out.removed_count, "detections gone:",
      removal_success(detect(out.surviving), scene.gt_box))

# PRA is refused where synchronization is impossible
try:
    apply_removal(scene.cloud, RemovalSpec("PRA", full, attack_span=span), profiles["Helios"])
except ApplicabilityError as exc:
    print("PRA on Helios:", exc)

# HFR: share of hit points pushed out of the sensing envelope
for f in (1e6, 2e6, 5e6):
    print(f"HFR f={f / 1e6:.0f} MHz  xi_max={xi_max(f):7.2f} m  "
          f"VLP-16 removes {expected_hfr_removed_fraction(profiles['VLP-16'], f):.3f} of hit points")

# A measured-style curve: flat top, linear falloff
curve = build_removal_profile(Plateau(p_center=0.97), span)
for name in ("VLP-16", "XT32"):
    res = apply_removal(scene.cloud, RemovalSpec("HFR", curve, attack_span=span, seed=1), profiles[name])
    print(f"HFR plateau on {name:6s}: hit={res.hit_count:4d} removed={res.removed_count:4d} "
          f"object hidden={removal_success(detect(res.surviving), scene.gt_box)}")
