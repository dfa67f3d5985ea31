"""
Counting injected and removed points
====================================

Spoofed returns are bright (intensity 255), legitimate wall returns dim.
Injected points are counted by intensity; removed points by matching the
benign frame against the dim part of the attacked frame.
"""

from lidarspoof import builtin_profiles
from lidarspoof.evaluation import count_injected, count_removed, removal_percentage_per_azimuth
from lidarspoof.pc_io import RemovalProfile
from lidarspoof.removal import RemovalSpec, apply_removal
from lidarspoof.scenario import synthetic_background

wall = synthetic_background(channels=16, altitude_range=(-15, 15), azimuth_resolution=0.2,
                            azimuth_span=(-30, 30), wall_distance=10.0)
spec = RemovalSpec("HFR", RemovalProfile([-10, 10], [1.0, 1.0]), attack_span=(-10, 10), seed=2)
out = apply_removal(wall, spec, builtin_profiles()["VLP-16"])

print("benign points  ", len(wall))
print("hit by attack  ", out.hit_count)
print("injected count ", count_injected(wall, out.surviving))
print("removed count  ", count_removed(wall, out.surviving))
# a hit point that survives at a random range counts twice: its original
# return is gone (removed) and a bright point appears elsewhere (injected)
print("hit survivors  ", out.noise_count)

table = removal_percentage_per_azimuth(wall, out.surviving, bin_deg=5.0)
for j, frac in sorted(table.items()):
    print(f"  azimuth {j * 5:3d}-{j * 5 + 5:3d} deg  removed {frac:5.1%}")
