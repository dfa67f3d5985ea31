"""
Distance sweep
==============

A box vehicle is placed 0..14 m ahead of the sensor on a synthetic ground
plane. Returns drop quickly with distance, and with them the attack
success rates.
"""

from lidarspoof import builtin_profiles, distance_sweep, vehicle_box
from lidarspoof.experiments import Cell, InjectionParams, RemovalParams, cell_success_rate, sweep_background

profiles = builtin_profiles()
scenarios = distance_sweep(sweep_background(), vehicle_box())

hfr = Cell(0, "HFR", "removal", profiles["VLP-16"], removal=RemovalParams(kind="HFR", probability=1.0))
inj = Cell(1, "n=100", "injection", profiles["VLP-16"], injection=InjectionParams(downsample_n=100))

print(" d[m]  object pts  HFR removal  injection n=100")
for i, sc in enumerate(scenarios):
    if sc.distance % 2:
        continue
    w_hfr, t = cell_success_rate(hfr, sc, 20, root_seed=1, scenario_index=i)
    w_inj, _ = cell_success_rate(inj, sc, 20, root_seed=1, scenario_index=i)
    print(f"{sc.distance:5.0f}  {int(sc.object_mask.sum()):10d}  {w_hfr / t:11.2f}  {w_inj / t:15.2f}")
