"""
Perfect prediction: loading and mMTC starvation
===============================================

With the true backlog known in advance, the slicer grants exactly one
channel per contender (channel loading 1) until the grid runs out. Past
that point URLLC priority eats into the mMTC share and fewer mMTC devices
get through as the population grows.
"""

import numpy as np

from hybridra.protocol import run_simulation
from hybridra.scenario import scenario_from

print("channel loading with oracle prediction")
for slicing in ("on", "off"):
    scn = scenario_from("fig3-cl", **{"slicing": slicing, "run.frames": 400,
                                      "traffic.K_u": 100, "traffic.K_m": 4000})
    s = run_simulation(scn)
    print(f"  slicing {slicing:3s}: CL_u {np.nanmean(s['cl_u']):.3f}  CL_m {np.nanmean(s['cl_m']):.3f}")

print("\n   K_m  K_u  served_u  served_m  eta_m")
for K_m in (2500, 5000, 10_000, 20_000, 30_000):
    scn = scenario_from("fig5-perfect", **{"traffic.K_m": K_m, "run.frames": 600,
                                           "run.realizations": 2})
    s = run_simulation(scn)
    m = {k: np.mean(s.window_mean(k, scn.window_start)) for k in ("served_u", "served_m", "eta_m")}
    print(f"{K_m:6d} {scn.traffic.K_u:4d} {m['served_u']:9.2f} {m['served_m']:9.2f} {m['eta_m']:6.3f}")
