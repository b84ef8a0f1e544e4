"""
Access class barring against congestion collapse
================================================

On a fixed 54-channel frame, grant-free access (no barring) collapses once
a few thousand mMTC devices contend: almost every channel collides. The
optimal barring factor 1/n (n = mean colliders per collided channel)
keeps the throughput near the slotted-ALOHA optimum.
"""

import numpy as np

from hybridra.acb import expected_success
from hybridra.protocol import run_simulation
from hybridra.scenario import scenario_from

# closed-form successes for K contenders on 54 channels
for k in (10, 54, 100, 200):
    print(f"K={k:3d}: expected successes {expected_success(k, 54):6.2f}")

print("\nfinal-window throughput (3 realizations)")
print("   K_m   p=1.0   p=0.6  optimal")
for K_m in (1000, 2000, 4000, 8000):
    row = []
    for mode in ("fixed:1.0", "fixed:0.6", "optimal"):
        scn = scenario_from("fig4a-fixed", **{"traffic.K_m": K_m, "acb.mode": mode,
                                              "run.realizations": 3})
        row.append(np.mean(run_simulation(scn).window_mean("eta_total", scn.window_start)))
    print(f"{K_m:6d}" + "".join(f"{v:8.3f}" for v in row))
