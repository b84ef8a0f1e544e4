"""
Slicing the time-frequency grid
===============================

MaxRects packs one-slot URLLC channels first, then shapes mMTC boxes at
the lowest numerology that fits. Compared with a single generic channel
shape the grid holds more channels, and the mMTC share shrinks as URLLC
demand grows.
"""

from hybridra.grid import GridConfig, mmtc_profile, packet_rbs, urllc_profile
from hybridra.slicer import baseline_pack, maxrect_pack, occupancy_text, validate_plan

grid = GridConfig()  # 50 RBs x 10 slots
U, M = urllc_profile(), mmtc_profile()
print(f"packet sizes: URLLC {packet_rbs(U, grid)} RBs, mMTC {packet_rbs(M, grid)} RBs")

base = baseline_pack(0, 1000, grid, U, M)
print(f"no slicing: {base.L} channels, {base.occupied_rbs} RBs")

print("\nURLLC demand -> channels (URLLC + mMTC = total)")
for k_u in (0, 1, 5, 10, 20, 30, 40):
    plan = maxrect_pack(k_u, 1000, grid, U, M)
    assert not validate_plan(plan, grid, U, M)
    print(f"  {k_u:3d}  ->  {plan.L_u:2d} + {plan.L_m:2d} = {plan.L}")

# occupancy map: U = URLLC, digits = mMTC numerology, . = free
print()
print(occupancy_text(maxrect_pack(6, 20, grid, U, M), grid))
