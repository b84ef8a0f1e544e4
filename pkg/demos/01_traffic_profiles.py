"""
Traffic profiles: bursty URLLC and sporadic mMTC
================================================

URLLC devices wake up following a Beta-shaped profile over a period of
T_u frames; mMTC devices are mostly independent Bernoulli arrivals with a
small periodic group that always reports together.
"""

import numpy as np

from hybridra.traffic import TrafficConfig, gen_arrivals, urllc_profile, expected_arrivals

cfg = TrafficConfig()  # K_m=1000, K_u=25, p=0.001, 10 periodic users every 10 frames

# per-user URLLC activation probability over one period
q = urllc_profile(cfg)
for tau, v in enumerate(q):
    print(f"tau={tau}  q={v:.4f}  " + "#" * int(round(v * 100)))

# expected vs simulated arrivals over 2000 frames
rng = np.random.default_rng(0)
frames = 2000
sim = np.array([[b.new_urllc, b.new_mmtc] for b in (gen_arrivals(cfg, t, rng) for t in range(frames))])
exp = np.array([expected_arrivals(cfg, t)[::-1] for t in range(frames)])
print("\nmean arrivals per frame   URLLC   mMTC")
print(f"  simulated              {sim[:, 0].mean():6.3f} {sim[:, 1].mean():6.3f}")
print(f"  expected               {exp[:, 0].mean():6.3f} {exp[:, 1].mean():6.3f}")

# the periodic group shows up as a spike every T_p frames
by_phase = [sim[t::cfg.T_p, 1].mean() for t in range(cfg.T_p)]
print("\nmMTC arrivals by frame phase:", np.round(by_phase, 2))
