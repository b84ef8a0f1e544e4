"""
Learning the backlog from success/collision/idle counts
=======================================================

The base station only sees how many channels succeeded, collided or
stayed idle. An LSTM over the last 20 frames of those counts (plus the
traffic phases) learns to predict how many devices will contend next.
"""

import numpy as np

from hybridra.protocol import run_simulation
from hybridra.scenario import scenario_from
from hybridra.training import build_dataset, lstm_mse, lstm_predictor, moving_average_mse, train_predictor

scn = scenario_from("table1-baseline")
pt = train_predictor(scn, epochs=60, samples=1500, seed=0,
                     on_epoch=lambda e, l: e % 20 == 0 and print(f"epoch {e:3d} loss {l:.4f}"))

held_out = build_dataset(scn, 800, seed=1)
print("\nheld-out normalized MSE      URLLC      mMTC")
for name, err in (("untrained", lstm_mse(pt.untrained, held_out)),
                  ("moving average", moving_average_mse(held_out, scn.predictor.window)),
                  ("trained LSTM", lstm_mse(pt.model, held_out))):
    print(f"  {name:16s}  {err[0]:10.2e} {err[1]:10.2e}")

# plug the trained model into the simulator
series = run_simulation(scn, frames=400, realizations=2, predictor=lstm_predictor(pt.model, scn))
print("\nin-loop prediction error:", {k: f"{v:.2e}" for k, v in series.predictor_mse.items()})
print("throughput eta_u, eta_m:",
      np.round([np.mean(series.window_mean(f"eta_{c}", 50)) for c in "um"], 3))
