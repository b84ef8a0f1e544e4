"""Monte-Carlo simulator of a hybrid grant-based/grant-free random-access
protocol for mixed URLLC-mMTC traffic.

The pieces: statistical traffic (:mod:`.traffic`), the NR resource grid
(:mod:`.grid`), backlog prediction (:mod:`.predictor`), MaxRects channel
slicing (:mod:`.slicer`), access class barring (:mod:`.acb`), the per-frame
protocol engine (:mod:`.protocol`) and metrics (:mod:`.metrics`).
"""

__version__ = "0.1.0"
