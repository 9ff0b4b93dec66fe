"""
How far from the true centroid must an agreement protocol land?
===============================================================

Two small constructions where every protocol pays, whatever it does.
"""

import numpy as np

from centroid_agreement import metrics, presets, simnet

# %%
# Staying inside the convex hull of correct inputs is expensive.  One correct
# node and the Byzantine node sit at the origin, and ``d`` groups of correct
# nodes sit just off ``e1``.  The region every hull-respecting protocol must
# agree in shrinks to the origin, far from the average of the correct inputs.

for d in (2, 3):
    tr = simnet.run(presets.preset(f"convex-lb-d{d}"))
    print(f"d={d}: ratio {metrics.approx_ratio(tr):.6f} (limit {2 * d})")

# %%
# The yardstick is the radius of the smallest ball around every centroid the
# adversary could pass off as genuine.  In the synchronous four-node example
# that radius is 1/6, and echoing the unanimous majority (the origin) costs a
# ratio of 2.  Without synchrony the honest minority can be silenced and the
# cost doubles.

for name in ("strong-lb-sync", "strong-lb-async"):
    tr = simnet.run(presets.preset(name))
    cent = metrics.true_centroid(tr.scenario)
    rad = metrics.opt_radius(tr)
    print(f"{name}: Rad {rad:.6f}, ratio of the origin {metrics.ratio(np.zeros(2), cent, rad):.3f}")
