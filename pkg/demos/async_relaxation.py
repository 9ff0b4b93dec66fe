"""
What asynchrony costs
=====================

Without synchrony a node waits for only ``n - t`` messages, so the boxes it
trusts are computed over ``n - 2t``-subsets.  This widens them.
"""

import numpy as np

from centroid_agreement import adversary as adv
from centroid_agreement import geometry as geo
from centroid_agreement import metrics, presets, simnet
from centroid_agreement.protocol import ProtocolKind as K

# %%
# How much wider?  The relaxed centroid box can exceed twice the tight one;
# the factor reaches ``2(n - t)/(n - 2t)`` in the worst case.

pts = np.array([[0.0], [0.0], [0.25], [0.25]])
tight = geo.centroid_box(pts, 3).edges[0]
wide = geo.centroid_box(pts, 2).edges[0]
print(f"n=4, t=1: tight edge {tight:.4f}, relaxed edge {wide:.4f}, factor {wide / tight:.1f}")

# %%
# A sweep of asynchronous runs under a random adversary.

for kind, (n, t) in [(K.ASYNC_BOX, (7, 2)), (K.ASYNC_TRIMMED_MEAN, (7, 2)), (K.ASYNC_MDA, (8, 1))]:
    worst = 0.0
    for seed in range(30):
        tr = simnet.run(presets.random_scenario(kind, n, t, 2, epsilon=0.01, seed=seed))
        worst = max(worst, metrics.approx_ratio(tr))
    print(f"{kind.value:<18} worst ratio over 30 runs: {worst:.3f}")

# %%
# Hiding one correct node from everyone is enough to bias the hull-based rule.

sc = presets.random_scenario(K.ASYNC_TWO_APPROX, 5, 1, 2, epsilon=1e-3, seed=1)
for label, strategy in [("random", sc.adversary), ("hider", adv.AsyncHider(victims=sc.correct_ids[:1]))]:
    tr = simnet.run(presets.random_scenario(K.ASYNC_TWO_APPROX, 5, 1, 2, epsilon=1e-3, seed=1,
                                            adversary=strategy))
    print(f"{label:<7} ratio {metrics.approx_ratio(tr):.3f}")
