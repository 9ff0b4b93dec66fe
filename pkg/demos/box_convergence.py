"""
Watching the box rule converge
==============================

A synchronous run with seven nodes, two of them Byzantine, in the plane.
"""

import numpy as np

from centroid_agreement import adversary as adv
from centroid_agreement import geometry as geo
from centroid_agreement import metrics, presets, simnet
from centroid_agreement import protocol as proto
from centroid_agreement.protocol import NodeState, ProtocolKind

sc = presets.random_scenario(
    ProtocolKind.SYNC_BOX, 7, 2, 2, epsilon=1e-3, seed=7,
    adversary=adv.Seeded(delivery=0.75),
)
tr = simnet.run(sc)

# %%
# Byzantine nodes play plausible vectors inside the correct box and reach a
# random three quarters of the correct nodes.  The longest edge of the box
# around the correct vectors keeps shrinking by half or better.

for r in range(1, tr.rounds_used + 1):
    before, after = metrics.round_spread(tr, r, euclidean=False)
    if before == 0:
        break
    print(f"round {r:2d}: longest edge {before:10.6f} -> {after:10.6f}  ({after / before:.2f})")

rep = metrics.report(tr)
print("decided within", rep.max_pairwise_final_dist, "of each other; ratio", round(rep.approx_ratio, 3))

# %%
# Wild values that reach only some correct nodes weaken that guarantee.  Correct values ``{1, 5, 5, 5, 5}``: one node also hears ``-20``,
# another hears ``+20``.  Their trimmed boxes still overlap, but intersecting
# with the centroid box drags one of them down to 2.6.

correct = [[1.0], [5.0], [5.0], [5.0], [5.0]]
st = NodeState(0, np.zeros(1), round=2)
low = proto.step_sync_box(st, correct + [[-20.0]], 7, 2)[0]
high = proto.step_sync_box(st, correct + [[20.0]], 7, 2)[0]
print(f"outputs {low:.2f} and {high:.2f}: spread factor {(high - low) / 4:.2f}")

# %%
# The same outputs always stay inside the box of correct inputs.

print("inside:", geo.bounding_box(correct).contains([low]) and geo.bounding_box(correct).contains([high]))
