"""
Centroid quality against validity
=================================

Same inputs, five synchronous rules.  Closer to the true centroid usually
means a weaker promise about where the output lands.
"""

from centroid_agreement import adversary as adv
from centroid_agreement import metrics, presets, simnet
from centroid_agreement.protocol import ProtocolKind as K

# n=9 keeps every rule resilient for t=1 in two dimensions.  An obvious
# outlier never makes it into the minimum-diameter set, so MDA averages
# exactly the correct inputs here.
kinds = [K.SYNC_CENTROID_SAFE, K.SYNC_SAFE_AREA, K.SYNC_MDA, K.SYNC_BOX, K.SYNC_TRIMMED_MEAN]

print(f"{'kind':<18} {'ratio':>7} {'rounds':>6}  strong  box       convex")
for kind in kinds:
    sc = presets.random_scenario(kind, 9, 1, 2, epsilon=1e-3, seed=3,
                                 adversary=adv.Seeded(low=-5.0, high=15.0))
    rep = metrics.report(simnet.run(sc))
    print(f"{kind.value:<18} {rep.approx_ratio:7.3f} {rep.rounds_used:6d}  "
          f"{rep.strong_valid.value:<7} {rep.box_valid.value:<9} {rep.convex_valid.value}")

# %%
# Minimum-diameter averaging can be lured out of the correct box by a
# Byzantine vector planted just inside the correct diameter.

tr = simnet.run(presets.preset("mda-box-break"))
print("mda-box-break:", metrics.validity_checks(tr)["box"].value, next(iter(tr.decided.values())))

# %%
# Aiming straight at the centre of the candidate centroids gives up strong
# validity: unanimous correct nodes are pulled towards one Byzantine outlier.

tr = simnet.run(presets.build_unanimous_outlier_scenario())
print("unanimous + outlier: strong", metrics.validity_checks(tr)["strong"].value)
tr = simnet.run(presets.build_unanimous_outlier_scenario(all_correct=True))
print("all correct:         weak  ", metrics.validity_checks(tr)["weak"].value)
