import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centroid_agreement import adversary as adv
from centroid_agreement import geometry as geo
from centroid_agreement import metrics, presets, simnet
from centroid_agreement.metrics import Validity
from centroid_agreement.protocol import ProtocolKind as K, Schedule

from oracles import miniball_radius, subset_centroids


def test_strong_lb_sync_values():
    tr = simnet.run(presets.preset("strong-lb-sync"))
    cent = metrics.true_centroid(tr.scenario)
    np.testing.assert_allclose(cent, [1 / 3, 0], atol=1e-15)
    rad = metrics.opt_radius(tr)
    assert rad == pytest.approx(1 / 6, abs=1e-12)
    assert metrics.ratio(np.zeros(2), cent, rad) == pytest.approx(2, abs=1e-12)


def test_strong_lb_async_values():
    tr = simnet.run(presets.preset("strong-lb-async"))
    rad = metrics.opt_radius(tr)
    assert rad == pytest.approx(0.2, abs=1e-12)
    cent = metrics.true_centroid(tr.scenario)
    assert metrics.ratio(np.zeros(2), cent, rad) == pytest.approx(4, abs=1e-12)


def test_convex_lb_degenerate_values():
    # with delta = 0 only the metric values are meaningful
    sc = presets.build_convex_lb_scenario(3, 1, 1.0, 0.0)
    tr = simnet.run(sc)
    cent = metrics.true_centroid(sc)
    np.testing.assert_allclose(cent, [0.75, 0, 0])
    rad = metrics.opt_radius(tr)
    assert rad == pytest.approx(1 / 8, abs=1e-12)
    assert metrics.ratio(np.zeros(3), cent, rad) == pytest.approx(6, abs=1e-9)


def test_silent_byzantine_leaves_zero_radius():
    sc = presets.build_strong_validity_lb_scenario(4, 1, 2, Schedule.SYNCHRONOUS)
    sc = simnet.Scenario.from_dict({**sc.to_dict(), "adversary": "silent", "adversary_params": {}})
    tr = simnet.run(sc)
    # three correct inputs, three-subsets: a single centroid
    assert metrics.opt_radius(tr) == 0.0
    assert metrics.approx_ratio(tr) == 1.0


def test_ratio_conventions():
    assert metrics.ratio([0.0], [0.0], 0.0) == 1.0
    assert metrics.ratio([1.0], [0.0], 0.0) == math.inf
    assert metrics.ratio([1.0], [0.0], 0.5) == 2.0


def test_validity_tri_states():
    tr = simnet.run(presets.build_unanimous_outlier_scenario())
    v = metrics.validity_checks(tr)
    assert v["strong"] is Validity.VIOLATED
    assert v["weak"] is Validity.NOT_APPLICABLE
    tr = simnet.run(presets.build_unanimous_outlier_scenario(all_correct=True))
    v = metrics.validity_checks(tr)
    assert v["weak"] is Validity.HOLDS and v["strong"] is Validity.HOLDS
    tr = simnet.run(presets.preset("fig2-style-random"))
    v = metrics.validity_checks(tr)
    assert v["strong"] is Validity.NOT_APPLICABLE
    assert v["box"] is Validity.HOLDS


def test_eps_agreement_is_none_when_someone_never_decides(monkeypatch):
    monkeypatch.setattr(geo, "box_intersection", lambda a, b: geo.Box.empty(a.dim))
    tr = simnet.run(presets.preset("fig2-style-random"))
    assert metrics.eps_agreement(tr) is None
    assert math.isnan(metrics.approx_ratio(tr))
    rep = metrics.report(tr)
    assert rep.aborted and rep.box_valid is Validity.NOT_APPLICABLE


def test_report_fields():
    tr = simnet.run(presets.preset("strong-lb-sync"), "r1")
    rep = metrics.report(tr)
    assert rep.run_id == "r1"
    assert rep.eps_agreement is True
    assert rep.max_pairwise_final_dist <= tr.scenario.epsilon
    assert rep.approx_ratio == metrics.approx_ratio(tr)


def test_committed_inputs_include_byzantine_round_one_vectors():
    sc = presets.build_unanimous_outlier_scenario()
    tr = simnet.run(sc)
    pts = tr.committed_inputs()
    assert len(pts) == 5
    np.testing.assert_array_equal(pts[-1], [1, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_opt_radius_matches_oracle(seed, d):
    sc = presets.random_scenario(K.SYNC_BOX, 6, 1, d, epsilon=0.5, seed=seed)
    tr = simnet.run(sc)
    pts = tr.committed_inputs()
    expect = miniball_radius(subset_centroids(pts, 5))
    assert metrics.opt_radius(tr) == pytest.approx(expect, abs=1e-9)
    cands = metrics.centroid_candidates(pts, 6, 1)
    if len(tr.committed_byzantine()) == 0:
        assert geo.in_convex_hull(metrics.true_centroid(sc), cands)


def test_true_centroid_in_candidate_hull_with_silent_byzantine():
    sc = presets.random_scenario(K.SYNC_BOX, 7, 2, 2, epsilon=0.5, seed=3, adversary=adv.Silent())
    tr = simnet.run(sc)
    assert geo.in_convex_hull(metrics.true_centroid(sc),
                              metrics.centroid_candidates(tr.committed_inputs(), 7, 2))


def test_probes_on_a_box_run():
    tr = simnet.run(presets.random_scenario(K.SYNC_BOX, 7, 2, 2, epsilon=0.05, seed=9))
    assert all(c <= 0.5 + 1e-9 for c in metrics.contraction_factors(tr, euclidean=False))
    r = metrics.agreement_round_bound(tr)
    assert metrics.spread_at_round(tr, min(r, tr.rounds_used)) <= tr.scenario.epsilon


def test_relaxed_probes():
    pts = [[0.0], [0.0], [0.25], [0.25]]
    assert metrics.relaxed_box_edge_excess(pts, 4, 1) > 0
    assert metrics.relaxed_diameter_ratio(pts, 4, 1) == pytest.approx(3)
    assert metrics.relaxed_diameter_ratio([[1.0]] * 5, 5, 1) == 1.0


def test_convex_lb_ratio_approaches_twice_the_dimension():
    ratios = []
    for delta in (1e-2, 1e-4, 1e-6):
        tr = simnet.run(presets.build_convex_lb_scenario(3, 1, 1.0, delta))
        ratios.append(metrics.approx_ratio(tr))
    assert ratios == sorted(ratios)
    assert 6 - 1e-3 <= ratios[-1] <= 6


def test_convex_lb_without_perturbation_leaves_a_segment():
    # every 4-subset of {0, 0, e1, e1, e1} spans the same segment, so the
    # common region is the whole segment rather than the origin
    pts = presets.build_convex_lb_scenario(3, 1, 1.0, 0.0).inputs
    for x in (0.0, 0.5, 1.0):
        p = np.array([x, 0.0, 0.0])
        assert all(geo.in_convex_hull(p, pts[list(s)]) for s in geo.subset_indices(5, 4))
