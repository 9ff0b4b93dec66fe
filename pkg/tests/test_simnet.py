import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centroid_agreement import adversary as adv
from centroid_agreement import geometry as geo
from centroid_agreement import metrics, presets, simnet
from centroid_agreement.protocol import Phase, ProtocolKind as K

SYNC_KINDS = [K.SYNC_BOX, K.SYNC_TRIMMED_MEAN, K.SYNC_MDA, K.SYNC_CENTROID_SAFE, K.SYNC_SAFE_AREA]
ASYNC_KINDS = [K.ASYNC_BOX, K.ASYNC_TRIMMED_MEAN, K.ASYNC_MDA, K.ASYNC_TWO_APPROX]


def scenario(kind=K.SYNC_BOX, n=7, t=2, d=2, byz=(5, 6), strategy=None, inputs=None, **kw):
    if inputs is None:
        inputs = np.random.default_rng(0).uniform(0, 8, size=(n, d))
    return simnet.Scenario(
        kind=kind, n=n, t=t, d=d, epsilon=kw.pop("epsilon", 0.05), inputs=inputs,
        byz_ids=byz, adversary=strategy or adv.Silent(), **kw,
    )


# --------------------------------------------------------------- validation


def test_scenario_validation():
    with pytest.raises(simnet.ScenarioError, match="not resilient"):
        scenario(n=6, byz=(4, 5))
    scenario(n=6, byz=(4, 5), counterexample=True)
    with pytest.raises(simnet.ScenarioError, match="exceed"):
        scenario(byz=(4, 5, 6))
    with pytest.raises(simnet.ScenarioError, match="epsilon"):
        scenario(epsilon=0.0)
    with pytest.raises(simnet.ScenarioError, match="schedule"):
        scenario(schedule="Asynchronous")
    with pytest.raises(simnet.ScenarioError, match="shape"):
        scenario(inputs=np.zeros((7, 1)), d=2)


def test_subset_cap_is_enforced():
    with pytest.raises(simnet.ScenarioError, match="exceeds"):
        scenario(K.SYNC_MDA, n=41, t=10, d=1, byz=(), inputs=np.zeros((41, 1)))


def test_scenario_dict_round_trip():
    sc = scenario(strategy=adv.Seeded(low=-1.0, high=2.0, delivery=0.3), seed=99, round_cap=12)
    back = simnet.Scenario.from_dict(sc.to_dict())
    assert back.to_dict() == sc.to_dict()
    assert back.adversary == sc.adversary


# ----------------------------------------------------------------- delivery


def test_silent_sync_delivers_exactly_the_correct_nodes():
    tr = simnet.run(scenario(strategy=adv.Silent()))
    assert all(len(r.accepted_senders) == 5 for r in tr.records)
    assert tr.byzantine == []


def test_fixed_vector_reaches_everyone():
    tr = simnet.run(scenario(strategy=adv.FixedVector((100.0, 100.0))))
    assert all(len(r.accepted_senders) == 7 for r in tr.records)
    assert all(b.recipients == (0, 1, 2, 3, 4) for b in tr.byzantine)


def test_partial_delivery_keeps_outputs_in_correct_box():
    tr = simnet.run(scenario(strategy=adv.Seeded(low=-50.0, high=50.0, delivery=0.5), seed=3))
    sizes = {len(r.accepted_senders) for r in tr.records}
    assert sizes > {5} or len(sizes) > 1
    box = geo.bounding_box(tr.scenario.correct_inputs)
    for rec in tr.records:
        M = tr.accepted_points(rec)
        trim = len(M) - (7 - 2)
        assert box.contains_box(geo.trimmed_box(M, trim))
        assert box.contains(rec.vector)


class Equivocator(adv.Strategy):
    tag = "equivocator"

    def sync_messages(self, view):
        s = view.byz_ids[0]
        return [
            adv.ByzMessage(s, np.zeros(view.d), frozenset({0})),
            adv.ByzMessage(s, np.ones(view.d), frozenset({1})),
        ]


def test_equivocation_is_rejected():
    tr = simnet.run(scenario(strategy=Equivocator()))
    assert tr.aborted and "equivocated" in tr.aborted


class Greedy(adv.Strategy):
    tag = "greedy"

    def async_select(self, view, receiver, correct, byzantine):
        return list(range(view.n - view.t))


def test_async_selection_is_policed():
    sc = scenario(K.ASYNC_BOX, byz=(0, 1), strategy=Greedy())
    tr = simnet.run(sc)
    assert tr.aborted is None  # byz 0, 1 plus three correct is legal
    sc = scenario(K.ASYNC_BOX, byz=(0,), strategy=Greedy())
    assert simnet.run(sc).aborted is None


def test_async_rejects_short_selection():
    class Short(adv.Strategy):
        tag = "short"

        def async_select(self, view, receiver, correct, byzantine):
            return correct[:2]

    tr = simnet.run(scenario(K.ASYNC_BOX, strategy=Short()))
    assert "must accept" in tr.aborted


def test_async_silent_nodes_see_n_minus_t_correct():
    tr = simnet.run(scenario(K.ASYNC_BOX, strategy=adv.Silent(), byz=(6,)))
    for rec in tr.records:
        assert len(rec.accepted_senders) == 5
        assert 6 not in rec.accepted_senders


def test_async_hider_hides_victims_from_everyone():
    tr = simnet.run(scenario(K.ASYNC_BOX, byz=(5, 6), strategy=adv.AsyncHider(victims=(0, 1))))
    assert tr.aborted is None
    assert all(not {0, 1} & set(r.accepted_senders) for r in tr.records)
    assert all({5, 6} <= set(r.accepted_senders) for r in tr.records)


def test_async_hider_cannot_hide_too_many():
    tr = simnet.run(scenario(K.ASYNC_BOX, byz=(5, 6), strategy=adv.AsyncHider(victims=(0, 1, 2))))
    assert "cannot hide" in tr.aborted


def test_async_without_byzantine_nodes_only_sees_correct_vectors():
    tr = simnet.run(scenario(K.ASYNC_BOX, byz=(), strategy=adv.Seeded(), seed=5))
    assert tr.byzantine == []
    assert all(len(r.accepted_senders) == 5 for r in tr.records)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(ASYNC_KINDS))
def test_async_receive_rule(seed, kind):
    n, t, d = {"box": (7, 2, 2), "mda": (8, 1, 2), "safe_area": (5, 1, 2)}[kind.family]
    sc = presets.random_scenario(kind, n, t, d, epsilon=0.1, seed=seed)
    tr = simnet.run(sc)
    byz = set(sc.byz_ids)
    for rec in tr.records:
        assert len(rec.accepted_senders) == n - t
        assert len(byz & set(rec.accepted_senders)) <= t


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(SYNC_KINDS + ASYNC_KINDS))
def test_byzantine_copies_are_consistent(seed, kind):
    n, t, d = {"box": (7, 2, 2), "mda": (9, 2, 2), "safe_area": (5, 1, 2)}[kind.family]
    if kind is K.ASYNC_MDA:
        n, t = 8, 1
    tr = simnet.run(presets.random_scenario(kind, n, t, d, epsilon=0.1, seed=seed))
    seen = {}
    for b in tr.byzantine:
        key = (b.round, b.sender)
        assert key not in seen
        seen[key] = b.vector
    if kind.synchronous:
        for rec in tr.records:
            assert len(rec.accepted_senders) >= n - t


# -------------------------------------------------------------- run results


@pytest.mark.parametrize("kind", SYNC_KINDS + ASYNC_KINDS)
def test_identical_inputs_decide_that_input(kind):
    n, t, d = 9, 1, 2
    v = np.array([1.25, -0.5])
    sc = simnet.Scenario(kind=kind, n=n, t=t, d=d, epsilon=0.01, inputs=np.tile(v, (n, 1)))
    tr = simnet.run(sc)
    assert tr.all_decided
    for node, out in tr.decided.items():
        np.testing.assert_allclose(out, v, atol=1e-12)


STRONG_KINDS = [k for k in SYNC_KINDS + ASYNC_KINDS
                if k not in (K.SYNC_CENTROID_SAFE, K.ASYNC_TWO_APPROX)]


@pytest.mark.parametrize("kind", STRONG_KINDS)
def test_unanimous_correct_nodes_hold_against_byzantine_noise(kind):
    n, t, d = 9, 1, 2
    v = np.array([3.0, 4.0])
    inputs = np.tile(v, (n, 1))
    inputs[8] = (-40.0, 90.0)
    sc = simnet.Scenario(
        kind=kind, n=n, t=t, d=d, epsilon=0.01, inputs=inputs, byz_ids=(8,),
        adversary=adv.Seeded(low=-100.0, high=100.0, delivery=0.6), seed=11,
    )
    tr = simnet.run(sc)
    for rec in tr.records:
        np.testing.assert_allclose(rec.vector, v, atol=1e-9)
    assert metrics.validity_checks(tr)["strong"] is metrics.Validity.HOLDS


def test_box_halving_example():
    sc = simnet.Scenario(kind=K.SYNC_BOX, n=4, t=1, d=1, epsilon=1.0,
                         inputs=[[0], [8], [0], [8]])
    tr = simnet.run(sc)
    assert tr.all_decided and tr.rounds_used <= 4
    finals = np.array(list(tr.decided.values()))
    assert geo.max_pairwise_distance(finals) <= 1.0


def test_sync_silent_run_ignores_seed():
    a = simnet.run(scenario(seed=1))
    b = simnet.run(scenario(seed=2))
    assert [(r.round, r.node, r.accepted_senders) for r in a.records] == \
           [(r.round, r.node, r.accepted_senders) for r in b.records]
    assert all(np.array_equal(x.vector, y.vector) for x, y in zip(a.records, b.records))


def test_runs_are_deterministic_given_the_seed():
    sc = presets.random_scenario(K.ASYNC_BOX, 7, 2, 3, epsilon=0.05, seed=42)
    assert simnet.run(sc).to_jsonl() == simnet.run(sc).to_jsonl()


def test_decided_nodes_replay_their_final_vector():
    # one node sees a huge round-one extent through the Byzantine sender and
    # keeps going after the others stop
    inputs = [[0.0], [0.1], [0.05], [0.07], [1000.0]]
    sc = simnet.Scenario(
        kind=K.SYNC_BOX, n=5, t=1, d=1, epsilon=0.5, inputs=inputs, byz_ids=(4,),
        adversary=adv.RoundScript(script=[([1000.0], [0])]),
    )
    tr = simnet.run(sc)
    assert tr.budgets[0] > tr.budgets[1]
    late = [r for r in tr.records if r.round > tr.budgets[1]]
    assert late and all(r.node == 0 for r in late)
    for rec in late:
        M = tr.accepted_points(rec)
        np.testing.assert_array_equal(M[1:], [tr.decided[i] for i in (1, 2, 3)])


def test_phases():
    tr = simnet.run(presets.build_unanimous_outlier_scenario(all_correct=True))
    first = tr.round_records(1)
    assert all(r.phase is Phase.PREPROCESSING for r in first)
    assert tr.records[-1].phase is Phase.DECIDED
    tr = simnet.run(scenario())
    assert tr.round_records(1)[0].phase is Phase.CONVERGING


def test_protocol_violation_aborts_with_diagnostic(monkeypatch):
    monkeypatch.setattr(geo, "box_intersection", lambda a, b: geo.Box.empty(a.dim))
    tr = simnet.run(scenario())
    assert tr.aborted.startswith("protocol violation in round 1")
    assert metrics.eps_agreement(tr) is None


# -------------------------------------------------------------- transcripts


def test_transcript_jsonl_round_trip_is_bit_exact():
    sc = presets.random_scenario(K.SYNC_MDA, 9, 2, 3, epsilon=0.05, seed=8)
    tr = simnet.run(sc, "x")
    text = tr.to_jsonl()
    back, version = simnet.Transcript.from_jsonl(text)
    assert version
    assert back.to_jsonl() == text
    for a, b in zip(tr.records, back.records):
        assert a.vector.tobytes() == b.vector.tobytes()
    assert simnet.replay(back) is None


def test_replay_spots_a_perturbed_vector():
    tr = simnet.run(presets.random_scenario(K.SYNC_BOX, 7, 2, 2, epsilon=0.05, seed=1), "p")
    rec = tr.records[9]
    rec.vector = rec.vector.copy()
    rec.vector[0] = np.nextafter(rec.vector[0], np.inf)
    assert simnet.replay(tr) == (rec.round, rec.node)


def test_records_carry_the_documented_fields():
    line = simnet.run(scenario(), "rid").to_jsonl().splitlines()[1]
    for key in ("run_id", "round", "node", "accepted_senders", "vector", "phase"):
        assert f'"{key}"' in line
