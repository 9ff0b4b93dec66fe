"""Deterministic round scheduler for synchronous and asynchronous runs.

Reliable broadcast is enforced as a delivery rule: a correct node's round
vector reaches every correct node (synchronously) or can be picked by any
receiver (asynchronously), and a Byzantine sender has one vector per round
no matter who accepts it.

Asynchronous executions are modelled in lockstep local rounds: in round ``r``
each node accepts exactly ``n - t`` round-``r`` messages, at most ``f`` of them
Byzantine, chosen by the adversary.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import adversary as adv
from . import geometry as geo
from . import protocol as proto
from .protocol import Phase, ProtocolKind, Schedule

MAX_SUBSETS = 10**6


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to reproduce one run."""

    kind: ProtocolKind
    n: int
    t: int
    d: int
    epsilon: float
    inputs: np.ndarray
    byz_ids: tuple[int, ...] = ()
    adversary: adv.Strategy = field(default_factory=adv.Silent)
    seed: int = 0
    round_cap: int = proto.DEFAULT_ROUND_CAP
    counterexample: bool = False
    rounds_factor: int | None = None
    name: str = ""
    schedule: Schedule | None = None

    def __post_init__(self):
        kind = ProtocolKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "inputs", np.array(self.inputs, dtype=float).reshape(self.n, -1))
        object.__setattr__(self, "byz_ids", tuple(sorted(int(b) for b in self.byz_ids)))
        sched = kind.schedule if self.schedule is None else Schedule(self.schedule)
        object.__setattr__(self, "schedule", sched)
        self.validate()

    @property
    def f(self) -> int:
        return len(self.byz_ids)

    @property
    def correct_ids(self) -> tuple[int, ...]:
        byz = set(self.byz_ids)
        return tuple(i for i in range(self.n) if i not in byz)

    @property
    def correct_inputs(self) -> np.ndarray:
        return self.inputs[list(self.correct_ids)]

    def validate(self) -> None:
        n, t, d = self.n, self.t, self.d
        if n < 1 or t < 0 or d < 1:
            raise ScenarioError(f"need n >= 1, t >= 0, d >= 1; got n={n}, t={t}, d={d}")
        if self.inputs.shape != (n, d):
            raise ScenarioError(f"inputs have shape {self.inputs.shape}, expected {(n, d)}")
        if not np.all(np.isfinite(self.inputs)):
            raise ScenarioError("inputs must be finite")
        if not self.epsilon > 0:
            raise ScenarioError("epsilon must be positive")
        if len(set(self.byz_ids)) != len(self.byz_ids) or any(not 0 <= b < n for b in self.byz_ids):
            raise ScenarioError(f"bad Byzantine ids {self.byz_ids}")
        if self.f > t:
            raise ScenarioError(f"f={self.f} Byzantine nodes exceed t={t}")
        if t >= n:
            raise ScenarioError("t must be smaller than n")
        if self.schedule is not self.kind.schedule:
            raise ScenarioError(f"{self.kind.value} runs only under the {self.kind.schedule.value} schedule")
        if self.round_cap < 1:
            raise ScenarioError("round_cap must be at least 1")
        if not self.counterexample and not self.kind.resilient(n, t, d):
            raise ScenarioError(
                f"{self.kind.value} is not resilient at n={n}, t={t}, d={d}; "
                "set counterexample = true to run anyway"
            )
        if self.kind.synchronous:
            biggest = max(math.comb(m, n - t) for m in range(n - t, n + 1))
        else:
            biggest = max(math.comb(n - t, n - 2 * t) if n >= 2 * t else 1, math.comb(n, n - t))
        if biggest > MAX_SUBSETS:
            raise ScenarioError(f"subset enumeration of {biggest} exceeds {MAX_SUBSETS}")

    def to_dict(self) -> dict:
        tag, params = adv.to_spec(self.adversary)
        return {
            "name": self.name,
            "kind": self.kind.value,
            "schedule": self.schedule.value,
            "n": self.n,
            "t": self.t,
            "d": self.d,
            "epsilon": float(self.epsilon),
            "inputs": [[float(x) for x in row] for row in self.inputs],
            "byz_ids": list(self.byz_ids),
            "adversary": tag,
            "adversary_params": params,
            "seed": int(self.seed),
            "round_cap": self.round_cap,
            "counterexample": self.counterexample,
            "rounds_factor": self.rounds_factor,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        strategy = adv.from_spec(data.pop("adversary", "silent"), data.pop("adversary_params", {}))
        return cls(adversary=strategy, **data)


@dataclass
class NodeRecord:
    round: int
    node: int
    accepted_senders: tuple[int, ...]
    vector: np.ndarray
    phase: Phase


@dataclass
class ByzRecord:
    round: int
    sender: int
    vector: np.ndarray
    recipients: tuple[int, ...]


@dataclass
class Transcript:
    scenario: Scenario
    run_id: str = ""
    records: list[NodeRecord] = field(default_factory=list)
    byzantine: list[ByzRecord] = field(default_factory=list)
    decided: dict[int, np.ndarray] = field(default_factory=dict)
    budgets: dict[int, int] = field(default_factory=dict)
    aborted: str | None = None
    rounds_used: int = 0

    def committed_byzantine(self) -> dict[int, np.ndarray]:
        """Round-one Byzantine vectors that at least one correct node accepted."""
        return {b.sender: b.vector for b in self.byzantine if b.round == 1 and b.recipients}

    def committed_inputs(self) -> np.ndarray:
        sc = self.scenario
        vecs = {i: sc.inputs[i] for i in sc.correct_ids}
        vecs.update(self.committed_byzantine())
        return np.array([vecs[i] for i in sorted(vecs)])

    def round_records(self, r: int) -> list[NodeRecord]:
        return [rec for rec in self.records if rec.round == r]

    def vectors_entering(self, r: int) -> np.ndarray:
        """Vectors correct nodes broadcast in round ``r`` (current or replayed final)."""
        sc = self.scenario
        latest = {i: sc.inputs[i] for i in sc.correct_ids}
        for rec in self.records:
            if rec.round < r:
                latest[rec.node] = rec.vector
        return np.array([latest[i] for i in sc.correct_ids])

    def accepted_points(self, rec: NodeRecord) -> np.ndarray:
        """The multiset ``rec.node`` stepped on, rebuilt from the transcript."""
        sc = self.scenario
        entering = dict(zip(sc.correct_ids, self.vectors_entering(rec.round)))
        byz = {b.sender: b.vector for b in self.byzantine if b.round == rec.round}
        return np.array([entering[s] if s in entering else byz[s] for s in rec.accepted_senders])

    @property
    def all_decided(self) -> bool:
        return self.aborted is None and set(self.decided) == set(self.scenario.correct_ids)

    # ---------------------------------------------------------- serialization

    def to_jsonl(self) -> str:
        lines = [
            _dumps({
                "type": "header",
                "tool_version": __version__,
                "run_id": self.run_id,
                "scenario": self.scenario.to_dict(),
            })
        ]
        for rec in self.records:
            lines.append(_dumps({
                "type": "node_round",
                "run_id": self.run_id,
                "round": rec.round,
                "node": rec.node,
                "accepted_senders": list(rec.accepted_senders),
                "vector": rec.vector,
                "phase": rec.phase.value,
            }))
        for b in self.byzantine:
            lines.append(_dumps({
                "type": "byzantine",
                "run_id": self.run_id,
                "round": b.round,
                "sender": b.sender,
                "vector": b.vector,
                "recipients": list(b.recipients),
            }))
        lines.append(_dumps({
            "type": "end",
            "run_id": self.run_id,
            "rounds_used": self.rounds_used,
            "aborted": self.aborted,
            "decided": {str(k): v for k, v in sorted(self.decided.items())},
            "budgets": {str(k): v for k, v in sorted(self.budgets.items())},
        }))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> tuple["Transcript", str]:
        """Parse a transcript; returns it with the tool version from its header."""
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows or rows[0].get("type") != "header":
            raise ValueError("transcript does not start with a header record")
        head = rows[0]
        tr = cls(Scenario.from_dict(head["scenario"]), run_id=head.get("run_id", ""))
        for row in rows[1:]:
            kind = row.get("type")
            if kind == "node_round":
                tr.records.append(NodeRecord(
                    row["round"], row["node"], tuple(row["accepted_senders"]),
                    np.array(row["vector"], dtype=float), Phase(row["phase"]),
                ))
            elif kind == "byzantine":
                tr.byzantine.append(ByzRecord(
                    row["round"], row["sender"], np.array(row["vector"], dtype=float),
                    tuple(row["recipients"]),
                ))
            elif kind == "end":
                tr.rounds_used = row["rounds_used"]
                tr.aborted = row["aborted"]
                tr.decided = {int(k): np.array(v, dtype=float) for k, v in row["decided"].items()}
                tr.budgets = {int(k): v for k, v in row["budgets"].items()}
        return tr, head.get("tool_version", "")


def _dumps(obj) -> str:
    """JSON with floats written to 17 significant digits (bit-exact on read)."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return json.dumps(obj if not isinstance(obj, np.bool_) else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return format(float(obj), ".17g")


# -------------------------------------------------------------------- engine


def _view(sc: Scenario, r: int, outgoing: dict[int, np.ndarray], rng) -> adv.RoundView:
    return adv.RoundView(
        round=r, n=sc.n, t=sc.t, d=sc.d, byz_ids=sc.byz_ids, correct_ids=sc.correct_ids,
        correct_vectors=outgoing, inputs=sc.inputs, rng=rng,
    )


def _check_vector(v: np.ndarray, d: int, who: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (d,) or not np.all(np.isfinite(v)):
        raise adv.AdversaryFault(f"{who} sent a malformed vector {v!r}")
    return v


def deliver_sync(sc: Scenario, view: adv.RoundView) -> tuple[dict[int, list[int]], dict[int, np.ndarray], list[ByzRecord]]:
    """Who each correct node accepts from this round, plus the Byzantine vectors.

    Raises
    ------
    AdversaryFault
        On equivocation, unknown senders or recipients, or malformed vectors.
    """
    byz_vectors: dict[int, np.ndarray] = {}
    byz_recipients: dict[int, frozenset[int]] = {}
    correct = set(sc.correct_ids)
    for msg in sc.adversary.sync_messages(view):
        if msg.sender not in sc.byz_ids:
            raise adv.AdversaryFault(f"node {msg.sender} is not Byzantine")
        v = _check_vector(msg.vector, sc.d, f"Byzantine node {msg.sender}")
        if msg.sender in byz_vectors:
            if not np.array_equal(byz_vectors[msg.sender], v):
                raise adv.AdversaryFault(
                    f"node {msg.sender} equivocated in round {view.round}"
                )
            byz_recipients[msg.sender] |= frozenset(msg.recipients)
        else:
            byz_vectors[msg.sender] = v
            byz_recipients[msg.sender] = frozenset(msg.recipients)
        if not byz_recipients[msg.sender] <= correct:
            raise adv.AdversaryFault(f"node {msg.sender} addressed unknown recipients")
    accepted = {
        i: sorted(list(sc.correct_ids) + [b for b in byz_vectors if i in byz_recipients[b]])
        for i in sc.correct_ids
    }
    records = [
        ByzRecord(view.round, b, byz_vectors[b], tuple(sorted(byz_recipients[b])))
        for b in sorted(byz_vectors)
    ]
    return accepted, byz_vectors, records


def deliver_async(
    sc: Scenario, view: adv.RoundView, receivers
) -> tuple[dict[int, list[int]], dict[int, np.ndarray], list[ByzRecord]]:
    """Exactly ``n - t`` accepted senders per receiver, at most ``f`` Byzantine."""
    byz_vectors = {
        b: _check_vector(v, sc.d, f"Byzantine node {b}")
        for b, v in sc.adversary.async_vectors(view).items()
    }
    if not set(byz_vectors) <= set(sc.byz_ids):
        raise adv.AdversaryFault("async vectors from non-Byzantine senders")
    need = sc.n - sc.t
    correct = list(sc.correct_ids)
    byzantine = sorted(byz_vectors)
    accepted = {}
    takers: dict[int, list[int]] = {b: [] for b in byzantine}
    for i in receivers:
        chosen = list(sc.adversary.async_select(view, i, correct, byzantine))
        if len(chosen) != need or len(set(chosen)) != need:
            raise adv.AdversaryFault(f"receiver {i} must accept {need} distinct senders, got {chosen}")
        nbyz = sum(1 for s in chosen if s in byz_vectors)
        if nbyz > sc.f:
            raise adv.AdversaryFault(f"receiver {i} got {nbyz} Byzantine messages, f={sc.f}")
        for s in chosen:
            if s in byz_vectors:
                takers[s].append(i)
            elif s not in sc.correct_ids:
                raise adv.AdversaryFault(f"receiver {i} got a message from silent node {s}")
        accepted[i] = sorted(chosen)
    records = [ByzRecord(view.round, b, byz_vectors[b], tuple(takers[b])) for b in byzantine]
    return accepted, byz_vectors, records


def run(sc: Scenario, run_id: str = "") -> Transcript:
    """Execute ``sc`` until every correct node decides or the round cap is hit.

    A protocol or adversary violation stops the run; the reason is kept in
    ``Transcript.aborted``.
    """
    tr = Transcript(sc, run_id=run_id)
    rng = np.random.default_rng(np.random.SeedSequence(int(sc.seed) & (2**64 - 1)))
    kind = sc.kind
    states = {
        i: proto.NodeState(i, sc.inputs[i].copy(), phase=proto.phase_for(kind, 1))
        for i in sc.correct_ids
    }
    r = 0
    while r < sc.round_cap and not all(s.decided for s in states.values()):
        r += 1
        outgoing = {
            i: (s.decided_vector if s.decided else s.current_vector) for i, s in states.items()
        }
        view = _view(sc, r, outgoing, rng)
        active = [i for i in sc.correct_ids if not states[i].decided]
        try:
            if kind.synchronous:
                accepted, byz_vectors, byz_recs = deliver_sync(sc, view)
            else:
                accepted, byz_vectors, byz_recs = deliver_async(sc, view, active)
        except adv.AdversaryFault as exc:
            tr.aborted = f"adversary fault in round {r}: {exc}"
            break
        tr.byzantine.extend(byz_recs)

        new_vectors = {}
        try:
            for i in active:
                st = states[i]
                senders = accepted[i]
                M = np.array([outgoing[s] if s in outgoing else byz_vectors[s] for s in senders])
                st.round = r
                st.phase = proto.phase_for(kind, r)
                if r == 1:
                    st.round_budget = proto.round_budget(
                        kind, epsilon=sc.epsilon, initial_extent=proto.initial_extent(kind, M),
                        round_cap=sc.round_cap, rounds_factor=sc.rounds_factor,
                    )
                new_vectors[i] = (proto.step(kind, st, M, sc.n, sc.t), senders, M)
        except proto.ProtocolViolation as exc:
            tr.aborted = f"protocol violation in round {r}: {exc}"
            break

        for i in active:
            st = states[i]
            v, senders, M = new_vectors[i]
            st.current_vector = v
            tr.records.append(NodeRecord(r, i, tuple(senders), v.copy(), st.phase))
            if r >= st.round_budget or proto.early_exit(kind, st, M, sc.epsilon):
                st.decide()
                tr.decided[i] = st.decided_vector.copy()
                tr.records[-1].phase = Phase.DECIDED
        tr.budgets.update({i: states[i].round_budget for i in active if r == 1})
    tr.rounds_used = r
    return tr


def replay(tr: Transcript) -> tuple[int, int] | None:
    """Re-run the transcript's scenario; first ``(round, node)`` whose vector differs, else None."""
    fresh = run(tr.scenario, tr.run_id)
    old = {(rec.round, rec.node): rec for rec in tr.records}
    new = {(rec.round, rec.node): rec for rec in fresh.records}
    for key in sorted(set(old) | set(new)):
        a, b = old.get(key), new.get(key)
        if a is None or b is None:
            return key
        if a.accepted_senders != b.accepted_senders or not np.array_equal(a.vector, b.vector):
            return key
    return None
