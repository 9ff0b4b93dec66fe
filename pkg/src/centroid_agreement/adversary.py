"""Byzantine strategies.

A strategy decides, once per round, the vector each Byzantine sender commits to
(or ``None`` for silence) and who gets it.  The scheduler calls the strategy
exactly once per (sender, round) for the vector, so equivocation is impossible
through the default hooks; strategies overriding :meth:`Strategy.sync_messages`
are still checked by the scheduler.

Strategies are frozen dataclasses.  Anything random goes through the
``rng`` carried by the :class:`RoundView`, which the scheduler seeds from the
scenario.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import ClassVar

import numpy as np

from . import geometry as geo


class AdversaryFault(RuntimeError):
    """The adversary broke the delivery rules (equivocation, too many messages, bad ids)."""


@dataclass
class RoundView:
    """What the adversary sees at the start of a round (it is omniscient)."""

    round: int
    n: int
    t: int
    d: int
    byz_ids: tuple[int, ...]
    correct_ids: tuple[int, ...]
    correct_vectors: dict[int, np.ndarray]
    inputs: np.ndarray
    rng: np.random.Generator

    @property
    def f(self) -> int:
        return len(self.byz_ids)

    def correct_points(self) -> np.ndarray:
        return np.array([self.correct_vectors[i] for i in self.correct_ids])


@dataclass(frozen=True)
class ByzMessage:
    sender: int
    vector: np.ndarray = field(compare=False)
    recipients: frozenset[int]


_REGISTRY: dict[str, type["Strategy"]] = {}


def _register(cls):
    _REGISTRY[cls.tag] = cls
    return cls


@dataclass(frozen=True)
class Strategy:
    tag: ClassVar[str] = ""

    def byzantine_vector(self, view: RoundView, sender: int) -> np.ndarray | None:
        """Vector ``sender`` commits to this round; defaults to its own input."""
        return view.inputs[sender]

    def recipients(self, view: RoundView, sender: int) -> frozenset[int]:
        return frozenset(view.correct_ids)

    def sync_messages(self, view: RoundView) -> list[ByzMessage]:
        out = []
        for s in view.byz_ids:
            v = self.byzantine_vector(view, s)
            if v is None:
                continue
            out.append(ByzMessage(s, np.asarray(v, dtype=float), self.recipients(view, s)))
        return out

    def async_vectors(self, view: RoundView) -> dict[int, np.ndarray]:
        out = {}
        for s in view.byz_ids:
            v = self.byzantine_vector(view, s)
            if v is not None:
                out[s] = np.asarray(v, dtype=float)
        return out

    def async_select(
        self, view: RoundView, receiver: int, correct: list[int], byzantine: list[int]
    ) -> list[int]:
        """Senders whose round message ``receiver`` accepts; exactly ``n - t`` of them.

        Default: every Byzantine message that exists, topped up with a seeded
        random choice of correct senders.
        """
        need = view.n - view.t
        byz = byzantine[: min(len(byzantine), view.f, need)]
        pool = np.array(correct)
        picked = view.rng.permutation(pool)[: need - len(byz)] if pool.size else pool
        return sorted(byz + [int(p) for p in picked])

    # config round trip
    def params(self) -> dict:
        return {f.name: _plain(getattr(self, f.name)) for f in fields(self)}


def _plain(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v]
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    return v


def _vec(v):
    return None if v is None else tuple(float(x) for x in v)


@_register
@dataclass(frozen=True)
class Silent(Strategy):
    tag: ClassVar[str] = "silent"

    def byzantine_vector(self, view, sender):
        return None


@_register
@dataclass(frozen=True)
class FixedVector(Strategy):
    """Every Byzantine node sends ``vector`` to everyone, every round."""

    tag: ClassVar[str] = "fixed-vector"
    vector: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vector", _vec(self.vector))

    def byzantine_vector(self, view, sender):
        v = np.array(self.vector, dtype=float)
        if v.shape != (view.d,):
            raise AdversaryFault(f"fixed vector has dimension {v.size}, scenario has {view.d}")
        return v


@_register
@dataclass(frozen=True)
class RoundScript(Strategy):
    """Per-round ``(vector, recipients)`` entries applied to every Byzantine sender.

    ``recipients`` may be ``None`` or ``"all"`` for everyone.  Rounds past the
    end of the script are silent.
    """

    tag: ClassVar[str] = "round-script"
    script: tuple = ()

    def __post_init__(self):
        entries = []
        for entry in self.script:
            vector, recipients = entry
            if recipients is None or recipients == "all":
                rec = None
            else:
                rec = tuple(sorted(int(r) for r in recipients))
            entries.append((_vec(vector), rec))
        object.__setattr__(self, "script", tuple(entries))

    def _entry(self, view):
        if view.round > len(self.script):
            return None
        return self.script[view.round - 1]

    def byzantine_vector(self, view, sender):
        entry = self._entry(view)
        if entry is None:
            return None
        return np.array(entry[0], dtype=float)

    def recipients(self, view, sender):
        entry = self._entry(view)
        if entry is None or entry[1] is None:
            return frozenset(view.correct_ids)
        return frozenset(entry[1])

    def params(self):
        return {"script": [[list(v), "all" if r is None else list(r)] for v, r in self.script]}


@_register
@dataclass(frozen=True)
class ConvexLB(Strategy):
    """Byzantine nodes sit at the origin, next to the lone correct node there."""

    tag: ClassVar[str] = "convex-lb"
    x: float = 1.0
    delta: float = 0.0

    def byzantine_vector(self, view, sender):
        return np.zeros(view.d)


@_register
@dataclass(frozen=True)
class StrongValidityLB(Strategy):
    tag: ClassVar[str] = "strong-validity-lb"

    def byzantine_vector(self, view, sender):
        return np.zeros(view.d)


@_register
@dataclass(frozen=True)
class MdaBoxBreaker(Strategy):
    """Plant a vector just inside the MDA diameter, orthogonal to the correct spread.

    Emits ``(0, scale * s, 0, ...)`` where ``s`` is the current diameter of the
    correct vectors, so MDA keeps preferring it over the far correct group.
    """

    tag: ClassVar[str] = "mda-box-breaker"
    scale: float = 0.999

    def byzantine_vector(self, view, sender):
        if view.d < 2:
            raise AdversaryFault("mda-box-breaker needs d >= 2")
        v = np.zeros(view.d)
        v[1] = self.scale * geo.max_pairwise_distance(view.correct_points())
        return v


@_register
@dataclass(frozen=True)
class AsyncHider(Strategy):
    """Delay the round messages of ``victims`` for every receiver.

    Byzantine nodes keep sending their inputs (or ``vector`` when given).
    """

    tag: ClassVar[str] = "async-hider"
    victims: tuple[int, ...] = ()
    vector: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "victims", tuple(sorted(int(v) for v in self.victims)))
        object.__setattr__(self, "vector", _vec(self.vector))

    def byzantine_vector(self, view, sender):
        if self.vector is None:
            return view.inputs[sender]
        return np.array(self.vector, dtype=float)

    def async_select(self, view, receiver, correct, byzantine):
        need = view.n - view.t
        byz = byzantine[: min(len(byzantine), view.f, need)]
        visible = [c for c in correct if c not in self.victims]
        if len(byz) + len(visible) < need:
            raise AdversaryFault(
                f"cannot hide {self.victims}: only {len(byz) + len(visible)} senders left, need {need}"
            )
        return sorted(byz + visible[: need - len(byz)])

    def params(self):
        p = {"victims": list(self.victims)}
        if self.vector is not None:
            p["vector"] = list(self.vector)
        return p


@_register
@dataclass(frozen=True)
class Seeded(Strategy):
    """Random vectors and random delivery, drawn from the run's seeded stream.

    Vectors are uniform in ``[low, high]`` per coordinate, or in the live
    bounding box of the correct vectors when bounds are omitted.  Each
    correct node (sync) or receiver (async) gets a Byzantine message with
    probability ``delivery``.
    """

    tag: ClassVar[str] = "seeded"
    low: float | None = None
    high: float | None = None
    delivery: float = 0.75

    def byzantine_vector(self, view, sender):
        if self.low is None or self.high is None:
            box = geo.bounding_box(view.correct_points())
            lo, hi = box.lo, box.hi
        else:
            lo = np.full(view.d, float(self.low))
            hi = np.full(view.d, float(self.high))
        return lo + (hi - lo) * view.rng.random(view.d)

    def recipients(self, view, sender):
        keep = view.rng.random(len(view.correct_ids)) < self.delivery
        return frozenset(int(c) for c, k in zip(view.correct_ids, keep) if k)

    def async_select(self, view, receiver, correct, byzantine):
        keep = view.rng.random(len(byzantine)) < self.delivery
        chosen = [b for b, k in zip(byzantine, keep) if k]
        return super().async_select(view, receiver, correct, chosen)

    def params(self):
        p = {"delivery": self.delivery}
        if self.low is not None:
            p["low"] = self.low
        if self.high is not None:
            p["high"] = self.high
        return p


STRATEGY_TAGS = tuple(_REGISTRY)


def from_spec(tag: str, params: dict | None = None) -> Strategy:
    """Build a strategy from its config tag and parameter map."""
    try:
        cls = _REGISTRY[tag]
    except KeyError:
        raise ValueError(f"unknown adversary {tag!r}; expected one of {list(_REGISTRY)}") from None
    params = dict(params or {})
    if cls is RoundScript and "script" in params:
        params["script"] = tuple(tuple(e) for e in params["script"])
    known = {f.name for f in fields(cls)}
    extra = set(params) - known
    if extra:
        raise ValueError(f"adversary {tag!r} has no parameters {sorted(extra)}")
    return cls(**params)


def to_spec(strategy: Strategy) -> tuple[str, dict]:
    return strategy.tag, strategy.params()
