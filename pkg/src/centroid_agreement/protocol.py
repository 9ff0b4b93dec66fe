"""Per-node round logic of the approximate agreement protocols.

Every step function maps the multiset of vectors a node accepted in a round
to its next vector.  They are pure: identical ``(state, received)`` yields an
identical result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import geometry as geo

DEFAULT_ROUND_CAP = 64


class ProtocolViolation(RuntimeError):
    """A step hit a state the protocol's analysis rules out (empty box, no safe point)."""


class Schedule(str, Enum):
    SYNCHRONOUS = "Synchronous"
    ASYNCHRONOUS = "Asynchronous"


class Phase(str, Enum):
    PREPROCESSING = "Preprocessing"
    CONVERGING = "Converging"
    DECIDED = "Decided"


class ProtocolKind(str, Enum):
    SYNC_SAFE_AREA = "SyncSafeArea"
    SYNC_CENTROID_SAFE = "SyncCentroidSafe"
    SYNC_MDA = "SyncMDA"
    SYNC_BOX = "SyncBox"
    SYNC_TRIMMED_MEAN = "SyncTrimmedMean"
    ASYNC_TWO_APPROX = "AsyncTwoApprox"
    ASYNC_MDA = "AsyncMDA"
    ASYNC_BOX = "AsyncBox"
    ASYNC_TRIMMED_MEAN = "AsyncTrimmedMean"

    @property
    def schedule(self) -> Schedule:
        if self.value.startswith("Sync"):
            return Schedule.SYNCHRONOUS
        return Schedule.ASYNCHRONOUS

    @property
    def synchronous(self) -> bool:
        return self.schedule is Schedule.SYNCHRONOUS

    @property
    def family(self) -> str:
        return _FAMILY[self]

    def resilient(self, n: int, t: int, d: int) -> bool:
        """Whether ``t`` faults among ``n`` nodes in dimension ``d`` is within the kind's bound."""
        if t < 0 or n <= 0:
            return False
        if self in (ProtocolKind.SYNC_SAFE_AREA, ProtocolKind.SYNC_CENTROID_SAFE):
            return 3 * t < n and (d + 1) * t < n
        if self is ProtocolKind.SYNC_MDA:
            return 4 * t < n
        if self is ProtocolKind.ASYNC_TWO_APPROX:
            return (d + 2) * t < n
        if self is ProtocolKind.ASYNC_MDA:
            return 7 * t < n
        return 3 * t < n

    @classmethod
    def parse(cls, value) -> "ProtocolKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValueError(
                f"unknown protocol kind {value!r}; expected one of {[k.value for k in cls]}"
            ) from None


_FAMILY = {
    ProtocolKind.SYNC_SAFE_AREA: "safe_area",
    ProtocolKind.SYNC_CENTROID_SAFE: "safe_area",
    ProtocolKind.ASYNC_TWO_APPROX: "safe_area",
    ProtocolKind.SYNC_MDA: "mda",
    ProtocolKind.ASYNC_MDA: "mda",
    ProtocolKind.SYNC_BOX: "box",
    ProtocolKind.ASYNC_BOX: "box",
    ProtocolKind.SYNC_TRIMMED_MEAN: "box",
    ProtocolKind.ASYNC_TRIMMED_MEAN: "box",
}


@dataclass
class NodeState:
    node_id: int
    current_vector: np.ndarray
    round: int = 0
    round_budget: int | None = None
    phase: Phase = Phase.CONVERGING
    decided_vector: np.ndarray | None = None

    @property
    def decided(self) -> bool:
        return self.decided_vector is not None

    def decide(self) -> None:
        self.phase = Phase.DECIDED
        self.decided_vector = self.current_vector.copy()


@dataclass(frozen=True)
class RoundMessage:
    sender: int
    round: int
    vector: np.ndarray = field(compare=False)


def round_budget(
    kind: ProtocolKind,
    *,
    epsilon: float,
    initial_extent: float,
    round_cap: int = DEFAULT_ROUND_CAP,
    rounds_factor: int | None = None,
) -> int:
    """Number of rounds a node runs, fixed after its first receive.

    ``initial_extent`` is the longest edge (box kinds) or the diameter (MDA
    kinds) of the vectors the node accepted in round one.  With
    ``steps = ceil(log2(extent / epsilon))`` box kinds run ``C * steps + 1``
    rounds and MDA kinds ``max(1, C * steps)``, where ``C`` is
    ``rounds_factor`` or the kind's default (:func:`default_rounds_factor`).
    SafeArea kinds run to ``round_cap`` unless they exit early (see
    :func:`early_exit`).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if initial_extent < 0:
        raise ValueError("initial_extent must be nonnegative")
    kind = ProtocolKind.parse(kind)
    steps = math.ceil(math.log2(max(initial_extent, epsilon) / epsilon))
    c = default_rounds_factor(kind) if rounds_factor is None else rounds_factor
    if c < 1:
        raise ValueError("rounds_factor must be at least 1")
    if kind.family == "box":
        budget = c * steps + 1
    elif kind.family == "mda":
        budget = max(1, c * steps)
    else:
        budget = round_cap
    return min(budget, round_cap)


def default_rounds_factor(kind: ProtocolKind) -> int:
    """Multiplier on ``log2(extent / epsilon)``.

    Synchronous box rounds halve the longest edge, so 1 suffices.  An
    asynchronous box round can contract far less (0.998 observed), and
    MDA only guarantees a 2/3 factor per round.
    """
    kind = ProtocolKind.parse(kind)
    if kind.family == "mda":
        return 6
    if kind.family == "box" and not kind.synchronous:
        return 2
    return 1


def initial_extent(kind: ProtocolKind, received) -> float:
    P = geo.as_points(received)
    if kind.family == "mda":
        return geo.max_pairwise_distance(P)
    return geo.longest_edge(geo.bounding_box(P))


def early_exit(kind: ProtocolKind, state: NodeState, received, epsilon: float) -> bool:
    """SafeArea kinds stop once everything a node accepted lies within ``epsilon``."""
    if kind.family != "safe_area":
        return False
    if kind in (ProtocolKind.SYNC_CENTROID_SAFE, ProtocolKind.ASYNC_TWO_APPROX) and state.round < 2:
        return False
    return geo.max_pairwise_distance(received) <= epsilon


def phase_for(kind: ProtocolKind, round_: int) -> Phase:
    if round_ == 1 and kind in (ProtocolKind.SYNC_CENTROID_SAFE, ProtocolKind.ASYNC_TWO_APPROX):
        return Phase.PREPROCESSING
    return Phase.CONVERGING


# ------------------------------------------------------------ step functions


def _sync_trim(M: np.ndarray, n: int, t: int) -> int:
    m = M.shape[0]
    if not n - t <= m <= n:
        raise ValueError(f"synchronous node must accept between {n - t} and {n} vectors, got {m}")
    return m - (n - t)


def _require_async(M: np.ndarray, n: int, t: int) -> None:
    if M.shape[0] != n - t:
        raise ValueError(f"asynchronous node must accept exactly {n - t} vectors, got {M.shape[0]}")


def sync_boxes(M, n: int, t: int) -> tuple[geo.Box, geo.Box]:
    """Locally trusted box and local centroid box of a synchronous node."""
    M = geo.as_points(M)
    trim = _sync_trim(M, n, t)
    return geo.trimmed_box(M, trim), geo.centroid_box(M, n - t)


def async_boxes(M, n: int, t: int) -> tuple[geo.Box, geo.Box]:
    """Asynchronous locally trusted box and relaxed local centroid box."""
    M = geo.as_points(M)
    _require_async(M, n, t)
    return geo.trimmed_box(M, t), geo.centroid_box(M, n - 2 * t)


def step_sync_box(state: NodeState, M, n: int, t: int) -> np.ndarray:
    tb, cb = sync_boxes(M, n, t)
    box = geo.box_intersection(tb, cb)
    if box.is_empty:
        raise ProtocolViolation(f"node {state.node_id}: trusted box {tb} misses centroid box {cb}")
    return geo.midpoint(box)


def step_sync_trimmed_mean(state: NodeState, M, n: int, t: int) -> np.ndarray:
    M = geo.as_points(M)
    trim = _sync_trim(M, n, t)
    return geo.trimmed_mean(M, trim, trim)


def step_sync_mda(state: NodeState, M, n: int, t: int) -> np.ndarray:
    M = geo.as_points(M)
    _sync_trim(M, n, t)
    return geo.centroid(geo.mda(M, n - t))


def _safe_or_fallback(state: NodeState, M, size: int, kind: ProtocolKind, n: int, t: int):
    x = geo.safe_point(M, size)
    if x is not None:
        return x
    if kind.resilient(n, t, M.shape[1]):
        raise ProtocolViolation(f"node {state.node_id}: empty SafeArea under valid resilience")
    return state.current_vector.copy()


def step_sync_safe_area(state: NodeState, M, n: int, t: int) -> np.ndarray:
    M = geo.as_points(M)
    _sync_trim(M, n, t)
    return _safe_or_fallback(state, M, n - t, ProtocolKind.SYNC_SAFE_AREA, n, t)


def step_sync_centroid_safe(state: NodeState, M, n: int, t: int) -> np.ndarray:
    M = geo.as_points(M)
    _sync_trim(M, n, t)
    if state.round <= 1:
        return geo.smallest_enclosing_ball(geo.enumerate_centroids(M, n - t)).center
    return _safe_or_fallback(state, M, n - t, ProtocolKind.SYNC_CENTROID_SAFE, n, t)


def step_async_two_approx(state: NodeState, M, n: int, t: int) -> np.ndarray:
    M = geo.as_points(M)
    _require_async(M, n, t)
    if state.round <= 1:
        return geo.centroid(M)
    return _safe_or_fallback(state, M, n - 2 * t, ProtocolKind.ASYNC_TWO_APPROX, n, t)


def step_async_mda(state: NodeState, M, n: int, t: int) -> np.ndarray:
    M = geo.as_points(M)
    _require_async(M, n, t)
    return geo.centroid(geo.mda(M, n - 2 * t))


def step_async_box(state: NodeState, M, n: int, t: int) -> np.ndarray:
    if not 3 * t < n:
        raise ValueError("asynchronous box step needs n > 3t")
    tb, cb = async_boxes(M, n, t)
    box = geo.box_intersection(tb, cb)
    if box.is_empty:
        raise ProtocolViolation(f"node {state.node_id}: trusted box {tb} misses relaxed centroid box {cb}")
    return geo.midpoint(box)


def step_async_trimmed_mean(state: NodeState, M, n: int, t: int) -> np.ndarray:
    M = geo.as_points(M)
    _require_async(M, n, t)
    if not 3 * t < n:
        raise ValueError("asynchronous trimmed mean needs n > 3t")
    return geo.trimmed_mean(M, t, t)


STEP_FUNCTIONS = {
    ProtocolKind.SYNC_SAFE_AREA: step_sync_safe_area,
    ProtocolKind.SYNC_CENTROID_SAFE: step_sync_centroid_safe,
    ProtocolKind.SYNC_MDA: step_sync_mda,
    ProtocolKind.SYNC_BOX: step_sync_box,
    ProtocolKind.SYNC_TRIMMED_MEAN: step_sync_trimmed_mean,
    ProtocolKind.ASYNC_TWO_APPROX: step_async_two_approx,
    ProtocolKind.ASYNC_MDA: step_async_mda,
    ProtocolKind.ASYNC_BOX: step_async_box,
    ProtocolKind.ASYNC_TRIMMED_MEAN: step_async_trimmed_mean,
}


def step(kind: ProtocolKind, state: NodeState, M, n: int, t: int) -> np.ndarray:
    return STEP_FUNCTIONS[ProtocolKind.parse(kind)](state, M, n, t)
