"""Ready-made scenarios: lower-bound constructions, validity counterexamples, fuzz draws."""
from __future__ import annotations

import numpy as np

from . import adversary as adv
from .protocol import ProtocolKind, Schedule
from .simnet import Scenario


def build_convex_lb_scenario(
    d: int, t: int = 1, x: float = 1.0, delta: float = 0.0, *,
    kind=ProtocolKind.SYNC_SAFE_AREA, epsilon: float = 1e-3, seed: int = 0, name: str = "",
) -> Scenario:
    """One correct node and the Byzantine nodes at the origin, ``d`` groups near ``x * e1``.

    Group ``j`` sits at ``x * e1 + delta * e_j``; with ``n = (d + 1) t + 1`` every
    point of the common hull region is pinned at the origin as ``delta`` shrinks.
    """
    if d < 2 or t < 1 or not x > 0 or delta < 0:
        raise ValueError("need d >= 2, t >= 1, x > 0, delta >= 0")
    n = (d + 1) * t + 1
    base = np.zeros(d)
    base[0] = x
    rows = [np.zeros(d)]
    for j in range(d):
        rows += [base + delta * np.eye(d)[j]] * t
    rows += [np.zeros(d)] * t
    return Scenario(
        kind=kind, n=n, t=t, d=d, epsilon=epsilon, inputs=np.array(rows),
        byz_ids=tuple(range(n - t, n)), adversary=adv.ConvexLB(x=x, delta=delta),
        seed=seed, name=name,
    )


def build_strong_validity_lb_scenario(
    n: int, t: int, d: int, model=Schedule.SYNCHRONOUS, *,
    kind=None, f: int | None = None, epsilon: float = 1e-3, seed: int = 0, name: str = "",
) -> Scenario:
    """Most nodes at the origin, a correct minority at ``e1``.

    Synchronous: ``n - 2t`` correct and ``t`` Byzantine at 0, ``t`` correct at ``e1``.
    Asynchronous: ``n - 3t`` correct and ``t`` Byzantine at 0, ``2t`` correct at ``e1``.
    ``f`` below ``t`` turns the trailing Byzantine slots into correct nodes at 0.
    """
    model = Schedule(model)
    f = t if f is None else f
    if not 0 <= f <= t:
        raise ValueError("need 0 <= f <= t")
    at_e1 = t if model is Schedule.SYNCHRONOUS else 2 * t
    if at_e1 + t > n:
        raise ValueError(f"n={n} too small for t={t}")
    if kind is None:
        kind = ProtocolKind.SYNC_BOX if model is Schedule.SYNCHRONOUS else ProtocolKind.ASYNC_BOX
    e1 = np.zeros(d)
    e1[0] = 1.0
    zeros = n - at_e1 - t
    rows = [np.zeros(d)] * zeros + [e1] * at_e1 + [np.zeros(d)] * t
    return Scenario(
        kind=kind, n=n, t=t, d=d, epsilon=epsilon, inputs=np.array(rows),
        byz_ids=tuple(range(n - f, n)), adversary=adv.StrongValidityLB(),
        seed=seed, name=name,
    )


def build_unanimous_outlier_scenario(all_correct: bool = False, *, epsilon: float = 1e-3, name: str = "") -> Scenario:
    """Correct nodes unanimous at the origin, one Byzantine node at ``(1, 0)``.

    With ``all_correct`` the fifth node is correct and also at the origin.
    """
    n, t, d = 5, 1, 2
    inputs = np.zeros((n, d))
    if all_correct:
        return Scenario(
            kind=ProtocolKind.SYNC_CENTROID_SAFE, n=n, t=t, d=d, epsilon=epsilon,
            inputs=inputs, name=name,
        )
    inputs[4] = (1.0, 0.0)
    return Scenario(
        kind=ProtocolKind.SYNC_CENTROID_SAFE, n=n, t=t, d=d, epsilon=epsilon, inputs=inputs,
        byz_ids=(4,), adversary=adv.FixedVector((1.0, 0.0)), name=name,
    )


def build_mda_box_break_scenario(
    kind=ProtocolKind.SYNC_MDA, *, epsilon: float = 1e-2, scale: float = 0.999, name: str = ""
) -> Scenario:
    """``n - 2t`` correct at the origin, ``t`` correct at ``e1``, ``t`` Byzantine planting ``(0, 0.999)``."""
    n, t, d = 5, 1, 2
    inputs = np.zeros((n, d))
    inputs[3] = (1.0, 0.0)
    return Scenario(
        kind=kind, n=n, t=t, d=d, epsilon=epsilon, inputs=inputs, byz_ids=(4,),
        adversary=adv.MdaBoxBreaker(scale=scale), name=name,
    )


def random_scenario(
    kind, n: int, t: int, d: int, *, epsilon: float, seed: int,
    adversary: adv.Strategy | None = None, f: int | None = None,
    low: float = 0.0, high: float = 8.0, name: str = "", **extra,
) -> Scenario:
    """Uniform inputs in ``[low, high]^d`` and ``f`` (default ``t``) Byzantine ids, all from ``seed``."""
    rng = np.random.default_rng(seed)
    f = t if f is None else f
    inputs = rng.uniform(low, high, size=(n, d))
    byz = tuple(sorted(int(b) for b in rng.choice(n, size=f, replace=False)))
    return Scenario(
        kind=kind, n=n, t=t, d=d, epsilon=epsilon, inputs=inputs, byz_ids=byz,
        adversary=adv.Seeded() if adversary is None else adversary, seed=seed, name=name,
        **extra,
    )


def _fig2_style_random(seed: int = 0) -> Scenario:
    return random_scenario(
        ProtocolKind.SYNC_BOX, 7, 2, 2, epsilon=0.05, seed=seed, name="fig2-style-random"
    )


PRESETS = {
    "convex-lb-d2": lambda seed=0: build_convex_lb_scenario(2, 1, 1.0, 1e-6, seed=seed, name="convex-lb-d2"),
    "convex-lb-d3": lambda seed=0: build_convex_lb_scenario(3, 1, 1.0, 1e-6, seed=seed, name="convex-lb-d3"),
    "strong-lb-sync": lambda seed=0: build_strong_validity_lb_scenario(
        4, 1, 2, Schedule.SYNCHRONOUS, seed=seed, name="strong-lb-sync"),
    "strong-lb-async": lambda seed=0: build_strong_validity_lb_scenario(
        7, 2, 2, Schedule.ASYNCHRONOUS, seed=seed, name="strong-lb-async"),
    "mda-box-break": lambda seed=0: build_mda_box_break_scenario(name="mda-box-break"),
    "fig2-style-random": _fig2_style_random,
}

PRESET_NOTES = {
    "convex-lb-d2": "SafeArea run on the d=2 convex-validity lower bound; ratio close to 4",
    "convex-lb-d3": "SafeArea run on the d=3 convex-validity lower bound; ratio close to 6",
    "strong-lb-sync": "n=4, t=1 strong-validity construction; radius 1/6, ratio 2 at the origin",
    "strong-lb-async": "n=7, t=2 asynchronous analog; ratio 4 at the origin",
    "mda-box-break": "SyncMDA pulled outside the correct bounding box",
    "fig2-style-random": "SyncBox, n=7, t=2, d=2, uniform inputs and random Byzantine play",
}


def preset(name: str, seed: int = 0) -> Scenario:
    try:
        return PRESETS[name](seed)
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
