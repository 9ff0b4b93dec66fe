"""Ground-truth evaluation of finished runs.

The yardstick for output quality is the smallest ball around every centroid
the adversary could have made look plausible: the centroids of all
``(n - t)``-subsets of the inputs actually committed in round one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import geometry as geo
from .simnet import Scenario, Transcript

VALIDITY_TOL = 1e-9


class Validity(str, Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    NOT_APPLICABLE = "n/a"

    @classmethod
    def of(cls, ok: bool) -> "Validity":
        return cls.HOLDS if ok else cls.VIOLATED


@dataclass
class RunReport:
    run_id: str
    rounds_used: int
    max_pairwise_final_dist: float
    true_centroid: np.ndarray
    opt_radius: float
    approx_ratio: float
    eps_agreement: bool | None
    weak_valid: Validity
    strong_valid: Validity
    box_valid: Validity
    convex_valid: Validity
    aborted: str | None = None


def true_centroid(sc: Scenario) -> np.ndarray:
    return geo.centroid(sc.correct_inputs)


def centroid_candidates(points, n: int, t: int) -> np.ndarray:
    """Centroids of every ``(n - t)``-subset of ``points``."""
    return geo.enumerate_centroids(points, n - t)


def opt_ball(points, n: int, t: int) -> geo.Ball:
    return geo.smallest_enclosing_ball(centroid_candidates(points, n, t))


def opt_radius(tr: Transcript) -> float:
    sc = tr.scenario
    return opt_ball(tr.committed_inputs(), sc.n, sc.t).radius


def ratio(x, target, radius: float, tol: float = VALIDITY_TOL) -> float:
    """``dist(x, target) / radius`` with the conventions for a zero radius."""
    num = geo.dist(x, target)
    if radius > 0:
        return num / radius
    return math.inf if num > tol else 1.0


def approx_ratio(tr: Transcript) -> float:
    """Worst ratio over the decided correct nodes; NaN if nobody decided."""
    if not tr.decided:
        return math.nan
    cent = true_centroid(tr.scenario)
    rad = opt_radius(tr)
    return max(ratio(v, cent, rad) for v in tr.decided.values())


def eps_agreement(tr: Transcript, epsilon: float | None = None) -> bool | None:
    """``None`` when a correct node never decided."""
    if not tr.all_decided:
        return None
    eps = tr.scenario.epsilon if epsilon is None else epsilon
    return geo.max_pairwise_distance(np.array(list(tr.decided.values()))) <= eps


def validity_checks(tr: Transcript) -> dict[str, Validity]:
    sc = tr.scenario
    out = dict.fromkeys(("weak", "strong", "box", "convex"), Validity.NOT_APPLICABLE)
    if not tr.decided:
        return out
    decided = np.array(list(tr.decided.values()))
    X = sc.correct_inputs
    unanimous = np.all(np.abs(X - X[0]) <= VALIDITY_TOL)
    echoes = bool(np.all(np.linalg.norm(decided - X[0], axis=1) <= VALIDITY_TOL))
    if unanimous:
        out["strong"] = Validity.of(echoes)
        if sc.f == 0:
            out["weak"] = Validity.of(echoes)
    box = geo.bounding_box(X)
    out["box"] = Validity.of(all(box.contains(v, VALIDITY_TOL) for v in decided))
    out["convex"] = Validity.of(all(geo.in_convex_hull(v, X) for v in decided))
    return out


def report(tr: Transcript) -> RunReport:
    sc = tr.scenario
    v = validity_checks(tr)
    finals = np.array(list(tr.decided.values())) if tr.decided else np.zeros((0, sc.d))
    return RunReport(
        run_id=tr.run_id,
        rounds_used=tr.rounds_used,
        max_pairwise_final_dist=geo.max_pairwise_distance(finals) if len(finals) else math.nan,
        true_centroid=true_centroid(sc),
        opt_radius=opt_radius(tr),
        approx_ratio=approx_ratio(tr),
        eps_agreement=eps_agreement(tr),
        weak_valid=v["weak"],
        strong_valid=v["strong"],
        box_valid=v["box"],
        convex_valid=v["convex"],
        aborted=tr.aborted,
    )


# ------------------------------------------------------- convergence probes


def round_spread(tr: Transcript, r: int, *, euclidean: bool) -> tuple[float, float]:
    """Spread of correct vectors entering round ``r`` and of those computed in it.

    Spread is the longest bounding-box edge, or the diameter when ``euclidean``.
    """
    before = tr.vectors_entering(r)
    after = np.array([rec.vector for rec in tr.round_records(r)])
    if euclidean:
        return geo.max_pairwise_distance(before), geo.max_pairwise_distance(after)
    return (
        geo.longest_edge(geo.bounding_box(before)),
        geo.longest_edge(geo.bounding_box(after)),
    )


def contraction_factors(tr: Transcript, *, euclidean: bool, floor: float = 1e-12) -> list[float]:
    """Per-round ratio of computed spread to incoming spread (skipping collapsed rounds)."""
    out = []
    for r in range(1, tr.rounds_used + 1):
        if not tr.round_records(r):
            continue
        before, after = round_spread(tr, r, euclidean=euclidean)
        if before > floor:
            out.append(after / before)
    return out


def agreement_round_bound(tr: Transcript) -> int:
    """Rounds a box protocol needs: ``ceil(log2(LE / eps)) + 1`` for the correct inputs."""
    sc = tr.scenario
    le = geo.longest_edge(geo.bounding_box(sc.correct_inputs))
    return math.ceil(math.log2(max(le, sc.epsilon) / sc.epsilon)) + 1


def spread_at_round(tr: Transcript, r: int) -> float:
    """Diameter of the vectors correct nodes hold after round ``r``."""
    return geo.max_pairwise_distance(tr.vectors_entering(r + 1))


def relaxed_diameter_ratio(points, n: int, t: int) -> float:
    """Diameter of ``(n-2t)``-subset centroids over that of ``(n-t)``-subset centroids."""
    wide = geo.max_pairwise_distance(geo.enumerate_centroids(points, n - 2 * t))
    tight = geo.max_pairwise_distance(geo.enumerate_centroids(points, n - t))
    if tight == 0:
        return 1.0 if wide == 0 else math.inf
    return wide / tight


def relaxed_box_edge_excess(points, n: int, t: int) -> float:
    """Largest ``edge(relaxed box) - 2 * edge(centroid box)`` over coordinates."""
    tight = geo.centroid_box(points, n - t).edges
    wide = geo.centroid_box(points, n - 2 * t).edges
    return float(np.max(wide - 2 * tight))
