"""Geometric kernels shared by the protocols and the metrics.

Points are ``numpy`` arrays: a vector has shape ``(d,)`` and a point set has
shape ``(k, d)``.  Point sets are ordered multisets, duplicates are kept.
All routines are pure functions.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from . import lp

ATOL = 1e-9
HULL_TOL = 1e-8


class GeometryError(ValueError):
    """Raised for structurally invalid arguments (empty sets, bad sizes...)."""


def as_vector(v) -> np.ndarray:
    x = np.asarray(v, dtype=float).reshape(-1)
    if x.size == 0:
        raise GeometryError("vector must have dimension >= 1")
    if not np.all(np.isfinite(x)):
        raise GeometryError("vector coordinates must be finite")
    return x


def as_points(S, *, allow_empty: bool = False) -> np.ndarray:
    P = np.asarray(S, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1) if P.size else P.reshape(0, 1)
    if P.ndim != 2:
        raise GeometryError("point set must be a 2-d array of shape (k, d)")
    if P.shape[0] == 0 and not allow_empty:
        raise GeometryError("point set must be nonempty")
    if P.shape[1] == 0:
        raise GeometryError("points must have dimension >= 1")
    if not np.all(np.isfinite(P)):
        raise GeometryError("point coordinates must be finite")
    return P


def dist(a, b) -> float:
    """Euclidean distance between two vectors of equal dimension."""
    a, b = as_vector(a), as_vector(b)
    if a.shape != b.shape:
        raise GeometryError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(np.linalg.norm(a - b))


def centroid(S) -> np.ndarray:
    P = as_points(S)
    return P.sum(axis=0) / P.shape[0]


def max_pairwise_distance(S) -> float:
    """Diameter of a point set (0 for a single point)."""
    P = as_points(S)
    if P.shape[0] < 2:
        return 0.0
    diff = P[:, None, :] - P[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=-1)).max())


def _check_count(m: int, k: int, what: str = "m") -> None:
    if not 1 <= m <= k:
        raise GeometryError(f"{what}={m} out of range [1, {k}]")


def subset_indices(k: int, m: int) -> np.ndarray:
    """All ``m``-subsets of ``range(k)`` in lexicographic order, shape ``(C(k,m), m)``."""
    return np.array(list(combinations(range(k), m)), dtype=int).reshape(comb(k, m), m)


def enumerate_centroids(S, m: int) -> np.ndarray:
    """Centroids of every ``m``-subset of ``S`` (lexicographic index order)."""
    P = as_points(S)
    _check_count(m, P.shape[0])
    idx = subset_indices(P.shape[0], m)
    return P[idx].sum(axis=1) / m


# --------------------------------------------------------------------- boxes


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-parallel box ``[lo[0], hi[0]] x ... x [lo[d-1], hi[d-1]]``.

    The empty box carries ``is_empty=True``; its ``lo``/``hi`` are meaningless.
    """

    lo: np.ndarray
    hi: np.ndarray
    is_empty: bool = False

    @classmethod
    def empty(cls, d: int) -> "Box":
        return cls(np.full(d, np.nan), np.full(d, np.nan), True)

    @property
    def dim(self) -> int:
        return int(self.lo.shape[0])

    @property
    def edges(self) -> np.ndarray:
        self._require_nonempty()
        return self.hi - self.lo

    def contains(self, x, tol: float = ATOL) -> bool:
        if self.is_empty:
            return False
        x = as_vector(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def contains_box(self, other: "Box", tol: float = ATOL) -> bool:
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return bool(np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol))

    def allclose(self, other: "Box", tol: float = ATOL) -> bool:
        if self.is_empty or other.is_empty:
            return self.is_empty and other.is_empty
        return bool(np.allclose(self.lo, other.lo, rtol=0, atol=tol)
                    and np.allclose(self.hi, other.hi, rtol=0, atol=tol))

    def _require_nonempty(self) -> None:
        if self.is_empty:
            raise GeometryError("operation undefined on the empty box")

    def __repr__(self) -> str:
        if self.is_empty:
            return f"Box.empty({self.dim})"
        parts = " x ".join(f"[{a:.6g}, {b:.6g}]" for a, b in zip(self.lo, self.hi))
        return f"Box({parts})"


def bounding_box(S) -> Box:
    P = as_points(S)
    return Box(P.min(axis=0), P.max(axis=0))


def centroid_box(S, m: int) -> Box:
    """Smallest box containing the centroids of all ``m``-subsets of ``S``.

    Per coordinate the extremes are the means of the ``m`` smallest and the
    ``m`` largest values, so no enumeration is needed.
    """
    P = as_points(S)
    _check_count(m, P.shape[0])
    srt = np.sort(P, axis=0)
    return Box(srt[:m].sum(axis=0) / m, srt[-m:].sum(axis=0) / m)


def trimmed_box(S, trim: int) -> Box:
    """Per coordinate, drop ``trim`` smallest and ``trim`` largest values."""
    P = as_points(S)
    k = P.shape[0]
    if trim < 0 or 2 * trim >= k:
        raise GeometryError(f"cannot trim {trim} from each side of {k} values")
    srt = np.sort(P, axis=0, kind="stable")
    return Box(srt[trim].copy(), srt[k - 1 - trim].copy())


def box_intersection(a: Box, b: Box, tol: float = ATOL) -> Box:
    """Intersection of two boxes.

    Coordinates that invert by at most ``tol`` (round-off between boxes that
    touch) collapse to the midpoint of the inverted pair instead of yielding
    the empty box.
    """
    if a.dim != b.dim:
        raise GeometryError("dimension mismatch")
    if a.is_empty or b.is_empty:
        return Box.empty(a.dim)
    lo = np.maximum(a.lo, b.lo)
    hi = np.minimum(a.hi, b.hi)
    gap = lo - hi
    if np.any(gap > tol):
        return Box.empty(a.dim)
    inv = gap > 0
    if np.any(inv):
        mid = (lo + hi) / 2
        lo = np.where(inv, mid, lo)
        hi = np.where(inv, mid, hi)
    return Box(lo, hi)


def midpoint(b: Box) -> np.ndarray:
    b._require_nonempty()
    return (b.lo + b.hi) / 2


def longest_edge(b: Box) -> float:
    return float(b.edges.max())


# ------------------------------------------------------- robust aggregations


def mda_indices(M, m: int, tol: float = 1e-12) -> tuple[int, ...]:
    """Indices of the ``m``-subset of ``M`` with the smallest diameter.

    Exhaustive over all ``C(|M|, m)`` subsets.  Among subsets whose diameter is
    within ``tol`` of the minimum the lexicographically smallest index tuple
    wins.
    """
    P = as_points(M)
    k = P.shape[0]
    if not 1 <= m <= k:
        raise GeometryError(f"MDA size {m} out of range [1, {k}]")
    idx = subset_indices(k, m)
    if m == 1:
        return (0,)
    D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=-1))
    iu, ju = np.triu_indices(m, 1)
    diam = D[idx[:, iu], idx[:, ju]].max(axis=1)
    best = diam.min()
    first = int(np.flatnonzero(diam <= best + tol)[0])
    return tuple(int(i) for i in idx[first])


def mda(M, m: int) -> np.ndarray:
    """The minimum-diameter ``m``-subset of ``M`` (rows in index order)."""
    P = as_points(M)
    return P[list(mda_indices(P, m))]


def trimmed_mean(M, low_trim: int, high_trim: int) -> np.ndarray:
    """Coordinate-wise mean after dropping ``low_trim`` smallest and ``high_trim`` largest values."""
    P = as_points(M)
    k = P.shape[0]
    if low_trim < 0 or high_trim < 0 or low_trim + high_trim >= k:
        raise GeometryError(f"cannot trim {low_trim}+{high_trim} of {k} values")
    srt = np.sort(P, axis=0, kind="stable")
    kept = srt[low_trim : k - high_trim]
    return kept.sum(axis=0) / kept.shape[0]


# ----------------------------------------------------- hulls and safe points


def in_convex_hull(x, S, tol: float = HULL_TOL) -> bool:
    """Whether ``x`` is a convex combination of the rows of ``S``.

    Decided by LP feasibility of ``S.T @ lam = x, sum(lam) = 1, lam >= 0``
    with tolerance ``tol`` on the equality residual.
    """
    P = as_points(S)
    x = as_vector(x)
    if x.shape[0] != P.shape[1]:
        raise GeometryError("dimension mismatch")
    if np.any(x < P.min(axis=0) - tol) or np.any(x > P.max(axis=0) + tol):
        return False
    A = np.vstack([(P - x).T, np.ones(P.shape[0])])
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    res = lp.solve(np.zeros(P.shape[0]), A, b, feas_tol=tol)
    return res.success


def safe_point(M, subset_size: int) -> np.ndarray | None:
    """A point common to the convex hulls of all ``subset_size``-subsets of ``M``.

    One joint LP with a shared point ``x`` and one barycentric block per
    subset; the objective picks the point L1-closest to the coordinate-wise
    trimmed mean of ``M`` (trimming ``|M| - subset_size`` per side).  Returns
    ``None`` when that intersection is empty.
    """
    P = as_points(M)
    k, d = P.shape
    _check_count(subset_size, k, "subset_size")
    trim = k - subset_size
    ref = trimmed_mean(P, trim, trim) if 2 * trim < k else centroid(P)
    Q = P - ref
    blocks = subset_indices(k, subset_size)
    nb, s = blocks.shape
    nlam = nb * s
    # columns: lambdas (block-major), then p (d), then q (d); x = ref + p - q
    ncols = nlam + 2 * d
    A = np.zeros((nb * (d + 1), ncols))
    b = np.zeros(nb * (d + 1))
    for j, block in enumerate(blocks):
        r0 = j * (d + 1)
        cols = slice(j * s, (j + 1) * s)
        A[r0 : r0 + d, cols] = Q[block].T
        A[r0 : r0 + d, nlam : nlam + d] = -np.eye(d)
        A[r0 : r0 + d, nlam + d :] = np.eye(d)
        A[r0 + d, cols] = 1.0
        b[r0 + d] = 1.0
    c = np.zeros(ncols)
    c[nlam:] = 1.0
    res = lp.solve(c, A, b)
    if not res.success:
        return None
    p = res.x[nlam : nlam + d]
    q = res.x[nlam + d :]
    return ref + p - q


# ------------------------------------------------------------------ miniball


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def contains(self, x, tol: float = ATOL) -> bool:
        return dist(self.center, x) <= self.radius + tol

    def __repr__(self) -> str:
        return f"Ball(center={np.array2string(self.center, precision=6)}, radius={self.radius:.6g})"


def circumball(B: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest ball with all rows of ``B`` on its boundary, inside their affine hull.

    Affinely dependent supports are handled by least squares.
    """
    p0 = B[0]
    if B.shape[0] == 1:
        return p0.copy(), 0.0
    U = B[1:] - p0
    G = U @ U.T
    alpha = np.linalg.lstsq(2.0 * G, np.diag(G), rcond=None)[0]
    c = p0 + alpha @ U
    r = float(np.sqrt(((B - c) ** 2).sum(axis=1)).max())
    return c, r


def _inside(p, c, r) -> bool:
    return float(np.sqrt(((p - c) ** 2).sum())) <= r * (1 + 1e-12) + 1e-13


def _mtf(pts: list, end: int, support: list, dim: int):
    if support:
        c, r = circumball(np.array(support))
    else:
        c, r = None, -1.0
    if len(support) == dim + 1:
        return c, r
    i = 0
    while i < end:
        p = pts[i]
        if c is None or not _inside(p, c, r):
            c, r = _mtf(pts, i, support + [p], dim)
            pts.insert(0, pts.pop(i))
        i += 1
    return c, r


def smallest_enclosing_ball(S) -> Ball:
    """Minimum-radius ball containing every point of ``S``.

    Move-to-front variant of Welzl's algorithm; deterministic (no shuffling).
    The reported radius is the true maximum distance from the computed center
    so containment always holds.
    """
    P = as_points(S)
    U = np.unique(P, axis=0)
    if U.shape[0] == 1:
        return Ball(U[0].copy(), 0.0)
    pts = [row for row in U]
    c, _ = _mtf(pts, len(pts), [], U.shape[1])
    # a second pass from the reordered list repairs rare round-off misses
    c2, _ = _mtf(pts, len(pts), [], U.shape[1])
    r1 = float(np.sqrt(((P - c) ** 2).sum(axis=1)).max())
    r2 = float(np.sqrt(((P - c2) ** 2).sum(axis=1)).max())
    return Ball(c, r1) if r1 <= r2 else Ball(c2, r2)
