"""Exact one-dimensional compacts: finite unions of closed rational intervals.

The centrepiece is :func:`min_cover_count`, an exact sweep computing the
minimum number of open intervals ``(c - eps, c + eps)`` with centres ``c`` in
the set that cover the set.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .exceptions import ArgumentError, ResourceError, StructuralError
from .metric import FiniteMetricSpace
from .rational import as_fraction, format_fraction

__all__ = [
    "RationalIntervalUnion",
    "SweepTrace",
    "normalize",
    "min_cover_count",
    "sausage_1d",
    "boundary_1d",
    "erode_1d",
    "complement_closure",
    "to_point_space",
    "union_to_json",
    "union_from_json",
    "DEFAULT_SAMPLE_CAP",
]

DEFAULT_SAMPLE_CAP = 1_000_000

ATTAINED = "attained"
APPROACHED = "approached"


@dataclass(frozen=True)
class RationalIntervalUnion:
    """Sorted, pairwise disjoint, non-touching closed intervals ``[a_i, b_i]``.

    Build instances with :func:`normalize` (or :meth:`of`); the constructor
    only checks that the tuple is already normalized.
    """

    intervals: tuple = ()

    def __post_init__(self):
        prev = None
        for a, b in self.intervals:
            if not (isinstance(a, Fraction) and isinstance(b, Fraction)) or a > b:
                raise ArgumentError("intervals must be Fraction pairs with a <= b")
            if prev is not None and a <= prev:
                raise ArgumentError("intervals are not normalized; use normalize()")
            prev = b

    @classmethod
    def of(cls, intervals) -> RationalIntervalUnion:
        return normalize(intervals)

    @classmethod
    def from_points(cls, points: Iterable) -> RationalIntervalUnion:
        return normalize((p, p) for p in points)

    @classmethod
    def empty(cls) -> RationalIntervalUnion:
        return cls(())

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def lefts(self) -> list:
        return [a for a, _ in self.intervals]

    @property
    def length(self) -> Fraction:
        """Lebesgue measure of the union."""
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def bounds(self) -> tuple:
        if not self.intervals:
            raise ArgumentError("empty union has no bounds")
        return self.intervals[0][0], self.intervals[-1][1]

    def is_points(self) -> bool:
        return all(a == b for a, b in self.intervals)

    def points(self) -> tuple:
        if not self.is_points():
            raise ArgumentError("union contains non-degenerate intervals")
        return tuple(a for a, _ in self.intervals)

    def __contains__(self, x) -> bool:
        x = as_fraction(x)
        k = bisect_right(self.lefts, x) - 1
        return k >= 0 and x <= self.intervals[k][1]

    def shift(self, t) -> RationalIntervalUnion:
        t = as_fraction(t)
        return RationalIntervalUnion(tuple((a + t, b + t) for a, b in self.intervals))

    def union(self, other: RationalIntervalUnion) -> RationalIntervalUnion:
        return normalize(self.intervals + other.intervals)

    __or__ = union

    def intersection(self, other: RationalIntervalUnion) -> RationalIntervalUnion:
        out = []
        i = j = 0
        xs, ys = self.intervals, other.intervals
        while i < len(xs) and j < len(ys):
            a = max(xs[i][0], ys[j][0])
            b = min(xs[i][1], ys[j][1])
            if a <= b:
                out.append((a, b))
            if xs[i][1] < ys[j][1]:
                i += 1
            else:
                j += 1
        return normalize(out)

    __and__ = intersection

    def issubset(self, other: RationalIntervalUnion) -> bool:
        return self.intersection(other) == self

    def restrict_points(self, points) -> list:
        """Indices of the sorted ``points`` lying in the union."""
        out = []
        for a, b in self.intervals:
            out.extend(range(bisect_left(points, a), bisect_right(points, b)))
        return out

    def __repr__(self):
        body = ", ".join(f"[{format_fraction(a)}, {format_fraction(b)}]" for a, b in self.intervals[:6])
        more = f", ... ({len(self.intervals)} total)" if len(self.intervals) > 6 else ""
        return f"RationalIntervalUnion({body}{more})"


def normalize(intervals) -> RationalIntervalUnion:
    """Sort and merge overlapping or touching intervals."""
    pairs = []
    for item in intervals:
        try:
            a, b = item
        except (TypeError, ValueError):
            raise ArgumentError(f"not an interval: {item!r}") from None
        a, b = as_fraction(a), as_fraction(b)
        if a > b:
            raise ArgumentError(f"interval [{format_fraction(a)}, {format_fraction(b)}] has a > b")
        pairs.append((a, b))
    pairs.sort()
    merged = []
    for a, b in pairs:
        if merged and a <= merged[-1][1]:
            if b > merged[-1][1]:
                merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    return RationalIntervalUnion(tuple(merged))


# ---------------------------------------------------------------------------
# Covering sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepTrace:
    """Centres chosen by the sweep.

    Each centre is ``(value, status)``; ``status`` is ``"approached"`` when
    the optimal position is an open supremum (any centre slightly below
    ``value`` works, ``value`` itself does not reach far enough).
    """

    centers: tuple
    count: int


def min_cover_count(s: RationalIntervalUnion, eps) -> tuple[int, SweepTrace]:
    """Exact ``N(s; eps)`` for a closed interval union.

    Greedy exclusive-reach sweep: take the leftmost point still to be
    covered, put the centre as far right as the open ball allows, continue
    from the first point the ball does not reach. Positions are tracked as
    ``(value, below)`` where ``below = 1`` stands for "infinitesimally below
    ``value``", which keeps the sweep exact when the best centre is only
    approached.
    """
    eps = as_fraction(eps)
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    if s.is_empty():
        raise ArgumentError("covering number of an empty set")
    comps = s.intervals
    lefts = s.lefts
    ncomp = len(comps)
    centers = []
    v, below = comps[0][0], 0
    while True:
        # leftmost point of s still required
        # (whether it is v itself or the points just below v does not move
        # the supremum computed next, so only its value is kept)
        k = bisect_right(lefts, v) - 1
        if k >= 0 and v <= comps[k][1]:
            p = v
        elif k + 1 < ncomp:
            p = comps[k + 1][0]
        else:
            break
        # rightmost admissible centre: sup of s strictly below p + eps
        t = p + eps
        b_j = comps[bisect_left(lefts, t) - 1][1]
        if t <= b_j:
            c, c_below = t, 1
        else:
            c, c_below = b_j, 0
        centers.append((c, APPROACHED if c_below else ATTAINED))
        v, below = c + eps, c_below
    return len(centers), SweepTrace(tuple(centers), len(centers))


# ---------------------------------------------------------------------------
# Sausages, boundaries, erosion
# ---------------------------------------------------------------------------


def sausage_1d(s: RationalIntervalUnion, delta, ambient: RationalIntervalUnion | None = None) -> RationalIntervalUnion:
    """Closed ``delta``-sausage of ``s``, intersected with ``ambient`` when given."""
    delta = as_fraction(delta)
    if delta < 0:
        raise ArgumentError("delta must be non-negative")
    wide = normalize((a - delta, b + delta) for a, b in s.intervals)
    if ambient is None:
        return wide
    return wide.intersection(ambient)


def complement_closure(s: RationalIntervalUnion, ambient: RationalIntervalUnion) -> RationalIntervalUnion:
    """Closure of ``ambient \\ s``."""
    out = []
    si = s.intervals
    rights = [b for _, b in si]
    for c, d in ambient.intervals:
        k = bisect_left(rights, c)  # first component of s ending at or after c
        x = c
        touched = False
        while k < len(si) and si[k][0] <= d:
            a, b = si[k]
            if a > x:
                out.append((x, a))
            x = max(x, b)
            touched = True
            k += 1
        if not touched:
            out.append((c, d))
        elif x < d:
            out.append((x, d))
    return normalize(out)


def boundary_1d(s: RationalIntervalUnion, ambient: RationalIntervalUnion) -> RationalIntervalUnion:
    """Boundary of ``s`` relative to ``ambient`` (a finite set of points)."""
    if not s.issubset(ambient):
        raise ArgumentError("set is not contained in the ambient compact")
    if s.is_empty():
        return RationalIntervalUnion.empty()
    return s.intersection(complement_closure(s, ambient))


def erode_1d(s: RationalIntervalUnion, r, ambient: RationalIntervalUnion) -> RationalIntervalUnion:
    """``{x in s : d(x, ambient \\ s) >= r}``."""
    r = as_fraction(r)
    if r < 0:
        raise ArgumentError("erosion radius must be non-negative")
    comp = complement_closure(s, ambient)
    if r == 0 or comp.is_empty():
        return s
    holes = [(u - r, v + r) for u, v in comp.intervals]
    out = []
    hl = [h[0] for h in holes]
    for a, b in s.intervals:
        pieces = [(a, b)]
        k = max(bisect_left(hl, a) - 1, 0)
        while k < len(holes) and holes[k][0] < b:
            p, q = holes[k]
            nxt = []
            for x, y in pieces:
                if q <= x or p >= y:
                    nxt.append((x, y))
                    continue
                if x <= p:
                    nxt.append((x, p))
                if q <= y:
                    nxt.append((q, y))
            pieces = nxt
            k += 1
        out.extend(pieces)
    return normalize(out)


# ---------------------------------------------------------------------------
# Discretization and I/O
# ---------------------------------------------------------------------------


def sample_points(s: RationalIntervalUnion, pitch, cap: int = DEFAULT_SAMPLE_CAP) -> list:
    pitch = as_fraction(pitch)
    if pitch <= 0:
        raise ArgumentError("pitch must be positive")
    total = sum(max(1, math.ceil((b - a) / pitch)) + 1 for a, b in s.intervals)
    if total > cap:
        raise ResourceError(f"sample of {total} points exceeds the cap of {cap}")
    pts = []
    for a, b in s.intervals:
        if a == b:
            pts.append(a)
            continue
        n = math.ceil((b - a) / pitch)
        step = (b - a) / n
        pts.extend(a + k * step for k in range(n + 1))
    return pts


def to_point_space(s: RationalIntervalUnion, pitch, cap: int = DEFAULT_SAMPLE_CAP) -> FiniteMetricSpace:
    """Sample ``s`` at spacing ``<= pitch``, keeping every interval endpoint."""
    return FiniteMetricSpace.from_points(sample_points(s, pitch, cap))


def union_to_json(s: RationalIntervalUnion, ambient: RationalIntervalUnion | None = None) -> dict:
    out = {"intervals": [[format_fraction(a), format_fraction(b)] for a, b in s.intervals]}
    if ambient is not None:
        out = {"ambient": [[format_fraction(a), format_fraction(b)] for a, b in ambient.intervals], **out}
    return out


def union_from_json(data) -> tuple[RationalIntervalUnion, RationalIntervalUnion | None]:
    """Parse ``{"ambient": [...], "intervals": [...]}``; returns ``(set, ambient)``."""
    if isinstance(data, str):
        data = json.loads(data) if data.lstrip().startswith("{") else json.load(open(data))
    try:
        s = normalize(data["intervals"])
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"interval JSON is missing {exc}") from None
    ambient = normalize(data["ambient"]) if "ambient" in data else None
    if ambient is not None and not s.issubset(ambient):
        raise StructuralError("intervals are not contained in the ambient union")
    return s, ambient
