"""Exact finite metric spaces and set-level primitives.

Distances are exact rationals. Internally a space keeps the sorted tuple of
its distinct distance values and an integer *rank* matrix pointing into it,
so every set predicate (``d < eps``, ``d <= delta``) becomes an exact integer
comparison that numpy can vectorize. Spaces that embed isometrically in the
real line also keep their coordinates; the rank matrix is then built lazily,
only when an operation needs it.
"""

from __future__ import annotations

import enum
import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    ArgumentError,
    MetricValidationError,
    ResourceError,
    StructuralError,
)
from .rational import as_fraction, common_denominator, format_fraction

__all__ = [
    "SubsetMask",
    "FiniteMetricSpace",
    "MetricValidationReport",
    "Violation",
    "MapTable",
    "MapKind",
    "validate_metric",
    "ball",
    "minkowski_sausage",
    "boundary",
    "hausdorff_distance",
    "distance_to_set",
    "product",
    "product_mask",
    "restrict",
    "check_map",
    "space_to_json",
    "space_from_json",
    "DEFAULT_PRODUCT_CAP",
    "DEFAULT_MATRIX_CAP",
]

DEFAULT_PRODUCT_CAP = 4096
DEFAULT_MATRIX_CAP = 4096


# ---------------------------------------------------------------------------
# Subsets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubsetMask:
    """Membership bitset over the points of one space (bit ``i`` = point ``i``)."""

    bits: int
    size: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.size:
            raise ArgumentError("mask has bits outside its space")

    @classmethod
    def empty(cls, size: int) -> SubsetMask:
        return cls(0, size)

    @classmethod
    def full(cls, size: int) -> SubsetMask:
        return cls((1 << size) - 1, size)

    @classmethod
    def from_indices(cls, size: int, indices: Iterable[int]) -> SubsetMask:
        bits = 0
        for i in indices:
            if not 0 <= i < size:
                raise ArgumentError(f"index {i} outside a space of {size} points")
            bits |= 1 << i
        return cls(bits, size)

    @classmethod
    def from_array(cls, flags) -> SubsetMask:
        flags = np.asarray(flags, dtype=bool)
        packed = np.packbits(flags, bitorder="little")
        return cls(int.from_bytes(packed.tobytes(), "little"), int(flags.size))

    @classmethod
    def from_range(cls, size: int, lo: int, hi: int) -> SubsetMask:
        """Points ``lo <= i < hi``."""
        lo, hi = max(lo, 0), min(hi, size)
        if hi <= lo:
            return cls(0, size)
        return cls(((1 << (hi - lo)) - 1) << lo, size)

    def to_array(self) -> np.ndarray:
        nbytes = (self.size + 7) // 8
        raw = np.frombuffer(self.bits.to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.size].astype(bool)

    def indices(self) -> list[int]:
        if self.bits == 0:
            return []
        return np.flatnonzero(self.to_array()).tolist()

    @property
    def count(self) -> int:
        return self.bits.bit_count()

    def is_empty(self) -> bool:
        return self.bits == 0

    def is_full(self) -> bool:
        return self.bits == (1 << self.size) - 1

    def __contains__(self, i: int) -> bool:
        return bool(self.bits >> i & 1)

    def _check(self, other: SubsetMask):
        if self.size != other.size:
            raise ArgumentError("masks index spaces of different sizes")

    def __or__(self, other: SubsetMask) -> SubsetMask:
        self._check(other)
        return SubsetMask(self.bits | other.bits, self.size)

    def __and__(self, other: SubsetMask) -> SubsetMask:
        self._check(other)
        return SubsetMask(self.bits & other.bits, self.size)

    def __sub__(self, other: SubsetMask) -> SubsetMask:
        self._check(other)
        return SubsetMask(self.bits & ~other.bits, self.size)

    def complement(self) -> SubsetMask:
        return SubsetMask(((1 << self.size) - 1) & ~self.bits, self.size)

    def issubset(self, other: SubsetMask) -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One violated axiom instance.

    ``kind`` is ``"identity"`` (zero distance between distinct points),
    ``"diagonal"`` (non-zero self distance), ``"negative"`` or ``"triangle"``.
    For triangle violations ``indices`` is ``(i, j, k)`` meaning
    ``d(i,k) > d(i,j) + d(j,k)`` and ``slack`` is the excess.
    """

    kind: str
    indices: tuple
    slack: Fraction


@dataclass(frozen=True)
class MetricValidationReport:
    valid: bool
    violations: tuple = ()
    truncated: bool = False

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "truncated": self.truncated,
            "violations": [
                {"kind": v.kind, "indices": list(v.indices), "slack": format_fraction(v.slack)}
                for v in self.violations
            ],
        }


def _as_table(dist_table) -> list[list[Fraction]]:
    rows = [list(row) for row in dist_table]
    n = len(rows)
    if n == 0:
        raise StructuralError("distance table is empty")
    for row in rows:
        if len(row) != n:
            raise StructuralError("distance table is not square")
    table = [[as_fraction(x) for x in row] for row in rows]
    for i in range(n):
        for j in range(i + 1, n):
            if table[i][j] != table[j][i]:
                raise StructuralError(f"distance table is asymmetric at ({i},{j})")
    return table


def _triangle_violations(values: Sequence[Fraction], ranks: np.ndarray, limit: int):
    """Yield ``(i, j, k, slack)`` with ``d(i,k) > d(i,j) + d(j,k)``, ``i < k``."""
    n = ranks.shape[0]
    den = common_denominator(values)
    found = 0
    if den is not None and max(values) * den < (1 << 60):
        scaled = np.array([int(v * den) for v in values], dtype=np.int64)[ranks]
        iu = np.triu(np.ones((n, n), dtype=bool), k=1)
        for j in range(n):
            bad = (scaled > scaled[:, j : j + 1] + scaled[j : j + 1, :]) & iu
            if not bad.any():
                continue
            for i, k in zip(*np.nonzero(bad)):
                slack = Fraction(int(scaled[i, k] - scaled[i, j] - scaled[j, k]), den)
                yield int(i), j, int(k), slack
                found += 1
                if found >= limit:
                    return
        return
    # huge denominators: plain exact loops
    d = [[values[r] for r in row] for row in ranks.tolist()]
    for j in range(n):
        for i in range(n):
            dij = d[i][j]
            for k in range(i + 1, n):
                s = d[i][k] - dij - d[j][k]
                if s > 0:
                    yield i, j, k, s
                    found += 1
                    if found >= limit:
                        return


def _ranks_from_table(table: list[list[Fraction]]):
    values = sorted({x for row in table for x in row})
    index = {v: r for r, v in enumerate(values)}
    ranks = np.array([[index[x] for x in row] for row in table], dtype=np.int32)
    return tuple(values), ranks


def validate_metric(dist_table, max_violations: int = 1000) -> MetricValidationReport:
    """Check the metric axioms on a rational distance table, exactly.

    Raises :class:`StructuralError` for a non-square or asymmetric table;
    axiom failures are reported, not raised.
    """
    table = _as_table(dist_table)
    values, ranks = _ranks_from_table(table)
    return _validate_ranks(values, ranks, max_violations)


def _validate_ranks(values, ranks, max_violations=1000) -> MetricValidationReport:
    n = ranks.shape[0]
    out = []
    truncated = False
    for i in range(n):
        if values[ranks[i, i]] != 0:
            out.append(Violation("diagonal", (i,), values[ranks[i, i]]))
        for k in range(i + 1, n):
            v = values[ranks[i, k]]
            if v < 0:
                out.append(Violation("negative", (i, k), -v))
            elif v == 0:
                out.append(Violation("identity", (i, k), Fraction(0)))
    if not out:
        for i, j, k, slack in _triangle_violations(values, ranks, max_violations + 1):
            if len(out) >= max_violations:
                truncated = True
                break
            out.append(Violation("triangle", (i, j, k), slack))
    return MetricValidationReport(valid=not out, violations=tuple(out), truncated=truncated)


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------


class FiniteMetricSpace:
    """A finite metric space with exact rational distances.

    Use :meth:`from_matrix` for an explicit table or :meth:`from_points` for a
    finite subset of the real line. Points are stored in a deterministic
    order (labels sorted lexicographically for tables, increasing coordinate
    for line spaces); every downstream tie-break refers to that order.
    """

    def __init__(self, labels, values, ranks, *, coords=None, parent_index=None, pairs=None):
        self._labels = tuple(labels)
        self._values = tuple(values) if values is not None else None
        self._ranks = ranks
        if self._ranks is not None:
            self._ranks.setflags(write=False)
        self._coords = tuple(coords) if coords is not None else None
        self.parent_index = tuple(parent_index) if parent_index is not None else None
        self.pairs = tuple(pairs) if pairs is not None else None
        self._label_index = None
        if not self._labels:
            raise ArgumentError("a metric space needs at least one point")

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_matrix(cls, labels, dist_table, *, validate: bool = True) -> FiniteMetricSpace:
        labels = [str(x) for x in labels]
        table = _as_table(dist_table)
        if len(labels) != len(table):
            raise StructuralError("label count does not match the table")
        if len(set(labels)) != len(labels):
            raise StructuralError("duplicate labels")
        values, ranks = _ranks_from_table(table)
        if validate:
            report = _validate_ranks(values, ranks)
            if not report.valid:
                raise MetricValidationError("distance table is not a metric", report)
        order = sorted(range(len(labels)), key=labels.__getitem__)
        ranks = ranks[np.ix_(order, order)]
        return cls([labels[i] for i in order], values, np.ascontiguousarray(ranks))

    @classmethod
    def from_points(cls, points, labels=None) -> FiniteMetricSpace:
        """Finite subset of the real line with the absolute-value metric."""
        pts = [as_fraction(p) for p in points]
        if labels is None:
            labels = [format_fraction(p) for p in pts]
        labels = [str(x) for x in labels]
        if len(labels) != len(pts):
            raise StructuralError("label count does not match the point count")
        order = sorted(range(len(pts)), key=pts.__getitem__)
        pts = [pts[i] for i in order]
        labels = [labels[i] for i in order]
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise MetricValidationError(f"duplicate point {format_fraction(a)}")
        return cls(labels, None, None, coords=pts)

    @classmethod
    def discrete(cls, n: int) -> FiniteMetricSpace:
        """``n`` points pairwise at distance 1."""
        ranks = np.ones((n, n), dtype=np.int32) - np.eye(n, dtype=np.int32)
        width = len(str(max(n - 1, 0)))
        return cls([f"p{i:0{width}d}" for i in range(n)], (Fraction(0), Fraction(1)), ranks)

    # -- basic accessors --------------------------------------------------

    @property
    def labels(self) -> tuple:
        return self._labels

    @property
    def n(self) -> int:
        return len(self._labels)

    def __len__(self) -> int:
        return len(self._labels)

    @property
    def coords(self):
        return self._coords

    @property
    def is_line(self) -> bool:
        return self._coords is not None

    def index(self, label) -> int:
        if self._label_index is None:
            self._label_index = {lab: i for i, lab in enumerate(self._labels)}
        try:
            return self._label_index[str(label)]
        except KeyError:
            raise ArgumentError(f"unknown point label {label!r}") from None

    def full(self) -> SubsetMask:
        return SubsetMask.full(self.n)

    def empty(self) -> SubsetMask:
        return SubsetMask.empty(self.n)

    def mask(self, items) -> SubsetMask:
        """Mask from point indices (ints) or labels (strings)."""
        idx = [i if isinstance(i, (int, np.integer)) else self.index(i) for i in items]
        return SubsetMask.from_indices(self.n, (int(i) for i in idx))

    def mask_where(self, predicate) -> SubsetMask:
        """Mask of points whose coordinate satisfies ``predicate`` (line spaces)."""
        if self._coords is None:
            raise ArgumentError("mask_where needs a line space")
        return SubsetMask.from_array([bool(predicate(x)) for x in self._coords])

    def mask_between(self, lo, hi, *, closed: bool = True) -> SubsetMask:
        """Points with ``lo <= x <= hi`` (or ``lo < x < hi`` when ``closed`` is false)."""
        if self._coords is None:
            raise ArgumentError("mask_between needs a line space")
        lo, hi = as_fraction(lo), as_fraction(hi)
        if closed:
            a, b = bisect_left(self._coords, lo), bisect_right(self._coords, hi)
        else:
            a, b = bisect_right(self._coords, lo), bisect_left(self._coords, hi)
        return SubsetMask.from_range(self.n, a, b)

    # -- distances --------------------------------------------------------

    def _build_ranks(self):
        if self._ranks is not None:
            return
        n = self.n
        if n > DEFAULT_MATRIX_CAP:
            raise ResourceError(
                f"distance matrix of {n} points exceeds the cap of {DEFAULT_MATRIX_CAP}"
            )
        c = self._coords
        den = common_denominator(c)
        if den is not None and max(abs(x) for x in c) * den < (1 << 60):
            ints = np.array([int(x * den) for x in c], dtype=np.int64)
            diff = np.abs(ints[:, None] - ints[None, :])
            uniq, inv = np.unique(diff, return_inverse=True)
            self._values = tuple(Fraction(int(u), den) for u in uniq)
            self._ranks = inv.reshape(n, n).astype(np.int32)
        else:
            table = [[abs(a - b) for b in c] for a in c]
            self._values, self._ranks = _ranks_from_table(table)
        self._ranks.setflags(write=False)

    @property
    def ranks(self) -> np.ndarray:
        """Read-only ``n x n`` int matrix; ``dist(i, j) == values[ranks[i, j]]``."""
        self._build_ranks()
        return self._ranks

    @property
    def values(self) -> tuple:
        self._build_ranks()
        return self._values

    def dist(self, i: int, j: int) -> Fraction:
        if self._coords is not None:
            return abs(self._coords[i] - self._coords[j])
        return self._values[self._ranks[i, j]]

    def dist_table(self) -> list[list[Fraction]]:
        vals = self.values
        return [[vals[r] for r in row] for row in self.ranks.tolist()]

    def rank_below(self, eps) -> int:
        """Ranks ``r < rank_below(eps)`` are exactly the distances ``< eps``."""
        return bisect_left(self.values, as_fraction(eps))

    def rank_upto(self, delta) -> int:
        """Ranks ``r < rank_upto(delta)`` are exactly the distances ``<= delta``."""
        return bisect_right(self.values, as_fraction(delta))

    def diameter(self) -> Fraction:
        if self._coords is not None:
            return self._coords[-1] - self._coords[0]
        return self.values[int(self.ranks.max())]

    def min_positive_distance(self) -> Fraction:
        if self._coords is not None:
            if self.n == 1:
                return Fraction(0)
            return min(b - a for a, b in zip(self._coords, self._coords[1:]))
        return self.values[1] if len(self.values) > 1 else Fraction(0)

    def validate(self) -> MetricValidationReport:
        return _validate_ranks(self.values, self.ranks)

    def __repr__(self):
        kind = "line" if self.is_line else "matrix"
        return f"FiniteMetricSpace(n={self.n}, kind={kind})"


# ---------------------------------------------------------------------------
# Set primitives
# ---------------------------------------------------------------------------


def _positive(x, name):
    x = as_fraction(x)
    if x <= 0:
        raise ArgumentError(f"{name} must be positive, got {format_fraction(x)}")
    return x


def ball(space: FiniteMetricSpace, center: int, eps) -> SubsetMask:
    """Open ball ``{p : d(center, p) < eps}``."""
    eps = _positive(eps, "eps")
    if not 0 <= center < space.n:
        raise ArgumentError(f"center {center} is not a point of the space")
    if space.is_line and space._ranks is None:
        c = space.coords
        x = c[center]
        return SubsetMask.from_range(space.n, bisect_right(c, x - eps), bisect_left(c, x + eps))
    return SubsetMask.from_array(space.ranks[center] < space.rank_below(eps))


def _line_sausage(space, idx, delta, lo_strict=False):
    c = space.coords
    bits = 0
    hi_seen = -1
    for i in idx:
        x = c[i]
        lo = bisect_left(c, x - delta)
        hi = bisect_right(c, x + delta)
        lo = max(lo, hi_seen)
        if hi > lo:
            bits |= ((1 << (hi - lo)) - 1) << lo
            hi_seen = hi
    return SubsetMask(bits, space.n)


def minkowski_sausage(space: FiniteMetricSpace, subset: SubsetMask, delta) -> SubsetMask:
    """Closed sausage ``{x : d(x, subset) <= delta}``."""
    delta = as_fraction(delta)
    if delta < 0:
        raise ArgumentError("delta must be non-negative")
    if subset.is_empty():
        raise ArgumentError("sausage of an empty subset")
    if space.is_line and space._ranks is None:
        return _line_sausage(space, subset.indices(), delta)
    rows = space.ranks[subset.indices()]
    return SubsetMask.from_array((rows < space.rank_upto(delta)).any(axis=0))


def boundary(space: FiniteMetricSpace, subset: SubsetMask, h) -> SubsetMask:
    """Boundary at resolution ``h``: points within ``h`` of both the subset and its complement."""
    h = _positive(h, "h")
    if subset.is_empty() or subset.is_full():
        return space.empty()
    return minkowski_sausage(space, subset, h) & minkowski_sausage(space, subset.complement(), h)


def distance_to_set(space: FiniteMetricSpace, subset: SubsetMask) -> list:
    """``d(x, subset)`` for every point ``x`` (exact)."""
    if subset.is_empty():
        raise ArgumentError("distance to an empty set")
    if space.is_line and space._ranks is None:
        c = space.coords
        pts = [c[i] for i in subset.indices()]
        out = []
        for x in c:
            k = bisect_left(pts, x)
            best = None
            if k < len(pts):
                best = pts[k] - x
            if k > 0:
                d = x - pts[k - 1]
                best = d if best is None or d < best else best
            out.append(best)
        return out
    mins = space.ranks[subset.indices()].min(axis=0)
    vals = space.values
    return [vals[r] for r in mins.tolist()]


def hausdorff_distance(space: FiniteMetricSpace, a: SubsetMask, b: SubsetMask) -> Fraction:
    """Hausdorff distance between two nonempty subsets."""
    if a.is_empty() or b.is_empty():
        raise ArgumentError("Hausdorff distance needs nonempty operands")
    sub = space.ranks[np.ix_(a.indices(), b.indices())]
    return space.values[int(max(sub.min(axis=1).max(), sub.min(axis=0).max()))]


def _merge_values(*value_lists):
    merged = sorted(set().union(*value_lists))
    index = {v: r for r, v in enumerate(merged)}
    maps = [np.array([index[v] for v in vals], dtype=np.int32) for vals in value_lists]
    return merged, maps


def product(s1: FiniteMetricSpace, s2: FiniteMetricSpace, cap: int = DEFAULT_PRODUCT_CAP) -> FiniteMetricSpace:
    """Cartesian product with the sup metric.

    Point ``(i, j)`` is labelled ``"(label_i,label_j)"``; ``result.pairs[k]``
    gives the factor indices of point ``k``.
    """
    n1, n2 = s1.n, s2.n
    if n1 * n2 > cap:
        raise ResourceError(f"product of {n1}x{n2} = {n1 * n2} points exceeds the cap of {cap}")
    merged, (m1, m2) = _merge_values(s1.values, s2.values)
    r1 = m1[s1.ranks]
    r2 = m2[s2.ranks]
    ranks = np.maximum(r1[:, None, :, None], r2[None, :, None, :]).reshape(n1 * n2, n1 * n2)
    pairs = [(i, j) for i in range(n1) for j in range(n2)]
    labels = [f"({s1.labels[i]},{s2.labels[j]})" for i, j in pairs]
    order = sorted(range(len(labels)), key=labels.__getitem__)
    ranks = np.ascontiguousarray(ranks[np.ix_(order, order)])
    return FiniteMetricSpace(
        [labels[k] for k in order], merged, ranks, pairs=[pairs[k] for k in order]
    )


def product_mask(prod: FiniteMetricSpace, a: SubsetMask, b: SubsetMask) -> SubsetMask:
    """Mask of ``a x b`` inside a space built by :func:`product`."""
    return SubsetMask.from_array([(i in a) and (j in b) for i, j in prod.pairs])


def restrict(space: FiniteMetricSpace, subset: SubsetMask) -> FiniteMetricSpace:
    """Subspace on ``subset`` with the induced distance; ``parent_index`` maps back."""
    if subset.is_empty():
        raise ArgumentError("cannot restrict to an empty subset")
    idx = subset.indices()
    labels = [space.labels[i] for i in idx]
    if space.is_line and space._ranks is None:
        return FiniteMetricSpace(labels, None, None, coords=[space.coords[i] for i in idx], parent_index=idx)
    sub = space.ranks[np.ix_(idx, idx)]
    used = np.unique(sub)
    remap = np.full(len(space.values), -1, dtype=np.int32)
    remap[used] = np.arange(len(used), dtype=np.int32)
    coords = [space.coords[i] for i in idx] if space.is_line else None
    return FiniteMetricSpace(
        labels,
        [space.values[int(u)] for u in used],
        np.ascontiguousarray(remap[sub]),
        coords=coords,
        parent_index=idx,
    )


# ---------------------------------------------------------------------------
# Maps
# ---------------------------------------------------------------------------


class MapKind(str, enum.Enum):
    ISOMETRY = "isometry"
    ONE_COERCIVE = "one_coercive"
    NEITHER = "neither"


@dataclass(frozen=True)
class MapTable:
    """Partial map between two spaces, as ``(source_index, target_index)`` pairs."""

    pairs: tuple
    source_size: int
    target_size: int
    _lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pairs = tuple(sorted((int(i), int(j)) for i, j in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        lookup = dict(pairs)
        if len(lookup) != len(pairs):
            raise StructuralError("map assigns two images to one point")
        object.__setattr__(self, "_lookup", lookup)

    @classmethod
    def from_dict(cls, mapping: dict, source: FiniteMetricSpace, target: FiniteMetricSpace) -> MapTable:
        return cls(tuple(mapping.items()), source.n, target.n)

    @classmethod
    def identity(cls, space: FiniteMetricSpace) -> MapTable:
        return cls(tuple((i, i) for i in range(space.n)), space.n, space.n)

    @classmethod
    def from_coordinate_function(cls, source, target, fn, domain: SubsetMask | None = None) -> MapTable:
        """Map line points ``x -> fn(x)``; every image must be a point of ``target``."""
        if not (source.is_line and target.is_line):
            raise ArgumentError("coordinate maps need line spaces")
        dom = domain.indices() if domain is not None else range(source.n)
        tc = target.coords
        pairs = []
        for i in dom:
            y = as_fraction(fn(source.coords[i]))
            k = bisect_left(tc, y)
            if k >= len(tc) or tc[k] != y:
                raise StructuralError(f"image {format_fraction(y)} is not a point of the target")
            pairs.append((i, k))
        return cls(tuple(pairs), source.n, target.n)

    @property
    def domain(self) -> SubsetMask:
        return SubsetMask.from_indices(self.source_size, (i for i, _ in self.pairs))

    def __call__(self, i: int) -> int:
        return self._lookup[i]

    def image(self, subset: SubsetMask) -> SubsetMask:
        """Image of ``subset`` (which must lie inside the domain)."""
        try:
            return SubsetMask.from_indices(self.target_size, (self._lookup[i] for i in subset.indices()))
        except KeyError as exc:
            raise ArgumentError(f"point {exc.args[0]} is outside the map's domain") from None

    def preimage(self, subset: SubsetMask) -> SubsetMask:
        return SubsetMask.from_indices(self.source_size, (i for i, j in self.pairs if j in subset))

    def compose(self, other: MapTable) -> MapTable:
        """``other`` after ``self``."""
        pairs = [(i, other._lookup[j]) for i, j in self.pairs if j in other._lookup]
        return MapTable(tuple(pairs), self.source_size, other.target_size)


def check_map(source: FiniteMetricSpace, target: FiniteMetricSpace, table: MapTable) -> MapKind:
    """Classify a partial map by how it treats pairwise distances."""
    if table.source_size != source.n or table.target_size != target.n:
        raise StructuralError("map table does not match the given spaces")
    for i, j in table.pairs:
        if not 0 <= i < source.n:
            raise StructuralError(f"domain point {i} is outside the source")
        if not 0 <= j < target.n:
            raise StructuralError(f"image point {j} is outside the target")
    dom = [i for i, _ in table.pairs]
    img = [j for _, j in table.pairs]
    if len(dom) < 2:
        return MapKind.ISOMETRY
    if source.is_line and target.is_line and len(dom) > 2000:
        raise ResourceError("map check on more than 2000 line points")
    merged, (ms, mt) = _merge_values(source.values, target.values)
    ds = ms[source.ranks[np.ix_(dom, dom)]]
    dt = mt[target.ranks[np.ix_(img, img)]]
    if np.array_equal(ds, dt):
        return MapKind.ISOMETRY
    if (dt >= ds).all():
        return MapKind.ONE_COERCIVE
    return MapKind.NEITHER


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def space_to_json(space: FiniteMetricSpace, subsets: dict | None = None) -> dict:
    """Serialize a space (and optional named masks) to the JSON schema.

    Line spaces are written with ``"kind": "points"`` unless they are small
    enough for an explicit matrix; both kinds load back with
    :func:`space_from_json`.
    """
    if space.is_line and space.n > 64:
        metric = {"kind": "points", "values": [format_fraction(x) for x in space.coords]}
    else:
        metric = {
            "kind": "matrix",
            "values": [[format_fraction(x) for x in row] for row in space.dist_table()],
        }
    out = {"labels": list(space.labels), "metric": metric}
    if subsets:
        out["subsets"] = {
            name: [space.labels[i] for i in m.indices()] for name, m in subsets.items()
        }
    return out


def space_from_json(data) -> tuple[FiniteMetricSpace, dict]:
    """Load a space from a JSON document (dict, str or path-like).

    Returns ``(space, subsets)``; the loader validates the metric and raises
    :class:`MetricValidationError` carrying the violation list.
    """
    if isinstance(data, (str, bytes)) and not str(data).lstrip().startswith("{"):
        with open(data) as fh:
            data = json.load(fh)
    elif isinstance(data, (str, bytes)):
        data = json.loads(data)
    elif hasattr(data, "read_text"):
        data = json.loads(data.read_text())
    try:
        labels = data["labels"]
        metric = data["metric"]
        kind = metric["kind"]
        values = metric["values"]
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"space JSON is missing {exc}") from None
    if kind == "matrix":
        space = FiniteMetricSpace.from_matrix(labels, values)
    elif kind == "points":
        space = FiniteMetricSpace.from_points(values, labels)
    else:
        raise StructuralError(f"unknown metric kind {kind!r}")
    subsets = {name: space.mask(items) for name, items in data.get("subsets", {}).items()}
    return space, subsets
