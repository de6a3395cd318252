"""Concrete compact spaces in exact rational form.

Every generator returns a :class:`GallerySpace`: the space itself (a
:class:`~covering_measure.metric.FiniteMetricSpace` or a
:class:`~covering_measure.intervals.RationalIntervalUnion`) plus named
distinguished subsets and JSON-friendly metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exceptions import ArgumentError, ResourceError, StructuralError
from .intervals import RationalIntervalUnion, complement_closure, normalize, sample_points, union_to_json
from .metric import (
    DEFAULT_PRODUCT_CAP,
    FiniteMetricSpace,
    MapTable,
    SubsetMask,
    product,
    space_to_json,
)
from .rational import as_fraction, format_fraction

__all__ = [
    "GallerySpace",
    "SpaceSpec",
    "VARIANTS",
    "generate",
    "interval",
    "cantor_alternating",
    "cantor_widths",
    "counterexample_schedule",
    "harmonic",
    "two_cluster",
    "cyclic",
    "discrete",
    "fat_cantor",
    "product_space",
    "hyperspace",
    "hyperspace_map",
    "DEFAULT_SLACK",
    "HYPERSPACE_BASE_CAP",
    "LINE_POINT_CAP",
]

DEFAULT_SLACK = Fraction(1, 4225)
HYPERSPACE_BASE_CAP = 12
LINE_POINT_CAP = 2_000_000


@dataclass
class GallerySpace:
    name: str
    space: object
    subsets: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def is_union(self) -> bool:
        return isinstance(self.space, RationalIntervalUnion)

    def subset(self, name):
        try:
            return self.subsets[name]
        except KeyError:
            raise ArgumentError(f"{self.name} has no distinguished subset {name!r}") from None

    def to_json(self) -> dict:
        if self.is_union:
            out = {"kind": "intervals", **union_to_json(self.space)}
            out["subsets"] = {k: union_to_json(v)["intervals"] for k, v in self.subsets.items()}
        else:
            out = space_to_json(self.space, self.subsets)
        out["name"] = self.name
        if self.meta:
            out["meta"] = _jsonable(self.meta)
        return out


def _jsonable(x):
    if isinstance(x, Fraction):
        return format_fraction(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# ---------------------------------------------------------------------------
# Intervals and sequence spaces
# ---------------------------------------------------------------------------


def interval(pitch=None, lo=0, hi=1) -> GallerySpace:
    """``[lo, hi]`` as an exact union, or its grid sample when ``pitch`` is given."""
    lo, hi = as_fraction(lo), as_fraction(hi)
    if lo > hi:
        raise ArgumentError("interval needs lo <= hi")
    union = normalize([(lo, hi)])
    if pitch is None:
        return GallerySpace("interval", union, meta={"lo": lo, "hi": hi})
    pts = sample_points(union, pitch, LINE_POINT_CAP)
    return GallerySpace(
        "interval",
        FiniteMetricSpace.from_points(pts),
        meta={"lo": lo, "hi": hi, "pitch": as_fraction(pitch)},
    )


def _check_count(n, what):
    if n < 1:
        raise ArgumentError(f"{what} must be positive")
    if n > LINE_POINT_CAP:
        raise ResourceError(f"{what}={n} exceeds the cap of {LINE_POINT_CAP}")


def harmonic(n_max: int) -> GallerySpace:
    """``{0} | {1/n : 1 <= n <= n_max}``.

    The smallest gap is about ``1/n_max**2``; ``meta["eps_floor"]`` marks the
    finest radius at which the truncation still behaves like the full space.
    """
    _check_count(n_max, "n_max")
    pts = [Fraction(0)] + [Fraction(1, n) for n in range(n_max, 0, -1)]
    space = FiniteMetricSpace.from_points(pts)
    return GallerySpace(
        "harmonic",
        space,
        subsets={"limit_point": space.mask([0])},
        meta={"n_max": n_max, "eps_floor": Fraction(2, n_max * n_max)},
    )


def two_cluster(n_max: int) -> GallerySpace:
    """``{0} | {1/n : n <= n_max} | {1 + 1/(2n) : n <= n_max}``.

    ``cluster0`` holds ``0`` and ``1/n`` for ``n >= 2``; ``cluster1`` holds
    ``1`` and ``1 + 1/(2n)``. The clusters are exactly ``1/2`` apart.
    """
    _check_count(n_max, "n_max")
    c0 = [Fraction(0)] + [Fraction(1, n) for n in range(n_max, 1, -1)]
    c1 = [Fraction(1)] + [1 + Fraction(1, 2 * n) for n in range(n_max, 0, -1)]
    space = FiniteMetricSpace.from_points(c0 + c1)
    n0 = len(c0)
    return GallerySpace(
        "two_cluster",
        space,
        subsets={
            "cluster0": SubsetMask.from_range(space.n, 0, n0),
            "cluster1": SubsetMask.from_range(space.n, n0, space.n),
            "limit_points": space.mask([0, n0]),
            "zero": space.mask([0]),
            "one": space.mask([n0]),
        },
        meta={"n_max": n_max, "eps_floor": Fraction(2, n_max * n_max)},
    )


# ---------------------------------------------------------------------------
# Alternating Cantor construction
# ---------------------------------------------------------------------------


def cantor_widths(depth: int, bases=(13, 5), children=(7, 3), slack=DEFAULT_SLACK) -> list:
    """Relative widths ``alpha_j`` (interval width over scale) per level.

    Level ``j`` splits every level ``j-1`` interval into ``children[(j-1) % 2]``
    equal, evenly spaced closed intervals; the scale shrinks by
    ``bases[(j-1) % 2]``. Width is pushed as high as the gap constraint
    ``gap >= scale`` allows, capped at ``2 - slack`` so that one open ball of
    radius ``scale`` centred at the midpoint covers an interval.
    """
    slack = as_fraction(slack)
    if not 0 < slack < 1:
        raise ArgumentError("slack must lie in (0, 1)")
    alphas = [Fraction(1)]
    for j in range(1, depth + 1):
        r = bases[(j - 1) % 2]
        c = children[(j - 1) % 2]
        gap_bound = (r * alphas[-1] - (c - 1)) / c if c > 1 else Fraction(2)
        a = min(gap_bound, 2 - slack)
        if a <= 0:
            raise StructuralError(
                f"depth {depth} is not realizable with children {tuple(children)}: "
                f"no room for level {j} (slack {format_fraction(slack)})"
            )
        alphas.append(a)
    return alphas


def _printed_widths(depth, bases, shrink_base):
    # literal half-widths: scale/2 - shrink_base**-(k+1) at level n = 2k+1 or 2k+2
    alphas = [Fraction(1)]
    scale = Fraction(1)
    for j in range(1, depth + 1):
        scale /= bases[(j - 1) % 2]
        k = (j - 1) // 2
        half = scale / 2 - Fraction(1, shrink_base ** (k + 1))
        if half <= 0:
            raise StructuralError(
                f"printed margin 1/{shrink_base}^{k + 1} exceeds the half-width "
                f"{format_fraction(scale / 2)} at level {j}; the literal construction is empty"
            )
        alphas.append(2 * half / scale)
    return alphas


def _alternating_intervals(depth, bases, children, alphas):
    level = [(Fraction(0), Fraction(1))]
    scale = Fraction(1)
    for j in range(1, depth + 1):
        scale /= bases[(j - 1) % 2]
        c = children[(j - 1) % 2]
        width = alphas[j] * scale
        nxt = []
        for a, b in level:
            step = (b - a - width) / (c - 1) if c > 1 else Fraction(0)
            if c == 1:
                mid = (a + b) / 2
                nxt.append((mid - width / 2, mid + width / 2))
                continue
            nxt.extend((a + i * step, a + i * step + width) for i in range(c))
        level = nxt
    return RationalIntervalUnion(tuple(level))


def cantor_alternating(depth: int, bases=(13, 5), children=(7, 3), slack=DEFAULT_SLACK, shrink_base=None) -> GallerySpace:
    """Two alternating Cantor-type sets with a non-convergent covering ratio.

    ``A`` keeps ``children[0]`` of ``bases[0]`` pieces at odd levels and
    ``children[1]`` of ``bases[1]`` at even levels; ``B`` runs the same scales
    with the child counts swapped and is shifted by 2. Distinguished subsets
    are ``A`` and ``B``; the space is their union ``K``.

    Tuning: ``A`` uses the exact odd-position tiling (width = gap = scale),
    which meets every constraint with equality. ``B`` cannot: after a level
    keeping 3 of 13 pieces its children must be wider than the scale, which
    eats into the gaps of the following level. :func:`cantor_widths` picks the
    widest admissible intervals; with the default ``slack`` of ``1/4225`` this
    reaches depth 6 (depth 7 has no room at all). Passing ``shrink_base``
    instead applies the literal margin ``1/shrink_base^(k+1)`` to both sets;
    with the default bases it leaves nothing at level 2 and raises.
    """
    if depth < 1:
        raise ArgumentError("depth must be at least 1")
    if len(bases) != 2 or len(children) != 2 or min(bases) < 2 or min(children) < 1:
        raise ArgumentError("bases and children must be pairs of positive integers")
    if any(c % 2 == 0 for c in children):
        raise ArgumentError("child counts must be odd so every interval keeps its centre")
    if any(c > b for b, c in zip(bases, children)):
        raise ArgumentError("cannot keep more children than pieces")
    swapped = (children[1], children[0])
    if shrink_base is not None:
        alpha_a = alpha_b = _printed_widths(depth, bases, int(shrink_base))
    else:
        alpha_a = cantor_widths(depth, bases, children, slack)
        alpha_b = cantor_widths(depth, bases, swapped, slack)
    a = _alternating_intervals(depth, bases, children, alpha_a)
    b = _alternating_intervals(depth, bases, swapped, alpha_b).shift(2)
    return GallerySpace(
        "cantor_alternating",
        a.union(b),
        subsets={"A": a, "B": b},
        meta={
            "depth": depth,
            "bases": list(bases),
            "children": list(children),
            "alpha_A": alpha_a,
            "alpha_B": alpha_b,
            "schedule": counterexample_schedule((depth + 1) // 2)[:depth],
        },
    )


def counterexample_schedule(depth: int, bases=(13, 5)) -> list:
    """``1/13, 1/65, 1/845, 1/4225, ...``: ``2 * depth`` interleaved scales."""
    if depth < 1:
        raise ArgumentError("depth must be at least 1")
    out = []
    scale = Fraction(1)
    for j in range(2 * depth):
        scale /= bases[j % 2]
        out.append(scale)
    return out


def fat_cantor(depth: int) -> GallerySpace:
    """Stage ``depth`` of the middle-removal set of total length 1/2.

    Step ``n`` removes an open middle interval of length ``4**-n`` from each
    of the ``2**(n-1)`` remaining intervals. ``subsets["gaps"]`` is the closure
    of the removed part, i.e. the complement's closure inside ``[0, 1]``.
    """
    if depth < 0:
        raise ArgumentError("depth must be non-negative")
    level = [(Fraction(0), Fraction(1))]
    for n in range(1, depth + 1):
        cut = Fraction(1, 4**n)
        nxt = []
        for a, b in level:
            mid = (a + b) / 2
            nxt += [(a, mid - cut / 2), (mid + cut / 2, b)]
        level = nxt
    kept = RationalIntervalUnion(tuple(level))
    ambient = normalize([(0, 1)])
    return GallerySpace(
        "fat_cantor",
        ambient,
        subsets={"kept": kept, "gaps": complement_closure(kept, ambient)},
        meta={"depth": depth, "kept_length": kept.length},
    )


# ---------------------------------------------------------------------------
# Finite metric spaces
# ---------------------------------------------------------------------------


def cyclic(m: int) -> GallerySpace:
    """``Z_m`` with the arc metric ``min(|i-j|, m-|i-j|) / m``; labels ``g0..``."""
    if m < 1:
        raise ArgumentError("m must be positive")
    if m > DEFAULT_PRODUCT_CAP:
        raise ResourceError(f"cyclic group of order {m} exceeds the cap of {DEFAULT_PRODUCT_CAP}")
    width = len(str(m - 1))
    i = np.arange(m)
    diff = np.abs(i[:, None] - i[None, :])
    steps = np.minimum(diff, m - diff)
    values = tuple(Fraction(k, m) for k in range(m // 2 + 1))
    space = FiniteMetricSpace([f"g{k:0{width}d}" for k in range(m)], values, steps.astype(np.int32))
    return GallerySpace("cyclic", space, meta={"m": m})


def rotation(space: FiniteMetricSpace, shift: int) -> MapTable:
    """The rotation ``i -> i + shift`` of a cyclic space."""
    m = space.n
    return MapTable(tuple((i, (i + shift) % m) for i in range(m)), m, m)


def discrete(n: int) -> GallerySpace:
    return GallerySpace("discrete", FiniteMetricSpace.discrete(n), meta={"n": n})


def product_space(g1: GallerySpace, g2: GallerySpace, cap: int = DEFAULT_PRODUCT_CAP) -> GallerySpace:
    if g1.is_union or g2.is_union:
        raise ArgumentError("products need finite factors; sample interval unions first")
    space = product(g1.space, g2.space, cap)
    return GallerySpace(f"product({g1.name},{g2.name})", space, meta={"factors": [g1.name, g2.name]})


def _hausdorff_ranks(ranks: np.ndarray) -> np.ndarray:
    n = ranks.shape[0]
    size = 1 << n
    # dmin[U, x] = min distance rank from x to U, built by adding the low bit
    dmin = np.zeros((size, n), dtype=ranks.dtype)
    dmin[0] = np.iinfo(ranks.dtype).max
    for k in range(n):
        lo, hi = 1 << k, 1 << (k + 1)
        dmin[lo:hi] = np.minimum(dmin[0 : hi - lo], ranks[k])
    dmin = dmin[1:]
    # directed[U, V] = max over x in V of dmin[U, x]
    m = size - 1
    directed = np.zeros((m, size), dtype=ranks.dtype)
    for k in range(n):
        lo, hi = 1 << k, 1 << (k + 1)
        directed[:, lo:hi] = np.maximum(directed[:, 0 : hi - lo], dmin[:, k : k + 1])
    directed = directed[:, 1:]
    return np.maximum(directed, directed.T)


def hyperspace(base: GallerySpace, cap: int = HYPERSPACE_BASE_CAP) -> GallerySpace:
    """All nonempty subsets of a finite base space under the Hausdorff distance.

    Point ``U`` is stored at index ``bits(U) - 1``; ``meta["members"]`` lists
    the base indices of each point and labels read ``{a,b,...}``.
    """
    if base.is_union:
        raise ArgumentError("hyperspace needs a finite base space")
    b = base.space
    if b.n > cap:
        raise ResourceError(f"hyperspace base of {b.n} points exceeds the cap of {cap}")
    h = _hausdorff_ranks(b.ranks.astype(np.int32))
    members = [tuple(i for i in range(b.n) if bits >> i & 1) for bits in range(1, 1 << b.n)]
    labels = ["{" + ",".join(b.labels[i] for i in mem) + "}" for mem in members]
    used = np.unique(h)
    remap = np.zeros(int(used.max()) + 1, dtype=np.int32)
    remap[used] = np.arange(len(used), dtype=np.int32)
    values = tuple(b.values[int(u)] for u in used)
    space = FiniteMetricSpace(labels, values, remap[h])
    singletons = SubsetMask.from_indices(space.n, ((1 << i) - 1 for i in range(b.n)))
    return GallerySpace(
        f"hyperspace({base.name})",
        space,
        subsets={"singletons": singletons},
        meta={"base": base.name, "members": members},
    )


def hyperspace_map(base_map: MapTable, base_size: int) -> MapTable:
    """Map ``U -> f(U)`` induced on the hyperspace by a total map of the base."""
    if len(base_map.pairs) != base_size:
        raise ArgumentError("the induced map needs a total base map")
    f = dict(base_map.pairs)
    pairs = []
    for bits in range(1, 1 << base_size):
        img = 0
        for i in range(base_size):
            if bits >> i & 1:
                img |= 1 << f[i]
        pairs.append((bits - 1, img - 1))
    size = (1 << base_size) - 1
    tsize = (1 << base_map.target_size) - 1
    return MapTable(tuple(pairs), size, tsize)


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------

VARIANTS = {
    "interval": "interval(pitch=None, lo=0, hi=1): [lo,hi] as an exact union or a grid sample",
    "cantor_alternating": "cantor_alternating(depth, bases=[13,5], children=[7,3], slack=1/4225, shrink_base=null)",
    "harmonic": "harmonic(n_max): {0} and 1/n for n <= n_max",
    "two_cluster": "two_cluster(n_max): {0, 1/n} and {1, 1 + 1/(2n)}",
    "cyclic": "cyclic(m): Z_m with the normalized arc metric",
    "discrete": "discrete(n): n points pairwise at distance 1",
    "fat_cantor": "fat_cantor(depth): middle-removal set of total length 1/2 inside [0,1]",
    "product": "product(left, right): sup-metric product of two finite specs",
    "hyperspace": "hyperspace(base): nonempty subsets of a finite base (<= 12 points)",
}


@dataclass(frozen=True)
class SpaceSpec:
    variant: str
    params: dict = field(default_factory=dict)
    parts: tuple = ()

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ArgumentError(f"unknown gallery variant {self.variant!r}")
        want = {"product": 2, "hyperspace": 1}.get(self.variant, 0)
        if len(self.parts) != want:
            raise ArgumentError(f"{self.variant} takes {want} nested spec(s)")

    @classmethod
    def from_json(cls, data) -> SpaceSpec:
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict) or "variant" not in data:
            raise StructuralError("spec JSON needs a 'variant' field")
        data = dict(data)
        variant = data.pop("variant")
        parts = ()
        if variant == "product":
            parts = (cls.from_json(data.pop("left")), cls.from_json(data.pop("right")))
        elif variant == "hyperspace":
            parts = (cls.from_json(data.pop("base")),)
        return cls(variant, data, parts)

    def to_json(self) -> dict:
        out = {"variant": self.variant, **self.params}
        if self.variant == "product":
            out["left"], out["right"] = (p.to_json() for p in self.parts)
        elif self.variant == "hyperspace":
            out["base"] = self.parts[0].to_json()
        return out


def generate(spec: SpaceSpec | dict | str) -> GallerySpace:
    if not isinstance(spec, SpaceSpec):
        spec = SpaceSpec.from_json(spec)
    p = dict(spec.params)
    try:
        if spec.variant == "interval":
            return interval(p.get("pitch"), p.get("lo", 0), p.get("hi", 1))
        if spec.variant == "cantor_alternating":
            return cantor_alternating(
                int(p["depth"]),
                tuple(p.get("bases", (13, 5))),
                tuple(p.get("children", (7, 3))),
                p.get("slack", DEFAULT_SLACK),
                p.get("shrink_base"),
            )
        if spec.variant == "harmonic":
            return harmonic(int(p["n_max"]))
        if spec.variant == "two_cluster":
            return two_cluster(int(p["n_max"]))
        if spec.variant == "cyclic":
            return cyclic(int(p["m"]))
        if spec.variant == "discrete":
            return discrete(int(p["n"]))
        if spec.variant == "fat_cantor":
            return fat_cantor(int(p["depth"]))
        if spec.variant == "product":
            return product_space(generate(spec.parts[0]), generate(spec.parts[1]), int(p.get("cap", DEFAULT_PRODUCT_CAP)))
        return hyperspace(generate(spec.parts[0]), int(p.get("cap", HYPERSPACE_BASE_CAP)))
    except KeyError as exc:
        raise ArgumentError(f"{spec.variant} spec is missing parameter {exc}") from None
