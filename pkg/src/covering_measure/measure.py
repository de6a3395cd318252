"""Measure estimates built from covering-number ratios.

Every estimate is a nested limit: an outer parameter ``delta`` (sausage
radius) and, for each ``delta``, an inner ratio sequence over a descending
``eps`` schedule. Inner limits are bracketed by :mod:`covering_measure.limits`;
the outer one is extrapolated to ``delta -> 0`` from the last few values.

Spaces are either a :class:`~covering_measure.metric.FiniteMetricSpace` with
:class:`~covering_measure.metric.SubsetMask` subsets, or a
:class:`~covering_measure.intervals.RationalIntervalUnion` ambient with union
subsets (covered exactly by the 1-D sweep).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .covering import DEFAULT_BUDGET, SOLVERS, CoverCache, check_schedule
from .exceptions import ArgumentError, DegenerateConditionalError
from .intervals import RationalIntervalUnion, boundary_1d, erode_1d, sausage_1d
from .limits import LimitEstimate, LimitStrategy, RatioSequence, estimate_limit
from .metric import (
    FiniteMetricSpace,
    MapKind,
    MapTable,
    SubsetMask,
    boundary,
    check_map,
    distance_to_set,
    minkowski_sausage,
    restrict,
)
from .rational import as_fraction, format_fraction

__all__ = [
    "Schedule",
    "MeasureEstimate",
    "MembershipVerdict",
    "ConditionalReport",
    "HomogeneityResult",
    "InvarianceReport",
    "ratio_measure",
    "membership_in_M",
    "closed_measure",
    "borel_measure",
    "conditional_ratio",
    "homogeneity_classes",
    "invariance_report",
    "DEFAULT_MEMBERSHIP_TOLERANCE",
    "BALL_SEARCH_CAP",
]

DEFAULT_MEMBERSHIP_TOLERANCE = Fraction(1, 20)
BALL_SEARCH_CAP = 12
YES = "yes_at_tolerance"
NO = "no_at_tolerance"
INCONCLUSIVE = "inconclusive"


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


def _geometric(start, ratio, steps):
    start, ratio = as_fraction(start), as_fraction(ratio)
    if start <= 0 or not 0 < ratio < 1:
        raise ArgumentError("geometric schedules need start > 0 and 0 < ratio < 1")
    if steps < 1:
        raise ArgumentError("schedules need at least one step")
    return tuple(start * ratio**j for j in range(steps))


@dataclass(frozen=True)
class Schedule:
    """``eps`` and ``delta`` schedules plus the inner limit strategy.

    ``extrapolation`` controls the outer limit: ``"linear"`` fits a line in
    ``delta`` through the last ``fit_points`` values and takes its intercept
    (clamped between 0 and the last value), ``"last"`` takes the value at the
    smallest ``delta``.
    """

    eps: tuple
    delta: tuple = ()
    strategy: LimitStrategy = field(default_factory=LimitStrategy.classical)
    extrapolation: str = "linear"
    fit_points: int = 3

    def __post_init__(self):
        eps = check_schedule(self.eps)
        delta = tuple(as_fraction(d) for d in self.delta)
        if delta:
            check_schedule(delta)
            if min(delta) <= 2 * min(eps):
                raise ArgumentError(
                    f"every delta must exceed twice the smallest eps "
                    f"({format_fraction(2 * min(eps))})"
                )
        if self.extrapolation not in ("linear", "last"):
            raise ArgumentError("extrapolation must be 'linear' or 'last'")
        if self.fit_points < 2:
            raise ArgumentError("fit_points must be at least 2")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "delta", delta)

    @classmethod
    def geometric(
        cls,
        eps_start=Fraction(1, 8),
        eps_ratio=Fraction(1, 2),
        eps_steps=10,
        delta_start=Fraction(1, 4),
        delta_ratio=Fraction(1, 2),
        delta_steps=5,
        strategy: LimitStrategy | None = None,
        extrapolation: str = "linear",
    ) -> Schedule:
        return cls(
            _geometric(eps_start, eps_ratio, eps_steps),
            _geometric(delta_start, delta_ratio, delta_steps) if delta_steps else (),
            strategy or LimitStrategy.classical(),
            extrapolation,
        )

    def describe(self) -> str:
        """Strategy string for estimate JSON: inner limit rule, then outer rule."""
        return f"eps:{self.strategy.describe()}; delta:{self.extrapolation}"

    def require_delta(self):
        if not self.delta:
            raise ArgumentError("this estimate needs a delta schedule")

    def to_json(self) -> dict:
        return {
            "eps": [format_fraction(e) for e in self.eps],
            "delta": [format_fraction(d) for d in self.delta],
            "strategy": self.strategy.describe(),
            "extrapolation": self.extrapolation,
        }


# ---------------------------------------------------------------------------
# Geometry adapter
# ---------------------------------------------------------------------------


class _Geometry:
    """Uniform set operations over finite spaces and interval unions."""

    def __init__(self, space, solver="auto", budget=DEFAULT_BUDGET, cache=None):
        if hasattr(space, "space") and hasattr(space, "subsets"):
            space = space.space
        if not isinstance(space, (FiniteMetricSpace, RationalIntervalUnion)):
            raise ArgumentError("expected a finite metric space or an interval union")
        if solver not in SOLVERS:
            raise ArgumentError(f"unknown solver {solver!r}")
        self.space = space
        self.is_union = isinstance(space, RationalIntervalUnion)
        self.cache = cache if cache is not None else CoverCache(space, solver, budget)

    @property
    def full(self):
        return self.space if self.is_union else self.space.full()

    def check(self, subset):
        if self.is_union:
            if not isinstance(subset, RationalIntervalUnion):
                raise ArgumentError("subsets of an interval union must be interval unions")
            if not subset.issubset(self.space):
                raise ArgumentError("subset is not contained in the ambient union")
        else:
            if not isinstance(subset, SubsetMask) or subset.size != self.space.n:
                raise ArgumentError("subset mask does not match the space")
        return subset

    def is_empty(self, subset) -> bool:
        return subset.is_empty()

    def is_full(self, subset) -> bool:
        return subset == self.space if self.is_union else subset.is_full()

    def count(self, subset, eps) -> int:
        if subset.is_empty():
            return 0
        return self.cache.count(subset, eps).size

    def exact(self, subset, eps) -> bool:
        return subset.is_empty() or self.cache.count(subset, eps).is_exact

    def sausage(self, subset, delta):
        if subset.is_empty():
            return subset
        if self.is_union:
            return sausage_1d(subset, delta, self.space)
        return minkowski_sausage(self.space, subset, delta)

    def boundary(self, subset, h):
        if self.is_union:
            return boundary_1d(subset, self.space)
        return boundary(self.space, subset, h)

    def erode(self, subset, r):
        r = as_fraction(r)
        if r == 0 or subset.is_empty():
            return subset
        if self.is_union:
            return erode_1d(subset, r, self.space)
        comp = subset.complement()
        if comp.is_empty():
            return subset
        dist = distance_to_set(self.space, comp)
        return SubsetMask.from_indices(self.space.n, (i for i in subset.indices() if dist[i] >= r))

    def describe(self, subset):
        if self.is_union:
            return [[format_fraction(a), format_fraction(b)] for a, b in subset.intervals]
        return [self.space.labels[i] for i in subset.indices()]


def _sequence(geo: _Geometry, subset, eps_schedule) -> tuple[RatioSequence, bool]:
    ratios = []
    exact = True
    for eps in eps_schedule:
        k = geo.count(geo.full, eps)
        ratios.append(Fraction(geo.count(subset, eps), k))
        exact = exact and geo.exact(subset, eps) and geo.exact(geo.full, eps)
    return RatioSequence(tuple(eps_schedule), tuple(ratios)), exact


# ---------------------------------------------------------------------------
# Estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaTrace:
    delta: Fraction
    estimate: LimitEstimate
    ratios: RatioSequence

    def value(self) -> Fraction:
        v = self.estimate.value
        return v if v is not None else self.estimate.midpoint

    def to_json(self) -> dict:
        return {
            "delta": format_fraction(self.delta),
            "estimate": self.estimate.to_json(),
            "ratios": [
                {"epsilon": format_fraction(e), "ratio": format_fraction(r)}
                for e, r in zip(self.ratios.eps, self.ratios.values)
            ],
        }


@dataclass(frozen=True)
class MeasureEstimate:
    lower: Fraction
    upper: Fraction
    converged: bool
    point: Fraction | None = None
    per_delta: tuple = ()
    witness: object = None
    direction: str = ""
    exact_counts: bool = True
    notes: tuple = ()
    strategy: str = ""

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper <= 1:
            raise ValueError(f"bracket [{self.lower}, {self.upper}] outside [0, 1]")
        if self.point is not None and not self.lower <= self.point <= self.upper:
            raise ValueError("point estimate outside its bracket")

    @property
    def value(self) -> Fraction:
        """Point estimate when present, else the bracket midpoint."""
        return self.point if self.point is not None else (self.lower + self.upper) / 2

    @classmethod
    def exact(cls, x, direction="exact") -> MeasureEstimate:
        x = Fraction(x)
        return cls(x, x, True, x, direction=direction)

    def to_json(self) -> dict:
        out = {
            "lower": format_fraction(self.lower),
            "upper": format_fraction(self.upper),
            "converged": self.converged,
        }
        if self.point is not None:
            out["value"] = format_fraction(self.point)
            out["value_f64"] = float(self.point)
        out["strategy"] = self.strategy or "exact"
        if self.direction:
            out["direction"] = self.direction
        out["exact_counts"] = self.exact_counts
        if self.witness is not None:
            out["witness"] = self.witness
        if self.notes:
            out["notes"] = list(self.notes)
        out["per_delta"] = [t.to_json() for t in self.per_delta]
        return out


def _clamp01(x: Fraction) -> Fraction:
    return min(max(x, Fraction(0)), Fraction(1))


def _fit_intercept(xs, ys) -> Fraction:
    n = len(xs)
    mx = sum(xs, Fraction(0)) / n
    my = sum(ys, Fraction(0)) / n
    sxx = sum(((x - mx) ** 2 for x in xs), Fraction(0))
    if sxx == 0:
        return my
    slope = sum(((x - mx) * (y - my) for x, y in zip(xs, ys)), Fraction(0)) / sxx
    return my - slope * mx


def _outer_limit(traces: list[DeltaTrace], schedule: Schedule, decreasing: bool, settled: bool = False):
    """Extrapolate ``delta -> 0`` from the per-delta values.

    Returns ``(value, trend_ok)``. Sausage estimates shrink with ``delta``, so
    for ``decreasing`` traces the extrapolated value is clamped below the last
    observed value. ``settled`` means the smallest sausage already equals the
    set itself; every smaller ``delta`` gives the same value, so it is the limit.
    """
    values = [t.value() for t in traces]
    last = values[-1]
    if settled:
        return _clamp01(last), True
    k = min(schedule.fit_points, len(values))
    tail = values[-k:]
    if decreasing:
        trend_ok = all(b <= a for a, b in zip(tail, tail[1:]))
    else:
        trend_ok = all(b >= a for a, b in zip(tail, tail[1:]))
    if schedule.extrapolation == "last" or k < 2 or not trend_ok:
        return _clamp01(last), trend_ok
    value = _fit_intercept([t.delta for t in traces[-k:]], tail)
    value = _clamp01(value)
    if decreasing:
        value = min(value, last)
    return value, trend_ok


def ratio_measure(space, subset, schedule: Schedule, *, closed: bool = True, solver="auto", budget=DEFAULT_BUDGET, cache=None) -> MeasureEstimate:
    """Limit of ``N(subset; eps) / N(space; eps)`` without sausages.

    For a closed subset the value sits on the lower side of the measure, for
    an open one on the upper side; ``direction`` records which.
    """
    geo = _Geometry(space, solver, budget, cache)
    subset = geo.check(subset)
    direction = "lower-side (closed subset)" if closed else "upper-side (open subset)"
    if subset.is_empty():
        return MeasureEstimate.exact(0, direction)
    seq, exact = _sequence(geo, subset, schedule.eps)
    est = estimate_limit(seq, schedule.strategy)
    trace = DeltaTrace(Fraction(0), est, seq)
    return MeasureEstimate(
        est.lower, est.upper, est.converged, est.value, (trace,), direction=direction, exact_counts=exact,
        strategy=f"eps:{schedule.strategy.describe()}",
    )


def closed_measure(space, closed_subset, schedule: Schedule, *, solver="auto", budget=DEFAULT_BUDGET, cache=None) -> MeasureEstimate:
    """Outer estimate ``lim_delta L_eps N(F^delta; eps) / N(K; eps)`` for closed ``F``."""
    schedule.require_delta()
    geo = _Geometry(space, solver, budget, cache)
    subset = geo.check(closed_subset)
    if subset.is_empty():
        return MeasureEstimate.exact(0, "outer")
    if geo.is_full(subset):
        return MeasureEstimate.exact(1, "outer")
    traces = []
    exact = True
    for delta in schedule.delta:
        grown = geo.sausage(subset, delta)
        seq, ok = _sequence(geo, grown, schedule.eps)
        exact = exact and ok
        traces.append(DeltaTrace(delta, estimate_limit(seq, schedule.strategy), seq))
    return _combine(traces, schedule, exact, decreasing=True, direction="outer", settled=grown == subset)


def _combine(traces, schedule, exact, decreasing, direction, witness=None, settled=False) -> MeasureEstimate:
    value, trend_ok = _outer_limit(traces, schedule, decreasing, settled)
    k = min(schedule.fit_points, len(traces))
    tail = traces[-k:]
    converged = all(t.estimate.converged for t in tail) and trend_ok
    last = traces[-1].estimate
    lower = _clamp01(min(value, last.lower))
    upper = _clamp01(max(value, last.upper))
    notes = () if trend_ok else ("delta trend not monotone; fell back to the last value",)
    return MeasureEstimate(
        lower,
        upper,
        converged,
        value if converged else None,
        tuple(traces),
        witness,
        direction,
        exact,
        notes,
        schedule.describe(),
    )


@dataclass(frozen=True)
class MembershipVerdict:
    in_M: str
    trace: tuple
    tolerance: Fraction
    bound: Fraction | None = None
    extrapolated: Fraction | None = None

    def to_json(self) -> dict:
        out = {"in_M": self.in_M, "tolerance": format_fraction(self.tolerance)}
        if self.bound is not None:
            out["lower_bound"] = format_fraction(self.bound)
        if self.extrapolated is not None:
            out["extrapolated"] = format_fraction(self.extrapolated)
        out["trace"] = [t.to_json() for t in self.trace]
        return out


def membership_in_M(space, subset, schedule: Schedule, tolerance=DEFAULT_MEMBERSHIP_TOLERANCE, *, resolution=None, solver="auto", budget=DEFAULT_BUDGET, cache=None) -> MembershipVerdict:
    """Tolerance-graded test of the null-boundary condition.

    Traces ``L_eps N(Fr^delta; eps) / N(K; eps)`` over the delta schedule.
    For interval unions the boundary is exact. A finite space is discrete, so
    its subsets have empty boundary; points sampled on a line stand for a
    continuum instead, and there the boundary is the set of points within
    ``resolution`` of both the subset and its complement (default: the
    smallest positive distance). Passing ``resolution`` forces that proxy on
    any finite space.

    ``yes`` needs the last traced upper bound within ``tolerance``. ``no``
    needs every lower bound on the second half of the trace above
    ``tolerance`` and the extrapolation to ``delta -> 0`` above it as well,
    so a trace that is still shrinking towards 0 is reported inconclusive.
    """
    schedule.require_delta()
    tolerance = as_fraction(tolerance)
    if tolerance <= 0:
        raise ArgumentError("tolerance must be positive")
    geo = _Geometry(space, solver, budget, cache)
    subset = geo.check(subset)
    if geo.is_union:
        fr = geo.boundary(subset, None)
    elif subset.is_empty() or subset.is_full():
        fr = geo.space.empty()
    elif resolution is None and not geo.space.is_line:
        # every subset of a finite space is clopen
        fr = geo.space.empty()
    else:
        h = as_fraction(resolution) if resolution is not None else geo.space.min_positive_distance()
        fr = geo.boundary(subset, h)
    traces = []
    grown = fr
    for delta in schedule.delta:
        if fr.is_empty():
            zeros = RatioSequence(schedule.eps, (Fraction(0),) * len(schedule.eps))
            est = LimitEstimate(Fraction(0), Fraction(0), True, Fraction(0), len(schedule.eps), "exact")
            traces.append(DeltaTrace(delta, est, zeros))
            continue
        grown = geo.sausage(fr, delta)
        seq, _ = _sequence(geo, grown, schedule.eps)
        traces.append(DeltaTrace(delta, estimate_limit(seq, schedule.strategy), seq))
    extrapolated, _ = _outer_limit(traces, schedule, decreasing=True, settled=grown == fr)
    half = traces[len(traces) // 2 :]
    floor = min(t.estimate.lower for t in half)
    if traces[-1].estimate.upper <= tolerance:
        return MembershipVerdict(YES, tuple(traces), tolerance, None, extrapolated)
    if floor > tolerance and extrapolated > tolerance:
        return MembershipVerdict(NO, tuple(traces), tolerance, min(floor, extrapolated), extrapolated)
    return MembershipVerdict(INCONCLUSIVE, tuple(traces), tolerance, None, extrapolated)


def erosion_radii(schedule: Schedule) -> tuple:
    """0 and halvings of the largest delta down to half the smallest eps."""
    out = [Fraction(0)]
    r = max(schedule.delta)
    floor = min(schedule.eps) / 2
    while r >= floor:
        out.append(r)
        r /= 2
    return tuple(out)


def borel_measure(space, subset, schedule: Schedule, *, interior: bool = False, radii=None, check_membership: bool = True, solver="auto", budget=DEFAULT_BUDGET, cache=None) -> MeasureEstimate:
    """Inner-regular estimate from closed erosions of ``subset``.

    Candidates are ``{x in subset : d(x, complement) >= r}`` for ``r`` in
    ``radii`` (default: :func:`erosion_radii`). They form a nested family,
    so the supremum of the closed-set estimates is attained by the largest
    admissible member: the smallest radius whose eroded set is not rejected
    by :func:`membership_in_M`. Taking that member rather than the numerically
    largest estimate keeps discretization noise from biasing the result
    upwards. With ``interior=True`` an interval-union subset stands for its
    interior, so ``r = 0`` (the closure itself) is not a candidate. The
    chosen erosion is reported as the witness.
    """
    schedule.require_delta()
    geo = _Geometry(space, solver, budget, cache)
    subset = geo.check(subset)
    if subset.is_empty():
        return MeasureEstimate.exact(0, "inner")
    if geo.is_full(subset) and not interior:
        return MeasureEstimate.exact(1, "inner")
    if radii is None:
        radii = erosion_radii(schedule)
    radii = sorted({as_fraction(r) for r in radii})
    if interior:
        radii = [r for r in radii if r > 0]
    if not radii:
        raise ArgumentError("no erosion radius to try")
    chosen = None
    first = None
    seen = set()
    rejected = []
    for r in radii:
        f = geo.erode(subset, r)
        key = f.intervals if geo.is_union else f.bits
        if f.is_empty() or key in seen:
            continue
        seen.add(key)
        if first is None:
            first = (r, f)
        if check_membership and membership_in_M(geo.space, f, schedule, cache=geo.cache).in_M == NO:
            rejected.append(format_fraction(r))
            continue
        chosen = (r, f)
        break
    if first is None:
        return MeasureEstimate(Fraction(0), Fraction(0), True, Fraction(0), direction="inner", witness={"radius": None})
    notes = ()
    if chosen is None:
        chosen = first
        notes = ("every erosion failed the membership test; using the largest one",)
    r, f = chosen
    est = closed_measure(geo.space, f, schedule, cache=geo.cache)
    witness = {"radius": format_fraction(r), "set": geo.describe(f), "rejected_radii": rejected}
    return MeasureEstimate(
        est.lower, est.upper, est.converged, est.point, est.per_delta, witness, "inner", est.exact_counts, est.notes + notes, est.strategy
    )


# ---------------------------------------------------------------------------
# Conditional measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionalReport:
    mu_F_of_B: MeasureEstimate
    mu_K_of_B: MeasureEstimate
    mu_K_of_F: MeasureEstimate

    @property
    def ratio(self) -> Fraction:
        return self.mu_K_of_B.value / self.mu_K_of_F.value

    @property
    def difference(self) -> Fraction:
        return abs(self.mu_F_of_B.value - self.ratio)

    def to_json(self) -> dict:
        return {
            "mu_F_of_B": self.mu_F_of_B.to_json(),
            "mu_K_of_B": self.mu_K_of_B.to_json(),
            "mu_K_of_F": self.mu_K_of_F.to_json(),
            "ratio": format_fraction(self.ratio),
            "ratio_f64": float(self.ratio),
            "mu_F_of_B_f64": float(self.mu_F_of_B.value),
            "difference_f64": float(self.difference),
        }


def _restrict(geo: _Geometry, f, b):
    if geo.is_union:
        return f, b
    sub = restrict(geo.space, f)
    pos = {p: i for i, p in enumerate(sub.parent_index)}
    if not b.issubset(f):
        raise ArgumentError("B must be a subset of F")
    return sub, SubsetMask.from_indices(sub.n, (pos[i] for i in b.indices()))


def conditional_ratio(space, closed_F, subset_B, schedule: Schedule, *, null_threshold=Fraction(1, 100), solver="auto", budget=DEFAULT_BUDGET) -> ConditionalReport:
    """``mu_F(B)`` computed on ``F`` itself next to ``mu_K(B) / mu_K(F)``."""
    geo = _Geometry(space, solver, budget)
    f = geo.check(closed_F)
    b = geo.check(subset_B)
    if geo.is_union and not b.issubset(f):
        raise ArgumentError("B must be a subset of F")
    mu_f = borel_measure(geo.space, f, schedule, cache=geo.cache)
    # the bracket upper keeps about 2 * min(delta) even for a point, so the
    # null test uses the estimate itself
    if mu_f.value <= as_fraction(null_threshold):
        raise DegenerateConditionalError(
            f"mu_K(F) <= {format_fraction(as_fraction(null_threshold))}; conditioning is degenerate"
        )
    mu_b = borel_measure(geo.space, b, schedule, cache=geo.cache)
    sub_space, sub_b = _restrict(geo, f, b)
    mu_fb = borel_measure(sub_space, sub_b, schedule, solver=solver, budget=budget)
    return ConditionalReport(mu_fb, mu_b, mu_f)


# ---------------------------------------------------------------------------
# Homogeneity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomogeneityResult:
    classes: tuple
    inconclusive: tuple = ()
    radius: Fraction = Fraction(0)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def to_json(self) -> dict:
        return {
            "radius": format_fraction(self.radius),
            "classes": [list(c) for c in self.classes],
            "inconclusive_pairs": [list(p) for p in self.inconclusive],
        }


def _ball_isometric(ranks, bx, by, x, y) -> bool:
    # backtracking search for a bijection bx -> by fixing x -> y that
    # preserves all distance ranks
    if len(bx) != len(by):
        return False
    order = [x] + sorted((p for p in bx if p != x), key=lambda p: (ranks[x, p], p))
    targets = [q for q in by if q != y]
    mapped = [(x, y)]
    used = {y}

    def extend(k):
        if k == len(order):
            return True
        p = order[k]
        for q in targets:
            if q in used or ranks[y, q] != ranks[x, p]:
                continue
            if all(ranks[p, a] == ranks[q, b] for a, b in mapped):
                mapped.append((p, q))
                used.add(q)
                if extend(k + 1):
                    return True
                mapped.pop()
                used.discard(q)
        return False

    return extend(1)


def homogeneity_classes(space, radius, *, cap: int = BALL_SEARCH_CAP) -> HomogeneityResult:
    """Group points whose open balls of ``radius`` are isometric centre-to-centre.

    Isometry between such balls is an equivalence, so each point is compared
    with one representative per existing class whose invariants (ball size,
    distance profile from the centre, pairwise distance multiset) match.
    Balls larger than ``cap`` points are not searched; the pair is reported
    inconclusive and the point keeps its own class.
    """
    geo = _Geometry(space)
    if geo.is_union:
        raise ArgumentError("homogeneity classes need a finite metric space")
    sp = geo.space
    radius = as_fraction(radius)
    if radius <= 0:
        raise ArgumentError("radius must be positive")
    ranks = sp.ranks
    limit = sp.rank_below(radius)
    balls = [np.flatnonzero(ranks[i] < limit).tolist() for i in range(sp.n)]

    def signature(i):
        b = balls[i]
        prof = tuple(sorted(int(ranks[i, p]) for p in b))
        sub = ranks[np.ix_(b, b)]
        multi = tuple(sorted(sub[np.triu_indices(len(b), 1)].tolist()))
        return (len(b), prof, multi)

    sigs = [signature(i) for i in range(sp.n)]
    reps: list[int] = []
    members: dict[int, list[int]] = {}
    inconclusive = []
    for i in range(sp.n):
        placed = False
        for r in reps:
            if sigs[r] != sigs[i]:
                continue
            if len(balls[i]) > cap:
                inconclusive.append((sp.labels[r], sp.labels[i]))
                continue
            if _ball_isometric(ranks, balls[r], balls[i], r, i):
                members[r].append(i)
                placed = True
                break
        if not placed:
            reps.append(i)
            members[i] = [i]
    classes = sorted(tuple(sorted(sp.labels[j] for j in m)) for m in members.values())
    return HomogeneityResult(tuple(classes), tuple(inconclusive), radius)


# ---------------------------------------------------------------------------
# Invariance audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceCheck:
    subject: str
    eps: Fraction | None
    relation: str
    left: Fraction
    right: Fraction
    passed: bool

    def to_json(self) -> dict:
        return {
            "subject": self.subject,
            "epsilon": None if self.eps is None else format_fraction(self.eps),
            "relation": self.relation,
            "left": format_fraction(self.left),
            "right": format_fraction(self.right),
            "passed": self.passed,
        }


@dataclass(frozen=True)
class InvarianceReport:
    kind: MapKind
    checks: tuple
    estimate_tolerance: Fraction

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "map_kind": self.kind.value,
            "passed": self.passed,
            "estimate_tolerance": format_fraction(self.estimate_tolerance),
            "checks": [c.to_json() for c in self.checks],
        }


def _cmp(relation, a, b, tol=Fraction(0)):
    if relation == "==":
        return abs(a - b) <= tol
    if relation == "<=":
        return a <= b + tol
    return a + tol >= b


def invariance_report(
    space: FiniteMetricSpace,
    map_table: MapTable,
    test_subsets: dict,
    schedule: Schedule,
    *,
    target: FiniteMetricSpace | None = None,
    target_subsets: dict | None = None,
    estimate_tolerance=Fraction(1, 10**9),
    solver="auto",
    budget=DEFAULT_BUDGET,
) -> InvarianceReport:
    """Audit covering numbers and estimates along a map.

    For each named source subset ``F``: an isometry must give
    ``N(F) == N(f(F))`` at every ``eps``, a 1-coercive map
    ``N(F) <= N(f(F))``; when source and target coincide the closed-measure
    estimates are compared the same way (within ``estimate_tolerance``).
    For each named target subset ``P`` the pullback inequality
    ``mu_K(f^-1 P) >= mu_K'(P)`` is checked on estimates, and per ``eps`` on
    the ratios when ``P`` lies in the image of ``f``.
    """
    target = space if target is None else target
    same = target is space
    kind = check_map(space, target, map_table)
    if kind == MapKind.NEITHER:
        raise ArgumentError("map is neither an isometry nor 1-coercive")
    relation = "==" if kind == MapKind.ISOMETRY else "<="
    tol = as_fraction(estimate_tolerance)
    src = CoverCache(space, solver, budget)
    dst = src if same else CoverCache(target, solver, budget)
    checks = []
    for name, f in test_subsets.items():
        img = map_table.image(f)
        for eps in schedule.eps:
            a, b = src.count(f, eps).size, dst.count(img, eps).size
            checks.append(InvarianceCheck(f"N({name})", eps, relation, Fraction(a), Fraction(b), _cmp(relation, a, b)))
        if same and schedule.delta:
            ea = closed_measure(space, f, schedule, cache=src).value
            eb = closed_measure(target, img, schedule, cache=dst).value
            checks.append(InvarianceCheck(f"mu({name})", None, relation, ea, eb, _cmp(relation, ea, eb, tol)))
    image = map_table.image(map_table.domain)
    for name, p in (target_subsets or {}).items():
        pre = map_table.preimage(p)
        if p.issubset(image) and not pre.is_empty():
            for eps in schedule.eps:
                lhs = Fraction(src.count(pre, eps).size, src.count(space.full(), eps).size)
                rhs = Fraction(dst.count(p, eps).size, dst.count(target.full(), eps).size)
                checks.append(InvarianceCheck(f"ratio(f^-1 {name}) vs ratio({name})", eps, ">=", lhs, rhs, lhs >= rhs))
        if schedule.delta:
            lhs = Fraction(0) if pre.is_empty() else closed_measure(space, pre, schedule, cache=src).value
            rhs = closed_measure(target, p, schedule, cache=dst).value
            checks.append(InvarianceCheck(f"mu(f^-1 {name}) vs mu({name})", None, ">=", lhs, rhs, _cmp(">=", lhs, rhs, tol)))
    return InvarianceReport(kind, tuple(checks), tol)
