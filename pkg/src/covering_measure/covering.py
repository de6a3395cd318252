"""Covering numbers ``N(A; eps)``: exact branch-and-bound, greedy, 1-D sweep.

``N(A; eps)`` is the least number of open balls of radius ``eps`` centred at
points of ``A`` whose union contains ``A``. Balls live in the whole space, but
only the points of ``A`` need covering.
"""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exceptions import ArgumentError, BudgetExhaustedError, CoveringMeasureError
from .intervals import RationalIntervalUnion, min_cover_count
from .metric import FiniteMetricSpace, SubsetMask
from .rational import as_fraction, format_fraction

__all__ = [
    "CoverInstance",
    "CoverResult",
    "CurveRow",
    "CoveringCurve",
    "CoverCache",
    "EXACT",
    "GREEDY",
    "SOLVERS",
    "DEFAULT_BUDGET",
    "build_instance",
    "solve_exact",
    "solve_greedy",
    "solve_sweep",
    "cover",
    "covering_curve",
    "check_schedule",
]

EXACT = "exact"
GREEDY = "greedy_upper_bound"
SOLVERS = ("auto", "exact", "greedy", "sweep")
DEFAULT_BUDGET = 10**7


def _bits_from_bool(row: np.ndarray) -> int:
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


@dataclass(frozen=True, eq=False)
class CoverInstance:
    """Set-cover instance for ``N(target; eps)``.

    ``points`` lists the space indices of the target in increasing order;
    ``adjacency[i, j]`` says that the ball around ``points[i]`` contains
    ``points[j]``. The relation is symmetric, so row ``j`` also lists the
    candidate centres able to cover ``points[j]``.
    """

    space: FiniteMetricSpace
    target: SubsetMask
    eps: Fraction
    points: tuple
    adjacency: np.ndarray

    @property
    def size(self) -> int:
        return len(self.points)

    def candidate(self, i: int) -> SubsetMask:
        """Points of the target covered by the ``i``-th candidate ball."""
        cols = np.flatnonzero(self.adjacency[i])
        return SubsetMask.from_indices(self.space.n, (self.points[j] for j in cols))

    def candidate_sizes(self) -> list[int]:
        return self.adjacency.sum(axis=1).tolist()

    def covers(self, centers: Sequence[int]) -> bool:
        pos = {p: i for i, p in enumerate(self.points)}
        rows = [pos[c] for c in centers]
        if not rows:
            return False
        return bool(self.adjacency[rows].any(axis=0).all())


@dataclass(frozen=True)
class CoverResult:
    size: int
    centers: tuple
    exactness: str
    lower_bound: int
    nodes: int = 0

    def __post_init__(self):
        if self.lower_bound > self.size:
            raise ValueError("lower bound exceeds cover size")
        if self.exactness == EXACT and self.lower_bound != self.size:
            raise ValueError("exact result with a gap")

    @property
    def is_exact(self) -> bool:
        return self.exactness == EXACT

    def to_json(self, space: FiniteMetricSpace | None = None) -> dict:
        out = {
            "size": self.size,
            "centers": list(self.centers),
            "exactness": self.exactness,
            "lower_bound": self.lower_bound,
        }
        if space is not None:
            out["center_labels"] = [space.labels[c] for c in self.centers]
        return out


def build_instance(space: FiniteMetricSpace, subset: SubsetMask, eps) -> CoverInstance:
    eps = as_fraction(eps)
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    if subset.size != space.n:
        raise ArgumentError("subset mask does not match the space")
    if subset.is_empty():
        raise ArgumentError("covering number of an empty subset")
    pts = subset.indices()
    if space.is_line and space._ranks is None:
        c = np.array([space.coords[i] for i in pts], dtype=object)
        adj = np.abs(c[:, None] - c[None, :]) < eps
        adj = adj.astype(bool)
    else:
        sub = space.ranks[np.ix_(pts, pts)]
        adj = sub < space.rank_below(eps)
    adj.setflags(write=False)
    return CoverInstance(space, subset, eps, tuple(pts), adj)


def _result(inst: CoverInstance, local, exactness, lower, nodes=0) -> CoverResult:
    centers = tuple(sorted(inst.points[i] for i in local))
    return CoverResult(len(centers), centers, exactness, lower, nodes)


def _greedy_local(adj: np.ndarray) -> list[int]:
    m = adj.shape[0]
    weights = adj.astype(np.int32)
    uncovered = np.ones(m, dtype=np.int32)
    chosen = []
    remaining = m
    while remaining:
        gains = weights @ uncovered
        best = int(np.argmax(gains))  # argmax returns the lowest index on ties
        chosen.append(best)
        newly = adj[best] & (uncovered == 1)
        remaining -= int(newly.sum())
        uncovered[newly] = 0
    return chosen


def solve_greedy(inst: CoverInstance) -> CoverResult:
    """Repeatedly take the ball covering the most uncovered points (lowest index on ties)."""
    chosen = _greedy_local(inst.adjacency)
    search = _Search(inst.adjacency, 1)
    lower = search.packing_bound((1 << search.m) - 1)
    return _result(inst, chosen, GREEDY, lower)


class _Search:
    def __init__(self, adj: np.ndarray, budget: int):
        m = adj.shape[0]
        self.m = m
        self.budget = budget
        self.nodes = 0
        self.cand = [_bits_from_bool(adj[i]) for i in range(m)]
        counts = adj.sum(axis=1)
        # branching order: fewest candidates first, then index
        self.order = sorted(range(m), key=lambda i: (int(counts[i]), i))
        self.best = None
        self.best_size = None

    def packing_bound(self, uncovered: int) -> int:
        blocked = 0
        lb = 0
        cand = self.cand
        for p in self.order:
            if uncovered >> p & 1 and not cand[p] & blocked:
                blocked |= cand[p]
                lb += 1
        return lb

    def run(self, upper: list[int]) -> list[int]:
        self.best = list(upper)
        self.best_size = len(upper)
        full = (1 << self.m) - 1
        self.root_bound = self.packing_bound(full)
        if self.root_bound < self.best_size:
            self._rec(full, [])
        return self.best

    def _rec(self, uncovered: int, chosen: list[int]):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExhaustedError(
                f"exact solver exceeded its budget of {self.budget} nodes",
                nodes=self.nodes,
                best_size=self.best_size,
            )
        if not uncovered:
            if len(chosen) < self.best_size:
                self.best = list(chosen)
                self.best_size = len(chosen)
            return
        if len(chosen) + self.packing_bound(uncovered) >= self.best_size:
            return
        cand = self.cand
        p = next(q for q in self.order if uncovered >> q & 1)
        options = []
        bits = cand[p]
        while bits:
            low = bits & -bits
            c = low.bit_length() - 1
            options.append((-(cand[c] & uncovered).bit_count(), c))
            bits ^= low
        options.sort()
        for _, c in options:
            chosen.append(c)
            self._rec(uncovered & ~cand[c], chosen)
            chosen.pop()
            if len(chosen) + 1 >= self.best_size:
                return


def solve_exact(inst: CoverInstance, budget: int = DEFAULT_BUDGET) -> CoverResult:
    """Exact minimum cover by branch-and-bound.

    Starts from the greedy cover and branches on the uncovered point with the
    fewest candidate centres, trying centres in order of most newly covered
    points (lowest index on ties). Incumbents are replaced only by strictly
    smaller covers, so the returned centres are deterministic: the greedy
    cover when it is optimal, else the first optimum in branching order.
    Pruning uses a packing bound: uncovered points no two of which share a
    candidate centre each need their own ball.
    """
    if budget < 1:
        raise ArgumentError("budget must be positive")
    greedy = _greedy_local(inst.adjacency)
    search = _Search(inst.adjacency, budget)
    best = search.run(greedy)
    return _result(inst, best, EXACT, len(best), search.nodes)


def _point_sweep(xs: list, eps: Fraction) -> list[int]:
    # same greedy as min_cover_count, specialised to sorted points where
    # every supremum is attained
    centers = []
    i, n = 0, len(xs)
    while i < n:
        j = bisect_left(xs, xs[i] + eps, i) - 1
        centers.append(j)
        i = bisect_left(xs, xs[j] + eps, j)
    return centers


def solve_sweep(space: FiniteMetricSpace, subset: SubsetMask, eps) -> CoverResult:
    """Exact ``N`` for subsets of the real line via the 1-D sweep."""
    eps = as_fraction(eps)
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    if not space.is_line:
        raise ArgumentError("the sweep solver needs a line space")
    if subset.size != space.n:
        raise ArgumentError("subset mask does not match the space")
    if subset.is_empty():
        raise ArgumentError("covering number of an empty subset")
    idx = subset.indices()
    coords = space.coords
    xs = [coords[i] for i in idx]
    local = _point_sweep(xs, eps)
    centers = tuple(idx[j] for j in local)
    return CoverResult(len(centers), centers, EXACT, len(centers))


def cover(space: FiniteMetricSpace, subset: SubsetMask, eps, solver: str = "auto", budget: int = DEFAULT_BUDGET) -> CoverResult:
    """``N(subset; eps)`` with the requested solver.

    ``auto`` uses the sweep on line spaces and branch-and-bound otherwise.
    """
    if solver not in SOLVERS:
        raise ArgumentError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
    if solver == "sweep" or (solver == "auto" and space.is_line):
        return solve_sweep(space, subset, eps)
    inst = build_instance(space, subset, eps)
    if solver == "greedy":
        return solve_greedy(inst)
    return solve_exact(inst, budget)


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


def check_schedule(schedule) -> tuple:
    eps = tuple(as_fraction(e) for e in schedule)
    if not eps:
        raise ArgumentError("empty eps schedule")
    if any(e <= 0 for e in eps):
        raise ArgumentError("eps schedule must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ArgumentError("eps schedule must be strictly descending")
    return eps


@dataclass(frozen=True)
class CurveRow:
    eps: Fraction
    n_subset: int | None
    n_space: int | None
    exactness: str
    error: str | None = None

    @property
    def ratio(self) -> Fraction | None:
        if self.n_subset is None or self.n_space is None:
            return None
        return Fraction(self.n_subset, self.n_space)

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class CoveringCurve:
    rows: tuple = field(default_factory=tuple)

    @property
    def eps(self) -> list:
        return [r.eps for r in self.rows]

    def ratios(self) -> list:
        """Exact ratios of the rows that completed."""
        return [r.ratio for r in self.rows if r.ok]

    def completed(self) -> CoveringCurve:
        return CoveringCurve(tuple(r for r in self.rows if r.ok))

    @property
    def exact(self) -> bool:
        return all(r.exactness == EXACT for r in self.rows)

    def to_rows(self) -> list[dict]:
        out = []
        for r in self.rows:
            ratio = r.ratio
            out.append(
                {
                    "epsilon": format_fraction(r.eps),
                    "n_subset": "" if r.n_subset is None else r.n_subset,
                    "n_space": "" if r.n_space is None else r.n_space,
                    "ratio": "" if ratio is None else format_fraction(ratio),
                    "exactness": r.exactness,
                    "ratio_f64": "" if ratio is None else repr(float(ratio)),
                }
            )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["epsilon", "n_subset", "n_space", "ratio", "exactness", "ratio_f64"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.to_rows())
        return buf.getvalue()

    def to_json(self) -> dict:
        rows = self.to_rows()
        for row, r in zip(rows, self.rows):
            for key in ("n_subset", "n_space", "ratio", "ratio_f64"):
                if row[key] == "":
                    row[key] = None
            if row["ratio_f64"] is not None:
                row["ratio_f64"] = float(row["ratio_f64"])
            if r.error:
                row["error"] = r.error
        return {"rows": rows}

    def dumps(self, fmt: str = "json") -> str:
        if fmt == "csv":
            return self.to_csv()
        return json.dumps(self.to_json(), indent=2)


class CoverCache:
    """Memo of covering numbers for one space, keyed by subset, eps and solver."""

    def __init__(self, space, solver: str = "auto", budget: int = DEFAULT_BUDGET):
        self.space = space
        self.solver = solver
        self.budget = budget
        self._memo: dict = {}

    def count(self, subset, eps) -> CoverResult:
        eps = as_fraction(eps)
        key = (_subset_key(subset), eps)
        hit = self._memo.get(key)
        if hit is None:
            hit = _cover_any(self.space, subset, eps, self.solver, self.budget)
            self._memo[key] = hit
        return hit

    def __len__(self):
        return len(self._memo)


def _subset_key(subset):
    if isinstance(subset, SubsetMask):
        return ("mask", subset.bits)
    return ("union", subset.intervals)


def _cover_any(space, subset, eps, solver, budget) -> CoverResult:
    if isinstance(space, RationalIntervalUnion):
        if solver not in ("auto", "sweep"):
            raise ArgumentError("interval unions are covered with the sweep solver")
        count, _ = min_cover_count(subset, eps)
        return CoverResult(count, (), EXACT, count)
    return cover(space, subset, eps, solver, budget)


def covering_curve(space, subset, eps_schedule, solver: str = "auto", budget: int = DEFAULT_BUDGET, cache: CoverCache | None = None) -> CoveringCurve:
    """Rows ``(eps, N(subset; eps), N(space; eps))`` over a descending schedule.

    ``space`` is a :class:`FiniteMetricSpace` with a :class:`SubsetMask`, or a
    :class:`RationalIntervalUnion` ambient with a union ``subset``. A row whose
    solver runs out of budget is kept with ``exactness = "budget_exhausted"``.
    """
    schedule = check_schedule(eps_schedule)
    if cache is None:
        cache = CoverCache(space, solver, budget)
    full = space if isinstance(space, RationalIntervalUnion) else space.full()
    rows = []
    for eps in schedule:
        try:
            a = cache.count(subset, eps)
            k = cache.count(full, eps)
        except BudgetExhaustedError as exc:
            rows.append(CurveRow(eps, None, None, "budget_exhausted", str(exc)))
            continue
        exactness = EXACT if a.is_exact and k.is_exact else GREEDY
        rows.append(CurveRow(eps, a.size, k.size, exactness))
    return CoveringCurve(tuple(rows))


def curve_error(curve: CoveringCurve) -> CoveringMeasureError | None:
    for r in curve.rows:
        if not r.ok:
            return BudgetExhaustedError(r.error)
    return None
