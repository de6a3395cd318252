"""Limits of ratio sequences as ``eps -> 0``, reported as tail brackets.

No strategy here evaluates a generalized (ultrafilter) limit; each one reports
the range of the sampled tail and, for the classical strategy, a point value
when that range is narrow enough.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .exceptions import ArgumentError
from .rational import as_fraction, format_fraction

__all__ = [
    "RatioSequence",
    "LimitStrategy",
    "LimitEstimate",
    "OscillationReport",
    "estimate_limit",
    "detect_oscillation",
    "DEFAULT_TOLERANCE",
    "DEFAULT_TAIL_FRACTION",
]

DEFAULT_TOLERANCE = Fraction(1, 100)
DEFAULT_TAIL_FRACTION = Fraction(1, 2)
MIN_SAMPLES = 4
MIN_OSCILLATION_SAMPLES = 6


@dataclass(frozen=True)
class RatioSequence:
    """Values sampled along a strictly descending ``eps`` schedule."""

    eps: tuple
    values: tuple

    def __post_init__(self):
        eps = tuple(as_fraction(e) for e in self.eps)
        values = tuple(as_fraction(v) for v in self.values)
        if len(eps) != len(values):
            raise ArgumentError("eps and values differ in length")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ArgumentError("eps must be strictly descending")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_curve(cls, curve) -> RatioSequence:
        """Completed rows of a :class:`~covering_measure.covering.CoveringCurve`."""
        rows = [r for r in curve.rows if r.ok]
        return cls(tuple(r.eps for r in rows), tuple(r.ratio for r in rows))

    @classmethod
    def from_values(cls, values, eps=None) -> RatioSequence:
        values = tuple(values)
        if eps is None:
            eps = tuple(Fraction(1, 2**k) for k in range(len(values)))
        return cls(tuple(eps), values)

    def __len__(self):
        return len(self.values)

    def map(self, fn: Callable) -> RatioSequence:
        return RatioSequence(self.eps, tuple(fn(v) for v in self.values))

    def combine(self, other: RatioSequence, fn: Callable) -> RatioSequence:
        if self.eps != other.eps:
            raise ArgumentError("sequences are sampled on different schedules")
        return RatioSequence(self.eps, tuple(fn(a, b) for a, b in zip(self.values, other.values)))


@dataclass(frozen=True)
class LimitStrategy:
    """How to turn a sampled tail into an estimate.

    ``classical`` claims convergence when the tail range is within
    ``tolerance``; ``bracket`` only reports the range; ``subsequence``
    restricts the tail to the samples accepted by ``selector``, a callable
    ``selector(index, eps) -> bool`` over positions in the full sequence.
    """

    kind: str = "classical"
    tolerance: Fraction = DEFAULT_TOLERANCE
    tail_fraction: Fraction = DEFAULT_TAIL_FRACTION
    selector: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("classical", "bracket", "subsequence"):
            raise ArgumentError(f"unknown limit strategy {self.kind!r}")
        tol = as_fraction(self.tolerance)
        tf = as_fraction(self.tail_fraction)
        if tol <= 0:
            raise ArgumentError("tolerance must be positive")
        if not 0 < tf <= 1:
            raise ArgumentError("tail_fraction must lie in (0, 1]")
        if self.kind == "subsequence" and self.selector is None:
            raise ArgumentError("subsequence strategy needs a selector")
        object.__setattr__(self, "tolerance", tol)
        object.__setattr__(self, "tail_fraction", tf)

    @classmethod
    def classical(cls, tolerance=DEFAULT_TOLERANCE, tail_fraction=DEFAULT_TAIL_FRACTION):
        return cls("classical", tolerance, tail_fraction)

    @classmethod
    def bracket(cls, tail_fraction=DEFAULT_TAIL_FRACTION):
        return cls("bracket", DEFAULT_TOLERANCE, tail_fraction)

    @classmethod
    def subsequence(cls, selector, tolerance=DEFAULT_TOLERANCE, tail_fraction=DEFAULT_TAIL_FRACTION):
        return cls("subsequence", tolerance, tail_fraction, selector)

    def describe(self) -> str:
        if self.kind == "bracket":
            return f"bracket(tail_fraction={format_fraction(self.tail_fraction)})"
        return (
            f"{self.kind}(tolerance={format_fraction(self.tolerance)}, "
            f"tail_fraction={format_fraction(self.tail_fraction)})"
        )


@dataclass(frozen=True)
class LimitEstimate:
    lower: Fraction
    upper: Fraction
    converged: bool
    value: Fraction | None
    tail_length: int
    strategy: str = "classical"

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower bound above upper bound")
        if self.converged != (self.value is not None):
            raise ValueError("value must be present exactly when converged")
        if self.value is not None and not self.lower <= self.value <= self.upper:
            raise ValueError("value outside the bracket")

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def midpoint(self) -> Fraction:
        return (self.lower + self.upper) / 2

    def contains(self, x) -> bool:
        return self.lower <= as_fraction(x) <= self.upper

    def to_json(self) -> dict:
        out = {
            "lower": format_fraction(self.lower),
            "upper": format_fraction(self.upper),
            "converged": self.converged,
        }
        if self.value is not None:
            out["value"] = format_fraction(self.value)
        out["strategy"] = self.strategy
        out["tail_length"] = self.tail_length
        return out

    @classmethod
    def from_json(cls, data: dict) -> LimitEstimate:
        value = data.get("value")
        return cls(
            as_fraction(data["lower"]),
            as_fraction(data["upper"]),
            bool(data["converged"]),
            None if value is None else as_fraction(value),
            int(data.get("tail_length", 0)),
            data.get("strategy", "classical"),
        )


def _tail_start(n: int, tail_fraction: Fraction, minimum: int) -> int:
    k = max(math.ceil(tail_fraction * n), minimum)
    return max(n - k, 0)


def estimate_limit(seq: RatioSequence, strategy: LimitStrategy | None = None) -> LimitEstimate:
    """Bracket the limit of ``seq`` by the range of its tail."""
    if strategy is None:
        strategy = LimitStrategy.classical()
    n = len(seq)
    if n < MIN_SAMPLES:
        raise ArgumentError(f"need at least {MIN_SAMPLES} samples, got {n}")
    start = _tail_start(n, strategy.tail_fraction, 2)
    idx = range(start, n)
    if strategy.kind == "subsequence":
        idx = [i for i in idx if strategy.selector(i, seq.eps[i])]
        if not idx:
            raise ArgumentError("selector keeps no sample of the tail")
    tail = [seq.values[i] for i in idx]
    lower, upper = min(tail), max(tail)
    converged = strategy.kind != "bracket" and upper - lower <= strategy.tolerance
    value = (lower + upper) / 2 if converged else None
    return LimitEstimate(lower, upper, converged, value, len(tail), strategy.kind)


@dataclass(frozen=True)
class OscillationReport:
    """Gap-based clusters of tail values.

    ``assignment`` holds ``(eps, value, cluster)`` for every tail sample, with
    clusters numbered by increasing centre.
    """

    centers: tuple
    assignment: tuple
    threshold: Fraction

    @property
    def n_clusters(self) -> int:
        return len(self.centers)

    @property
    def oscillating(self) -> bool:
        return len(self.centers) > 1

    def alternates(self) -> bool:
        """True when consecutive tail samples always switch cluster."""
        labels = [c for _, _, c in self.assignment]
        return len(set(labels)) > 1 and all(a != b for a, b in zip(labels, labels[1:]))

    def to_json(self) -> dict:
        return {
            "clusters": [format_fraction(c) for c in self.centers],
            "oscillating": self.oscillating,
            "threshold": format_fraction(self.threshold),
            "assignment": [
                {"epsilon": format_fraction(e), "value": format_fraction(v), "cluster": c}
                for e, v, c in self.assignment
            ],
        }


def detect_oscillation(
    seq: RatioSequence,
    tail_fraction=DEFAULT_TAIL_FRACTION,
    gap_factor=3,
    min_gap=Fraction(1, 100),
) -> OscillationReport:
    """Cluster the tail values; more than one cluster signals oscillation.

    Sorted tail values are split wherever a successive gap exceeds
    ``max(gap_factor * median gap, min_gap)``. The floor keeps a slowly
    converging tail, whose gaps are all tiny, in a single cluster.
    """
    n = len(seq)
    if n < MIN_OSCILLATION_SAMPLES:
        raise ArgumentError(f"need at least {MIN_OSCILLATION_SAMPLES} samples, got {n}")
    start = _tail_start(n, as_fraction(tail_fraction), MIN_SAMPLES)
    eps = seq.eps[start:]
    vals = seq.values[start:]
    ordered = sorted(vals)
    gaps = [b - a for a, b in zip(ordered, ordered[1:])]
    threshold = max(as_fraction(gap_factor) * statistics.median(gaps), as_fraction(min_gap))
    groups = [[ordered[0]]]
    for gap, v in zip(gaps, ordered[1:]):
        if gap > threshold:
            groups.append([v])
        else:
            groups[-1].append(v)
    centers = tuple(sum(g, Fraction(0)) / len(g) for g in groups)
    bounds = [g[-1] for g in groups]
    assignment = []
    for e, v in zip(eps, vals):
        c = next(i for i, hi in enumerate(bounds) if v <= hi)
        assignment.append((e, v, c))
    return OscillationReport(centers, tuple(assignment), threshold)

