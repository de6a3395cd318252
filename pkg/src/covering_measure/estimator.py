"""scikit-learn style wrapper around the measure estimates.

``fit`` takes a space (finite metric space, interval union, gallery space) or
an array of points; ``transform`` maps a list of subsets to their estimated
measures. Hyper-parameters are the schedule and solver settings, so
``get_params``/``set_params``/``clone`` work as for any estimator.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .covering import DEFAULT_BUDGET, covering_curve
from .exceptions import ArgumentError
from .intervals import RationalIntervalUnion, normalize
from .limits import LimitStrategy
from .measure import (
    DEFAULT_MEMBERSHIP_TOLERANCE,
    Schedule,
    borel_measure,
    closed_measure,
    membership_in_M,
    ratio_measure,
)
from .metric import FiniteMetricSpace, SubsetMask
from .rational import as_fraction

__all__ = ["CoveringMeasure", "as_space"]

KINDS = ("borel", "closed", "ratio")


def _sup_table(points) -> list:
    n = len(points)
    return [[max(abs(a - b) for a, b in zip(points[i], points[j])) for j in range(n)] for i in range(n)]


def as_space(X):
    """Coerce ``X`` to a finite metric space or an interval union.

    Arrays of shape ``(n,)`` or ``(n, 1)`` become line spaces; ``(n, d)``
    arrays use the sup metric. Entries are converted exactly, so pass
    strings or integers when binary floats would be ambiguous.
    """
    if hasattr(X, "space") and hasattr(X, "subsets"):
        return X.space
    if isinstance(X, (FiniteMetricSpace, RationalIntervalUnion)):
        return X
    arr = np.asarray(X, dtype=object)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim == 1:
        return FiniteMetricSpace.from_points([as_fraction(x) for x in arr])
    if arr.ndim == 2:
        rows = [tuple(as_fraction(x) for x in row) for row in arr]
        labels = [f"x{i:0{len(str(len(rows) - 1))}d}" for i in range(len(rows))]
        return FiniteMetricSpace.from_matrix(labels, _sup_table(rows))
    raise ArgumentError("expected a 1-D or 2-D array of points")


class CoveringMeasure(TransformerMixin, BaseEstimator):
    """Estimate the covering-ratio measure of subsets of a fitted space.

    Parameters mirror :meth:`Schedule.geometric`; ``kind`` picks
    :func:`borel_measure`, :func:`closed_measure` or :func:`ratio_measure`.
    """

    def __init__(
        self,
        eps_start="1/8",
        eps_ratio="1/2",
        eps_steps=10,
        delta_start="1/4",
        delta_ratio="1/2",
        delta_steps=5,
        kind="borel",
        solver="auto",
        tolerance="1/100",
        budget=DEFAULT_BUDGET,
    ):
        self.eps_start = eps_start
        self.eps_ratio = eps_ratio
        self.eps_steps = eps_steps
        self.delta_start = delta_start
        self.delta_ratio = delta_ratio
        self.delta_steps = delta_steps
        self.kind = kind
        self.solver = solver
        self.tolerance = tolerance
        self.budget = budget

    def fit(self, X, y=None):
        if self.kind not in KINDS:
            raise ArgumentError(f"kind must be one of {KINDS}")
        self.space_ = as_space(X)
        self.schedule_ = Schedule.geometric(
            as_fraction(self.eps_start),
            as_fraction(self.eps_ratio),
            int(self.eps_steps),
            as_fraction(self.delta_start),
            as_fraction(self.delta_ratio),
            int(self.delta_steps),
            LimitStrategy.classical(as_fraction(self.tolerance)),
        )
        self.n_points_ = None if isinstance(self.space_, RationalIntervalUnion) else self.space_.n
        return self

    def _subset(self, s):
        space = self.space_
        if isinstance(space, RationalIntervalUnion):
            if isinstance(s, RationalIntervalUnion):
                return s
            if isinstance(s, tuple) and len(s) == 2:
                return normalize([s])
            return normalize(s)
        if isinstance(s, SubsetMask):
            return s
        if isinstance(s, tuple) and len(s) == 2 and space.is_line:
            return space.mask_between(*s)
        arr = np.asarray(s)
        if arr.dtype == bool:
            return SubsetMask.from_array(arr)
        return space.mask(list(s))

    def estimate(self, subset):
        """Full :class:`MeasureEstimate` for one subset."""
        check_is_fitted(self, "space_")
        sub = self._subset(subset)
        opts = {"solver": self.solver, "budget": self.budget}
        if self.kind == "borel":
            return borel_measure(self.space_, sub, self.schedule_, **opts)
        if self.kind == "closed":
            return closed_measure(self.space_, sub, self.schedule_, **opts)
        return ratio_measure(self.space_, sub, self.schedule_, **opts)

    def transform(self, subsets) -> np.ndarray:
        """Point estimates as floats; ``nan`` where the estimate did not converge."""
        out = []
        for s in subsets:
            v = self.estimate(s).point
            out.append(np.nan if v is None else float(v))
        return np.asarray(out, dtype=float)

    def membership(self, subset, tolerance=DEFAULT_MEMBERSHIP_TOLERANCE):
        check_is_fitted(self, "space_")
        return membership_in_M(self.space_, self._subset(subset), self.schedule_, tolerance, solver=self.solver, budget=self.budget)

    def curve(self, subset):
        check_is_fitted(self, "space_")
        return covering_curve(self.space_, self._subset(subset), self.schedule_.eps, self.solver, self.budget)

    def score(self, subsets, expected) -> float:
        """Negative mean absolute error against known measures."""
        got = self.transform(subsets)
        want = np.asarray([float(Fraction(x)) if isinstance(x, str) else float(x) for x in expected])
        return -float(np.nanmean(np.abs(got - want)))
