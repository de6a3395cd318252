"""Exception hierarchy shared by every module.

Each class carries a short machine-readable ``code`` used by the CLI to
print one parsable error line and to pick an exit status.
"""

from __future__ import annotations


class CoveringMeasureError(Exception):
    code = "error"
    exit_status = 1


class ArgumentError(CoveringMeasureError, ValueError):
    """Invalid argument value (non-positive radius, empty subset, ...)."""

    code = "argument"
    exit_status = 2


class StructuralError(CoveringMeasureError, ValueError):
    """Malformed input structure: non-square table, map image outside target."""

    code = "structural"
    exit_status = 2


class MetricValidationError(StructuralError):
    """A distance table violates a metric axiom.

    The full :class:`~covering_measure.metric.MetricValidationReport` is kept
    on ``report``.
    """

    code = "invalid-metric"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ResourceError(CoveringMeasureError):
    """A size cap (product size, sample size, ball search cap) was exceeded."""

    code = "resource"
    exit_status = 3


class BudgetExhaustedError(CoveringMeasureError):
    """The exact solver ran out of its search-node budget."""

    code = "budget"
    exit_status = 4

    def __init__(self, message, nodes=None, best_size=None):
        super().__init__(message)
        self.nodes = nodes
        self.best_size = best_size


class DegenerateConditionalError(ArgumentError):
    """Conditioning on a set whose estimated measure is (numerically) zero."""

    code = "degenerate-conditional"


class InconclusiveError(CoveringMeasureError):
    """Raised by the CLI in ``--strict`` mode for divergent/inconclusive verdicts."""

    code = "inconclusive"
    exit_status = 5
