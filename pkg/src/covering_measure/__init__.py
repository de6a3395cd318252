"""Covering numbers of compact metric spaces and the probability measures
obtained from their ratios as the radius shrinks.

Submodules:

- :mod:`~covering_measure.metric`: exact finite metric spaces and set primitives
- :mod:`~covering_measure.intervals`: rational interval unions and the 1-D sweep
- :mod:`~covering_measure.covering`: exact and greedy covering solvers, curves
- :mod:`~covering_measure.limits`: tail brackets and oscillation detection
- :mod:`~covering_measure.measure`: measure estimates, membership, invariance
- :mod:`~covering_measure.gallery`: reference spaces
- :mod:`~covering_measure.estimator`: scikit-learn style wrapper
- :mod:`~covering_measure.cli`: command line
"""

__version__ = "0.1.0"

from .covering import (
    CoverInstance,
    CoverResult,
    CoveringCurve,
    build_instance,
    cover,
    covering_curve,
    solve_exact,
    solve_greedy,
    solve_sweep,
)
from .exceptions import (
    ArgumentError,
    BudgetExhaustedError,
    CoveringMeasureError,
    DegenerateConditionalError,
    InconclusiveError,
    MetricValidationError,
    ResourceError,
    StructuralError,
)
from .estimator import CoveringMeasure
from .gallery import (
    GallerySpace,
    SpaceSpec,
    cantor_alternating,
    counterexample_schedule,
    cyclic,
    discrete,
    fat_cantor,
    generate,
    harmonic,
    hyperspace,
    interval,
    product_space,
    two_cluster,
)
from .intervals import RationalIntervalUnion, min_cover_count, normalize, sausage_1d, to_point_space
from .limits import LimitEstimate, LimitStrategy, RatioSequence, detect_oscillation, estimate_limit
from .measure import (
    Schedule,
    borel_measure,
    closed_measure,
    conditional_ratio,
    homogeneity_classes,
    invariance_report,
    membership_in_M,
    ratio_measure,
)
from .metric import (
    FiniteMetricSpace,
    MapKind,
    MapTable,
    SubsetMask,
    ball,
    boundary,
    check_map,
    hausdorff_distance,
    minkowski_sausage,
    product,
    restrict,
    validate_metric,
)

__all__ = [name for name in dir() if not name.startswith("_")]
