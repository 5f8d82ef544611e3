"""recurlab: recurrence and hitting statistics for measure-preserving dynamics.

A desk-scale laboratory for quantitative recurrence, shrinking-target
hitting, tower-redirect perturbations of grid permutations, correlation
decay classification, and local dimension estimation, with a
deterministic experiment CLI on top.
"""

__version__ = "0.1.0"

from .correlations import (
    CorrelationSeries,
    DecayFitReport,
    LocalDimensionEstimate,
    correlation,
    correlation_series,
    lipschitz_norm,
    local_dimension,
    superpoly_test,
)
from .grid import (
    GridPermutation,
    GridSpec,
    PeriodicityReport,
    box_grid,
    cycle_decomposition,
    discretize,
    load_permutation,
    period_bound_fraction,
    save_permutation,
    torus_grid,
)
from .hitting import (
    HittingTarget,
    ShrinkingTargetSpec,
    WpWindow,
    borel_cantelli_fraction,
    hitting_score,
    wp_hit_count,
    wp_union_exhaustive,
    wp_union_measure,
)
from .maps import (
    Composition,
    GridBackedMap,
    Identity,
    Rotation,
    SystemMap,
    ToralAutomorphism,
    cat_map,
    golden_rotation,
    iterate,
    map_distance,
)
from .observables import CoordinateTrig, GridTableObservable, IdentityObservable, Observable
from .perturbation import (
    BoxExtension,
    CubeCover,
    PerturbationReport,
    build_cover,
    extend_to_box,
    restrict_to_box,
    towerize,
)
from .rates import Power, PowerLog, RateSequence, Shrinking, TableRate, parse_rate
from .recurrence import (
    MeasureEstimate,
    RecurrenceWindow,
    in_window_set,
    recurrence_score,
    window_union_exhaustive,
    window_union_measure,
)
from .spaces import MeasureModel, Space, box, torus, torus_distance, uniform_measure
