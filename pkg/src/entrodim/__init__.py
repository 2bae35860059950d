"""Topological entropy dimensions of nonautonomous dynamical systems.

Classical (upper/lower) dimensions come from exact cylinder counts or
Bowen separated/spanning counts; the Carathéodory-Pesin dimension comes from
an exact string-cover dynamic program on symbolic models.
"""
__version__ = "0.1.0"

from .kernels import BACKEND
from .systems import (
    NdsSystem,
    SubsetSpec,
    SymbolPermutations,
    Rotations,
    build_system,
    orbit,
    power_system,
    shift_system,
    conjugate_system,
    symbolic_model,
    active_steps,
)
from .covers import (
    OpenCoverRep,
    arc,
    circle_cover,
    finite_cover,
    cylinder_cover,
    whole_cover,
    join,
    pullback,
    dynamical_join,
    min_subcover_count,
    refines,
    lebesgue_number,
)
from .metrics import (
    CountRecord,
    bowen_distance,
    max_separated_count,
    min_spanning_count,
    exact_cylinder_count,
    circle_grid,
)
from .dimension import (
    CountSeries,
    DimensionEstimate,
    s_entropy,
    classify_entropy,
    estimate_dimension,
    dimension_from_cover,
    cylinder_series,
    geometric_horizons,
)
from .pesin import (
    StringCoverProblem,
    optimal_cover_cost,
    critical_alpha,
    pesin_dimension,
    brute_force_cover_oracle,
)
from .harness import ExperimentConfig, Report, run_experiment, property_suite, reproduce_section4

__all__ = [name for name in dir() if not name.startswith("_")]
