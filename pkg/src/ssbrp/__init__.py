"""Two-phase matheuristic for static bike-sharing repositioning.

Phase one builds vehicle routes with a randomized greedy heuristic; phase
two computes exactly optimal per-visit loading instructions for those
routes by integer programming. The package also ships instance generators,
document serialization, and a benchmark CLI.
"""

from .construction import BuildState, ConstructionParams, construct_solution
from .instances import (
    DocumentError,
    Family,
    GeneratorConfig,
    generate_instance,
    parse_instance,
    parse_solution,
    write_instance,
    write_solution,
)
from .loading import (
    LoadingModel,
    LoadingVariables,
    RouteSkeleton,
    brute_force_loading,
    build_model,
    reoptimize_solution,
    solve_exact,
)
from .model import (
    DEPOT,
    Depot,
    Instance,
    LoadingPlan,
    ObjectiveBreakdown,
    ObjectiveWeights,
    Route,
    Solution,
    Station,
    StationClass,
    TravelMatrix,
    Vehicle,
    apply_solution,
    check_instance,
    classify_station,
    empty_solution,
    evaluate_objective,
    route_time,
    solution_from_plans,
    validate_solution,
)
from .search import RunConfig, RunReport, is_better, run

__version__ = "0.1.0"

__all__ = [
    "BuildState",
    "ConstructionParams",
    "DEPOT",
    "Depot",
    "DocumentError",
    "Family",
    "GeneratorConfig",
    "Instance",
    "LoadingModel",
    "LoadingPlan",
    "LoadingVariables",
    "ObjectiveBreakdown",
    "ObjectiveWeights",
    "Route",
    "RouteSkeleton",
    "RunConfig",
    "RunReport",
    "Solution",
    "Station",
    "StationClass",
    "TravelMatrix",
    "Vehicle",
    "apply_solution",
    "brute_force_loading",
    "build_model",
    "check_instance",
    "classify_station",
    "construct_solution",
    "empty_solution",
    "evaluate_objective",
    "generate_instance",
    "is_better",
    "parse_instance",
    "parse_solution",
    "reoptimize_solution",
    "route_time",
    "run",
    "solution_from_plans",
    "solve_exact",
    "validate_solution",
    "write_instance",
    "write_solution",
]
