"""Drift-plus-penalty control of asynchronous renewal systems.

Library layout:
    core          domain types, frame sampling, model validation
    distributions frame-length distributions and simple samplers
    controller    virtual queues and the per-frame ratio solvers
    simulation    the slotted-time engine, policies, diagnostics
    simplex       dense two-phase LP solver
    benchmark     optimal-stationary LP and brute-force oracle
    scheduling    the multi-server energy-aware scheduling instance
    config, cli   experiment front end
"""

from .benchmark import (
    LPSolution,
    StationaryLP,
    brute_force_oracle,
    extract_reference_point,
    solve_lp,
    stationary_policy_weights,
)
from .config import ConfigError, ExperimentConfig, parse_config
from .controller import (
    SubproblemSolution,
    TradeoffParameter,
    VirtualQueueVector,
    queue_update,
    ratio_bound_holds,
    solve_bisection,
    solve_enumerate,
    solve_hull_vertices,
)
from .core import (
    ActionId,
    FrameOutcome,
    PerformanceTriple,
    PerformanceVector,
    RenewalSystemModel,
    ValidationReport,
    performance_vector,
    sample_frame,
    validate_model,
)
from .scheduling import (
    TABLE1,
    SchedulingInstance,
    ServerClassParams,
    build_instance,
    scheduling_objective,
)
from .simplex import SimplexResult, simplex_solve
from .simulation import (
    CappedPoisson,
    CheckViolation,
    DppRatioPolicy,
    DriftDiagnostic,
    ExternalProcess,
    FixedValue,
    RandomizedStationaryPolicy,
    RunMetrics,
    UniformIntRange,
    collect_drift_diagnostic,
    run,
    run_stationary_sweep,
    uniform_frame_drift_bound,
)

__version__ = "0.1.0"
