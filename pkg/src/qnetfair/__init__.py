"""Slot-based simulator and solvers for fair sharing of entanglement
in a quantum repeater network serving distributed quantum computing."""

from .model import (
    Application,
    Assignment,
    AssignmentSource,
    CapacityMode,
    CostMode,
    Flow,
    NetworkGraph,
    Node,
    NodeKind,
    Policy,
    QuantumLink,
    Scenario,
    SimConfig,
    Traffic,
    WERNER_FLOOR,
)
from .routing import (
    EmptyEligibleSet,
    NoPath,
    eligible_workers,
    path_edges,
    path_fidelity,
    path_swap_prob,
    shortest_path,
)
from .fairshare import (
    AppRatePrediction,
    SearchSpaceTooLarge,
    assign_exhaustive,
    assign_greedy,
    assign_random,
    assignment_score,
    jain_index,
    maxmin_rates,
    predicted_app_rates,
    verify_bottleneck,
)
from .scheduling import (
    ConfigError,
    Request,
    SchedulerState,
    SlotGrants,
    enqueue_arrivals,
    schedule_slot,
    select_flow,
)
from .engine import (
    AggStat,
    AppMetrics,
    EdgeMetrics,
    Metrics,
    ReplicationSummary,
    SlotLedger,
    build_flows,
    poisson_sample,
    replicate,
    replication_runs,
    replication_seed,
    resolve_successes,
    run,
    sample_capacity,
    stream_rng,
    stream_seed,
)
from .validate import MAX_ARRIVAL_RATE, ValidationError, validate_scenario
from .scenario_io import SchemaError, load_scenario, parse_scenario

__version__ = "0.1.0"
