"""Deterministic seeded slot loop and replication runner.

Each run owns four independent RNG streams (capacity, arrival, success,
assignment), seeded by hashing the stream label with the master seed, so
toggling one stochastic dimension never perturbs the draws of another.
A single run is strictly single-threaded; replications are independent
runs whose seeds derive from the master seed and the replication index,
aggregated in index order.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
import random
import statistics
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .fairshare import (
    assign_exhaustive,
    assign_greedy,
    assign_random,
    jain_index,
)
from .model import (
    AppId,
    Application,
    Assignment,
    AssignmentSource,
    CapacityMode,
    CostMode,
    EdgeId,
    Flow,
    NetworkGraph,
    NodeId,
    Policy,
    QuantumLink,
    Scenario,
    SimConfig,
    Traffic,
)
from .routing import path_edges, path_fidelity, path_swap_prob, shortest_path
from .scheduling import (
    ConfigError,
    SchedulerState,
    SlotGrants,
    enqueue_arrivals,
    schedule_slot,
)

STREAM_LABELS = ("capacity", "arrival", "success", "assignment")


def stream_seed(master_seed: int, label: str) -> int:
    """64-bit sub-seed for a named stream: sha256 of 'label:master'."""
    digest = hashlib.sha256(f"{label}:{master_seed}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def stream_rng(master_seed: int, label: str) -> random.Random:
    return random.Random(stream_seed(master_seed, label))


def replication_seed(master_seed: int, index: int) -> int:
    """Seed of replication ``index``: sha256 of 'replication:index:master'."""
    digest = hashlib.sha256(f"replication:{index}:{master_seed}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def sample_capacity(link: QuantumLink, mode: CapacityMode, rng: random.Random) -> int:
    """Pairs available on a link this slot.

    Deterministic mode returns round(capacity * gen_success_prob), which
    validation requires to be integral; stochastic mode draws capacity
    independent Bernoulli trials (an exact binomial sample).
    """
    if mode is CapacityMode.DETERMINISTIC:
        return round(link.capacity_max * link.gen_success_prob)
    return sum(
        1 for _ in range(link.capacity_max) if rng.random() < link.gen_success_prob
    )


def poisson_sample(lam: float, rng: random.Random) -> int:
    """Knuth multiplication method; exact for the validated range lam <= 30."""
    if lam <= 0.0:
        return 0
    limit = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def resolve_successes(
    grants: Mapping[Flow, int], rng: random.Random
) -> dict[Flow, int]:
    """Sample end-to-end swap success per granted attempt.

    Attempts are resolved flow by flow in (app, path) order so draws do
    not depend on the scheduler's internal grant sequence.
    """
    successes: dict[Flow, int] = {}
    for flow in sorted(grants, key=lambda f: (f.app, f.path)):
        count = grants[flow]
        if flow.swap_prob >= 1.0:
            successes[flow] = count
            continue
        successes[flow] = sum(1 for _ in range(count) if rng.random() < flow.swap_prob)
    return successes


def build_flows(
    graph: NetworkGraph,
    apps: Sequence[Application],
    assignment: Assignment,
    cost_mode,
) -> dict[AppId, list[Flow]]:
    """One flow per (app, assigned worker) over the shortest path."""
    flows: dict[AppId, list[Flow]] = {}
    for app in sorted(apps, key=lambda a: a.id):
        flows[app.id] = []
        for worker in sorted(assignment[app.id]):
            path = shortest_path(graph, app.host, worker)
            edges = path_edges(graph, path)
            cost = 1 if cost_mode is CostMode.UNIT else len(edges)
            flows[app.id].append(
                Flow(
                    app=app.id,
                    path=path,
                    edges=edges,
                    swap_prob=path_swap_prob(path, graph),
                    e2e_fidelity=path_fidelity(path, graph),
                    cost=cost,
                )
            )
    return flows


def resolve_assignment(
    scenario: Scenario, config: SimConfig, rng: random.Random
) -> Assignment:
    source = config.assignment
    if source is AssignmentSource.GIVEN:
        if scenario.given_assignment is None:
            raise ConfigError("assignment source is 'given' but no workers were supplied")
        return {a: frozenset(w) for a, w in scenario.given_assignment.items()}
    if source is AssignmentSource.GREEDY:
        return assign_greedy(scenario.graph, scenario.apps)
    if source is AssignmentSource.RANDOM:
        return assign_random(scenario.graph, scenario.apps, rng)
    return assign_exhaustive(scenario.graph, scenario.apps, config.exhaustive_limit)


@dataclass(frozen=True)
class SlotLedger:
    """Per-slot record kept when tracing is enabled."""

    slot: int
    sampled: dict[EdgeId, int]
    residual: dict[EdgeId, int]
    grants: dict[tuple[AppId, NodeId], int]  # (app, worker) -> granted attempts
    successes: dict[tuple[AppId, NodeId], int]


@dataclass(frozen=True)
class AppMetrics:
    grants: int
    delivered: int
    attempts: int  # elementary link-level pairs consumed by the app's grants
    delivered_rate: float
    weighted_rate: float
    mean_latency: Optional[float]  # slots from arrival to grant; Poisson only


@dataclass(frozen=True)
class EdgeMetrics:
    grants: int
    utilization: float  # grants / (measured_slots * capacity * gen_success_prob)


@dataclass(frozen=True)
class Metrics:
    slots: int
    warmup_slots: int
    measured_slots: int
    seed: int
    policy: Policy
    per_app: dict[AppId, AppMetrics]
    per_edge: dict[EdgeId, EdgeMetrics]
    jain_weighted: Optional[float]
    total_delivered: int
    trace: Optional[tuple[SlotLedger, ...]] = None


def _verify_slot(
    slot: int,
    sampled: Mapping[EdgeId, int],
    result: SlotGrants,
    successes: Mapping[Flow, int],
) -> dict[EdgeId, int]:
    """Always-on conservation check; returns per-edge consumed pairs."""
    consumed = {e: 0 for e in sampled}
    for flow, count in result.per_flow.items():
        if count < 0:
            raise RuntimeError(f"slot {slot}: negative grant count")
        for e in flow.edges:
            consumed[e] += count
    for e in sampled:
        if result.residual[e] < 0 or consumed[e] != sampled[e] - result.residual[e]:
            raise RuntimeError(f"slot {slot}: capacity conservation violated on edge {e}")
        if consumed[e] > sampled[e]:
            raise RuntimeError(f"slot {slot}: edge {e} over-granted")
    for flow, done in successes.items():
        if done > result.per_flow.get(flow, 0):
            raise RuntimeError(f"slot {slot}: successes exceed grants for app {flow.app}")
    return consumed


def run(
    scenario: Scenario,
    config: Optional[SimConfig] = None,
    *,
    collect_trace: bool = False,
) -> Metrics:
    """Simulate one seeded run and return its metrics.

    Pairs not consumed in their generation slot are discarded, so sampled
    capacity is a per-slot renewable resource. Slots before warmup_slots
    are excluded from every accumulated metric. Identical (scenario,
    config) always produces identical Metrics.
    """
    cfg = config if config is not None else scenario.config
    rng_capacity = stream_rng(cfg.seed, "capacity")
    rng_arrival = stream_rng(cfg.seed, "arrival")
    rng_success = stream_rng(cfg.seed, "success")
    rng_assignment = stream_rng(cfg.seed, "assignment")

    assignment = resolve_assignment(scenario, cfg, rng_assignment)
    flows_by_app = build_flows(scenario.graph, scenario.apps, assignment, cfg.cost_mode)
    state = SchedulerState(
        cfg.policy, scenario.apps, flows_by_app, cfg.traffic, cfg.quantum_base
    )
    links = sorted(scenario.graph.links, key=lambda l: l.id)
    apps = sorted(scenario.apps, key=lambda a: a.id)

    grants_by_app = dict.fromkeys((a.id for a in apps), 0)
    delivered_by_app = dict.fromkeys((a.id for a in apps), 0)
    attempts_by_app = dict.fromkeys((a.id for a in apps), 0)
    latencies: dict[AppId, list[int]] = {a.id: [] for a in apps}
    grants_by_edge = dict.fromkeys((l.id for l in links), 0)
    trace: list[SlotLedger] = []

    for slot in range(cfg.slots):
        sampled = {
            l.id: sample_capacity(l, cfg.capacity_mode, rng_capacity) for l in links
        }
        if cfg.traffic is Traffic.POISSON:
            arrivals = {a.id: poisson_sample(a.arrival_rate, rng_arrival) for a in apps}
            enqueue_arrivals(state, slot, arrivals)
        result = schedule_slot(state, sampled)
        successes = resolve_successes(result.per_flow, rng_success)
        consumed = _verify_slot(slot, sampled, result, successes)

        if slot >= cfg.warmup_slots:
            for flow, count in result.per_flow.items():
                grants_by_app[flow.app] += count
                attempts_by_app[flow.app] += count * flow.hop_count
            for flow, done in successes.items():
                delivered_by_app[flow.app] += done
            for e, used in consumed.items():
                grants_by_edge[e] += used
            for req in result.granted_requests:
                latencies[req.app].append(slot - req.arrival_slot)
        if collect_trace:
            trace.append(
                SlotLedger(
                    slot=slot,
                    sampled=sampled,
                    residual=dict(result.residual),
                    grants={
                        (f.app, f.worker): c
                        for f, c in sorted(
                            result.per_flow.items(), key=lambda kv: (kv[0].app, kv[0].path)
                        )
                    },
                    successes={
                        (f.app, f.worker): c
                        for f, c in sorted(
                            successes.items(), key=lambda kv: (kv[0].app, kv[0].path)
                        )
                    },
                )
            )

    measured = cfg.slots - cfg.warmup_slots
    per_app: dict[AppId, AppMetrics] = {}
    for app in apps:
        rate = delivered_by_app[app.id] / measured
        lat = latencies[app.id]
        per_app[app.id] = AppMetrics(
            grants=grants_by_app[app.id],
            delivered=delivered_by_app[app.id],
            attempts=attempts_by_app[app.id],
            delivered_rate=rate,
            weighted_rate=rate / app.weight,
            mean_latency=(statistics.fmean(lat) if lat else None)
            if cfg.traffic is Traffic.POISSON
            else None,
        )
    per_edge = {
        l.id: EdgeMetrics(
            grants=grants_by_edge[l.id],
            utilization=grants_by_edge[l.id] / (measured * l.effective_capacity),
        )
        for l in links
    }
    weighted = [m.weighted_rate for m in per_app.values()]
    jain = jain_index(weighted) if weighted and any(v > 0 for v in weighted) else None
    return Metrics(
        slots=cfg.slots,
        warmup_slots=cfg.warmup_slots,
        measured_slots=measured,
        seed=cfg.seed,
        policy=cfg.policy,
        per_app=per_app,
        per_edge=per_edge,
        jain_weighted=jain,
        total_delivered=sum(delivered_by_app.values()),
        trace=tuple(trace) if collect_trace else None,
    )


@dataclass(frozen=True)
class AggStat:
    mean: float
    stddev: float  # sample standard deviation; 0.0 when n == 1
    n: int


@dataclass(frozen=True)
class ReplicationSummary:
    n: int
    stats: dict[str, AggStat]


def replication_runs(
    scenario: Scenario, config: Optional[SimConfig] = None, n_replications: int = 1
) -> list[Metrics]:
    """Independent runs with per-replication derived seeds, in index order."""
    cfg = config if config is not None else scenario.config
    if n_replications < 1:
        raise ValueError("n_replications must be >= 1")
    return [
        run(scenario, dataclasses.replace(cfg, seed=replication_seed(cfg.seed, i)))
        for i in range(n_replications)
    ]


def aggregate_metrics(runs: Sequence[Metrics]) -> ReplicationSummary:
    """Mean and sample standard deviation of every scalar metric."""
    samples: dict[str, list[float]] = {}

    def put(key: str, value: Optional[float]) -> None:
        if value is not None:
            samples.setdefault(key, []).append(float(value))

    for m in runs:
        for app_id, am in m.per_app.items():
            put(f"app_{app_id}.grants", am.grants)
            put(f"app_{app_id}.delivered", am.delivered)
            put(f"app_{app_id}.delivered_rate", am.delivered_rate)
            put(f"app_{app_id}.weighted_rate", am.weighted_rate)
            put(f"app_{app_id}.mean_latency", am.mean_latency)
        for edge_id, em in m.per_edge.items():
            put(f"edge_{edge_id}.utilization", em.utilization)
        put("jain_weighted", m.jain_weighted)
        put("total_delivered", m.total_delivered)

    stats = {}
    for key in sorted(samples):
        vals = samples[key]
        stats[key] = AggStat(
            mean=statistics.fmean(vals),
            stddev=statistics.stdev(vals) if len(vals) > 1 else 0.0,
            n=len(vals),
        )
    return ReplicationSummary(n=len(runs), stats=stats)


def replicate(
    scenario: Scenario, config: Optional[SimConfig] = None, n_replications: int = 1
) -> ReplicationSummary:
    """Run n independent replications and aggregate their metrics.

    Replication i uses seed replication_seed(master, i); results never
    depend on execution order or thread count.
    """
    return aggregate_metrics(replication_runs(scenario, config, n_replications))
