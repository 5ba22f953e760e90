"""Scenario validation: every model invariant, checked in one place.

Validation is pure (same input, same diagnostics, no mutation) and
reports one diagnostic per violation with a path-like locator such as
``apps[2].candidates: node 7 is a repeater``. Structural problems are
reported first; derived checks (worker eligibility, given pools) run
only once the structure is sound, since they need resolvable paths.
"""
from __future__ import annotations

from typing import Mapping, Optional, Sequence

from .model import (
    Application,
    AssignmentSource,
    CapacityMode,
    NetworkGraph,
    NodeKind,
    Policy,
    Scenario,
    SimConfig,
    Traffic,
    WERNER_FLOOR,
)
from .routing import EmptyEligibleSet, eligible_workers

# exact Poisson sampling stays numerically safe up to this rate
MAX_ARRIVAL_RATE = 30.0

_CAPACITY_INT_TOL = 1e-9


class ValidationError(Exception):
    def __init__(self, diagnostics: Sequence[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def _dense_ids(items, section: str, diags: list[str]) -> bool:
    ids = [it.id for it in items]
    if sorted(ids) != list(range(len(ids))):
        diags.append(f"{section}: ids must be dense integers from 0, got {sorted(ids)}")
        return False
    return True


def _check_structure(
    graph: NetworkGraph,
    apps: Sequence[Application],
    config: SimConfig,
    diags: list[str],
) -> None:
    _dense_ids(graph.nodes, "nodes", diags)
    for i, node in enumerate(graph.nodes):
        if not 0.0 < node.swap_success_prob <= 1.0:
            diags.append(
                f"nodes[{i}].swap_success_prob: must be in (0, 1], got {node.swap_success_prob}"
            )

    _dense_ids(graph.links, "links", diags)
    seen_pairs: set[tuple[int, int]] = set()
    for i, link in enumerate(graph.links):
        u, v = link.endpoints
        if u == v:
            diags.append(f"links[{i}].endpoints: endpoints must differ, got ({u}, {v})")
        for end in (u, v):
            if not graph.has_node(end):
                diags.append(f"links[{i}].endpoints: node {end} does not exist")
        pair = (min(u, v), max(u, v))
        if pair in seen_pairs:
            diags.append(f"links[{i}]: duplicate link between nodes {pair[0]} and {pair[1]}")
        seen_pairs.add(pair)
        if link.capacity_max < 1:
            diags.append(f"links[{i}].capacity_max: must be >= 1, got {link.capacity_max}")
        if not 0.0 < link.gen_success_prob <= 1.0:
            diags.append(
                f"links[{i}].gen_success_prob: must be in (0, 1], got {link.gen_success_prob}"
            )
        if not WERNER_FLOOR <= link.fidelity <= 1.0:
            diags.append(
                f"links[{i}].fidelity: fidelity below Werner floor {WERNER_FLOOR} or above 1, "
                f"got {link.fidelity}"
            )
        if config.capacity_mode is CapacityMode.DETERMINISTIC:
            eff = link.capacity_max * link.gen_success_prob
            if abs(eff - round(eff)) > _CAPACITY_INT_TOL:
                diags.append(
                    f"links[{i}]: deterministic capacity mode needs integral "
                    f"capacity_max * gen_success_prob, got {eff}"
                )

    _dense_ids(apps, "apps", diags)
    for i, app in enumerate(apps):
        if not graph.has_node(app.host):
            diags.append(f"apps[{i}].host: node {app.host} does not exist")
        elif graph.node(app.host).kind is not NodeKind.COMPUTATION:
            diags.append(f"apps[{i}].host: node {app.host} is a repeater")
        if app.weight <= 0:
            diags.append(f"apps[{i}].weight: must be > 0, got {app.weight}")
        if config.policy is Policy.WRR and not float(app.weight).is_integer():
            diags.append(
                f"apps[{i}].weight: WRR needs integer weights, got {app.weight}"
            )
        if app.workers_needed < 1:
            diags.append(f"apps[{i}].workers_needed: must be >= 1, got {app.workers_needed}")
        if app.workers_needed > len(app.candidates):
            diags.append(
                f"apps[{i}].workers_needed: workers_needed exceeds candidates "
                f"({app.workers_needed} > {len(app.candidates)})"
            )
        if app.host in app.candidates:
            diags.append(f"apps[{i}].candidates: host {app.host} cannot be its own worker")
        for cand in sorted(app.candidates):
            if not graph.has_node(cand):
                diags.append(f"apps[{i}].candidates: node {cand} does not exist")
            elif graph.node(cand).kind is not NodeKind.COMPUTATION:
                diags.append(f"apps[{i}].candidates: node {cand} is a repeater")
        if not WERNER_FLOOR <= app.min_fidelity <= 1.0:
            diags.append(
                f"apps[{i}].min_fidelity: must be in [{WERNER_FLOOR}, 1], got {app.min_fidelity}"
            )
        if app.arrival_rate < 0:
            diags.append(f"apps[{i}].arrival_rate: must be >= 0, got {app.arrival_rate}")
        if config.traffic is Traffic.POISSON and app.arrival_rate > MAX_ARRIVAL_RATE:
            diags.append(
                f"apps[{i}].arrival_rate: exact Poisson sampling requires "
                f"rate <= {MAX_ARRIVAL_RATE}, got {app.arrival_rate}"
            )

    if config.slots < 1:
        diags.append(f"sim.slots: must be >= 1, got {config.slots}")
    if not 0 <= config.warmup_slots < max(config.slots, 1):
        diags.append(
            f"sim.warmup: must satisfy 0 <= warmup < slots, got {config.warmup_slots}"
        )
    if config.quantum_base < 1:
        diags.append(f"sim.quantum_base: must be >= 1, got {config.quantum_base}")
    if config.exhaustive_limit < 1:
        diags.append(f"sim.exhaustive_limit: must be >= 1, got {config.exhaustive_limit}")
    if config.replications < 1:
        diags.append(f"sim.replications: must be >= 1, got {config.replications}")
    if config.policy is Policy.FCFS and config.traffic is Traffic.BACKLOGGED:
        diags.append(
            "sim.policy: FCFS is rejected with backlogged traffic "
            "(always-full queues have no arrival order)"
        )


def validate_scenario(
    graph: NetworkGraph,
    apps: Sequence[Application],
    config: SimConfig,
    given_assignment: Optional[Mapping[int, frozenset[int]]] = None,
) -> Scenario:
    """Check every invariant and cross-reference; raise ValidationError
    with one diagnostic per violation, or return the validated Scenario
    (with per-app eligible worker sets precomputed)."""
    diags: list[str] = []
    _check_structure(graph, apps, config, diags)
    if diags:
        raise ValidationError(diags)

    eligible: dict[int, frozenset[int]] = {}
    for i, app in enumerate(sorted(apps, key=lambda a: a.id)):
        try:
            eligible[app.id] = eligible_workers(graph, app)
        except EmptyEligibleSet as err:
            diags.append(
                f"apps[{i}]: only {len(err.eligible)} eligible workers "
                f"(reachable with fidelity >= {app.min_fidelity}), needs {app.workers_needed}"
            )

    if config.assignment is AssignmentSource.GIVEN:
        if given_assignment is None:
            diags.append("sim.assignment: 'given' requires a workers list on every app")
        else:
            for i, app in enumerate(sorted(apps, key=lambda a: a.id)):
                workers = given_assignment.get(app.id)
                if workers is None:
                    diags.append(f"apps[{i}].workers: required when sim.assignment is 'given'")
                    continue
                if len(workers) != app.workers_needed:
                    diags.append(
                        f"apps[{i}].workers: expected {app.workers_needed} workers, "
                        f"got {len(workers)}"
                    )
                extra = set(workers) - set(app.candidates)
                if extra:
                    diags.append(
                        f"apps[{i}].workers: {sorted(extra)} not among candidates"
                    )
                elif app.id in eligible:
                    bad = set(workers) - set(eligible[app.id])
                    if bad:
                        diags.append(
                            f"apps[{i}].workers: {sorted(bad)} not eligible "
                            f"(unreachable or below min_fidelity)"
                        )

    if diags:
        raise ValidationError(diags)
    return Scenario(
        graph=graph,
        apps=tuple(sorted(apps, key=lambda a: a.id)),
        config=config,
        eligible=eligible,
        given_assignment=(
            {a: frozenset(w) for a, w in given_assignment.items()}
            if given_assignment is not None
            else None
        ),
    )
