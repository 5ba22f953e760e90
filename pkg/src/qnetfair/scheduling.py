"""Per-slot arbitration of end-to-end entanglement grants.

A grant reserves one EPR pair on every edge of the flow's path within the
current slot, so contention is network-wide rather than per link. Four
disciplines are supported:

* FCFS: all pending requests ordered by (arrival_slot, app id, seq) and
  scanned once per slot; requires Poisson traffic.
* RR: repeated passes over the active-app ring, one grant per app per pass.
* WRR: as RR with up to ``weight`` grants per app per pass (integer weights).
* DRR: classic deficit round robin; each pass credits every visited app
  with quantum_base*weight, and grants spend the flow's cost from the
  deficit. A deficit blocked by capacity persists across slots, capped at
  quantum + the app's largest flow cost; an emptied queue resets it to 0.

Passes repeat while some active app still has a flow with residual
capacity on every edge, which keeps the slot work-conserving and, for
DRR, lets an app accumulate credit across fruitless passes until it can
afford an expensive flow. The head pointer persists across slots: after
any slot with grants it moves to the successor of the last app granted.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .model import AppId, Application, EdgeId, Flow, Policy, Traffic

# slack for deficit-vs-cost comparisons; deficits are floats because
# weights are reals, costs are small integers
_DEFICIT_EPS = 1e-9


class ConfigError(Exception):
    """Scheduler configuration the discipline cannot honor."""


@dataclass(frozen=True)
class Request:
    app: AppId
    arrival_slot: int
    seq: int  # per-app monotone counter; (app, seq) is unique


@dataclass
class SlotGrants:
    """Outcome of one scheduling slot."""

    per_flow: dict[Flow, int]
    granted_requests: tuple[Request, ...]  # empty in backlogged mode
    residual: dict[EdgeId, int]

    def per_app(self) -> dict[AppId, int]:
        out: dict[AppId, int] = {}
        for flow, count in self.per_flow.items():
            out[flow.app] = out.get(flow.app, 0) + count
        return out


class SchedulerState:
    """Mutable scheduler state, owned by a single engine run.

    In backlogged mode every app always has a synthetic pending request
    (queues are conceptually infinite) and the active ring is fixed; in
    Poisson mode apps join the ring when they become backlogged and leave
    it when their queue drains.
    """

    def __init__(
        self,
        policy: Policy,
        apps: Sequence[Application],
        flows_by_app: Mapping[AppId, Sequence[Flow]],
        traffic: Traffic,
        quantum_base: int = 1,
    ):
        if policy is Policy.FCFS and traffic is Traffic.BACKLOGGED:
            raise ConfigError(
                "FCFS needs Poisson traffic: backlogged queues have no arrival order"
            )
        if policy is Policy.WRR:
            for app in apps:
                if not float(app.weight).is_integer():
                    raise ConfigError(
                        f"WRR needs integer weights, app {app.id} has {app.weight}"
                    )
        if not isinstance(quantum_base, int) or quantum_base < 1:
            raise ConfigError(f"quantum_base must be a positive integer, got {quantum_base}")

        self.policy = policy
        self.traffic = traffic
        self.quantum_base = quantum_base
        self.apps = {a.id: a for a in sorted(apps, key=lambda a: a.id)}
        self.flows: dict[AppId, tuple[Flow, ...]] = {}
        for app_id in self.apps:
            flows = tuple(sorted(flows_by_app[app_id], key=lambda f: f.worker))
            if not flows:
                raise ConfigError(f"app {app_id} has no flows")
            self.flows[app_id] = flows
        self.queues: dict[AppId, deque[Request]] = {a: deque() for a in self.apps}
        self.cursor: dict[AppId, int] = dict.fromkeys(self.apps, 0)
        self.deficit: dict[AppId, float] = dict.fromkeys(self.apps, 0.0)
        self.quantum = {a: quantum_base * app.weight for a, app in self.apps.items()}
        self.max_cost = {a: max(f.cost for f in self.flows[a]) for a in self.apps}
        self._next_seq: dict[AppId, int] = dict.fromkeys(self.apps, 0)
        if traffic is Traffic.BACKLOGGED:
            self.active: list[AppId] = list(self.apps)
        else:
            self.active = []
        self.head: Optional[AppId] = self.active[0] if self.active else None

    def backlogged(self, app_id: AppId) -> bool:
        return self.traffic is Traffic.BACKLOGGED or bool(self.queues[app_id])

    def deficit_cap(self, app_id: AppId) -> float:
        return self.quantum[app_id] + self.max_cost[app_id]


def enqueue_arrivals(
    state: SchedulerState, slot: int, arrivals: Mapping[AppId, int]
) -> None:
    """Append new requests FIFO per app; newly backlogged apps join the
    tail of the active ring. Poisson traffic only."""
    if state.traffic is not Traffic.POISSON:
        raise ConfigError("arrivals are only meaningful with Poisson traffic")
    for app_id in sorted(arrivals):
        count = arrivals[app_id]
        if count < 0:
            raise ValueError(f"negative arrival count for app {app_id}")
        if count == 0:
            continue
        queue = state.queues[app_id]
        newly_backlogged = not queue
        for _ in range(count):
            queue.append(Request(app_id, slot, state._next_seq[app_id]))
            state._next_seq[app_id] += 1
        if newly_backlogged:
            state.active.append(app_id)
            if state.head is None:
                state.head = app_id

def select_flow(
    state: SchedulerState, app_id: AppId, residual: Mapping[EdgeId, int]
) -> Optional[Flow]:
    """Next feasible flow of the app, rotating over its flows.

    Starting at the app's cursor, each flow is tried once in cyclic
    order; the first whose every path edge has residual >= 1 is returned
    and the cursor advances past it. Returns None (blocked) with the
    cursor unchanged when no flow fits.
    """
    flows = state.flows[app_id]
    start = state.cursor[app_id]
    for k in range(len(flows)):
        i = (start + k) % len(flows)
        flow = flows[i]
        if all(residual[e] >= 1 for e in flow.edges):
            state.cursor[app_id] = (i + 1) % len(flows)
            return flow
    return None


@dataclass
class _SlotCtx:
    residual: dict[EdgeId, int]
    grants: dict[Flow, int] = field(default_factory=dict)
    granted_requests: list[Request] = field(default_factory=list)
    last_granted: Optional[AppId] = None
    next_head: Optional[AppId] = None


def _successor(state: SchedulerState, app_id: AppId) -> Optional[AppId]:
    idx = state.active.index(app_id)
    return state.active[(idx + 1) % len(state.active)]


def _grant(state: SchedulerState, ctx: _SlotCtx, app_id: AppId, flow: Flow) -> None:
    for e in flow.edges:
        ctx.residual[e] -= 1
    ctx.grants[flow] = ctx.grants.get(flow, 0) + 1
    if state.traffic is Traffic.POISSON:
        ctx.granted_requests.append(state.queues[app_id].popleft())
    ctx.last_granted = app_id
    ctx.next_head = _successor(state, app_id)


def _leave_active(state: SchedulerState, ctx: _SlotCtx, app_id: AppId) -> None:
    idx = state.active.index(app_id)
    state.active.pop(idx)
    nxt = state.active[idx % len(state.active)] if state.active else None
    if state.head == app_id:
        state.head = nxt
    if ctx.next_head == app_id:
        ctx.next_head = nxt


def _any_capacity_feasible(state: SchedulerState, residual: Mapping[EdgeId, int]) -> bool:
    for app_id in state.active:
        for flow in state.flows[app_id]:
            if all(residual[e] >= 1 for e in flow.edges):
                return True
    return False


def _rotation(state: SchedulerState) -> list[AppId]:
    if state.head is None or state.head not in state.active:
        return list(state.active)
    i = state.active.index(state.head)
    return state.active[i:] + state.active[:i]


def _visit_budgeted(
    state: SchedulerState, ctx: _SlotCtx, app_id: AppId, budget: int
) -> int:
    """RR/WRR visit: up to ``budget`` grants through the flow cursor."""
    made = 0
    for _ in range(budget):
        if not state.backlogged(app_id):
            break
        flow = select_flow(state, app_id, ctx.residual)
        if flow is None:
            break
        _grant(state, ctx, app_id, flow)
        made += 1
        if not state.backlogged(app_id):
            _leave_active(state, ctx, app_id)
            break
    return made


def _visit_drr(state: SchedulerState, ctx: _SlotCtx, app_id: AppId) -> int:
    """DRR visit: credit one quantum, then serve while the deficit and the
    residual capacities allow. Capacity blocking caps and keeps the
    deficit; an emptied queue resets it and drops the app from the ring."""
    deficit = state.deficit[app_id] + state.quantum[app_id]
    made = 0
    blocked = False
    while state.backlogged(app_id):
        flow = select_flow(state, app_id, ctx.residual)
        if flow is None:
            blocked = True
            break
        if deficit < flow.cost - _DEFICIT_EPS:
            break
        _grant(state, ctx, app_id, flow)
        made += 1
        deficit -= flow.cost
        if not state.backlogged(app_id):
            deficit = 0.0
            _leave_active(state, ctx, app_id)
            break
    if blocked:
        deficit = min(deficit, state.deficit_cap(app_id))
    state.deficit[app_id] = deficit
    return made


def _one_pass(state: SchedulerState, ctx: _SlotCtx) -> int:
    made = 0
    for app_id in _rotation(state):
        if app_id not in state.active:
            continue  # queue drained earlier in this pass
        if state.policy is Policy.RR:
            made += _visit_budgeted(state, ctx, app_id, 1)
        elif state.policy is Policy.WRR:
            made += _visit_budgeted(state, ctx, app_id, int(state.apps[app_id].weight))
        else:
            made += _visit_drr(state, ctx, app_id)
    return made


def _round_robin_slot(state: SchedulerState, ctx: _SlotCtx) -> None:
    # a DRR pass can legitimately grant nothing while deficits build up
    # toward an expensive flow, but never more often than this
    stall_guard = 2 + max(
        (math.ceil(state.max_cost[a] / state.quantum[a]) for a in state.apps),
        default=0,
    )
    fruitless = 0
    while state.active and _any_capacity_feasible(state, ctx.residual):
        made = _one_pass(state, ctx)
        if made == 0:
            if state.policy is not Policy.DRR:
                break  # RR/WRR passes are side-effect free when nothing fits
            fruitless += 1
            if fruitless > stall_guard:  # pragma: no cover - internal invariant
                raise RuntimeError("scheduler stalled with feasible capacity")
        else:
            fruitless = 0


def _fcfs_slot(state: SchedulerState, ctx: _SlotCtx) -> None:
    pending = sorted(
        (r for q in state.queues.values() for r in q),
        key=lambda r: (r.arrival_slot, r.app, r.seq),
    )
    for req in pending:
        queue = state.queues[req.app]
        if not queue or queue[0] is not req:
            # an earlier request of this app already blocked; residuals
            # only shrink within the slot, so this one is blocked too
            continue
        flow = select_flow(state, req.app, ctx.residual)
        if flow is None:
            continue
        _grant(state, ctx, req.app, flow)  # pops req, the queue head
        if not queue:
            _leave_active(state, ctx, req.app)


def schedule_slot(
    state: SchedulerState, sampled_capacities: Mapping[EdgeId, int]
) -> SlotGrants:
    """Arbitrate one slot's grants against the sampled edge capacities.

    Every grant decrements the residual of each edge on the granted
    flow's path and consumes one pending request. On return no further
    grant is capacity-feasible for any backlogged app.
    """
    residual: dict[EdgeId, int] = {}
    for e, cap in sampled_capacities.items():
        if cap < 0 or int(cap) != cap:
            raise ValueError(f"sampled capacity of edge {e} must be a non-negative integer")
        residual[e] = int(cap)
    ctx = _SlotCtx(residual=residual, next_head=state.head)
    if state.policy is Policy.FCFS:
        _fcfs_slot(state, ctx)
    else:
        _round_robin_slot(state, ctx)
    if ctx.last_granted is not None:
        state.head = ctx.next_head
    return SlotGrants(
        per_flow=ctx.grants,
        granted_requests=tuple(ctx.granted_requests),
        residual=residual,
    )
