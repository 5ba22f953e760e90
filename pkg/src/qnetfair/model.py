"""Immutable data model for a slot-based entanglement-distribution network.

Nodes, links and applications use dense non-negative integer ids so hot
paths can index plain dicts and iteration order stays deterministic.
Fidelities are Werner-state fidelities: swap composition is closed on
[0.25, 1], and values below the fully-mixed floor are rejected at
validation time rather than clamped.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional

NodeId = int
EdgeId = int
AppId = int

WERNER_FLOOR = 0.25


class NodeKind(Enum):
    REPEATER = "repeater"
    COMPUTATION = "computation"


class Policy(Enum):
    FCFS = "FCFS"
    RR = "RR"
    WRR = "WRR"
    DRR = "DRR"


class Traffic(Enum):
    BACKLOGGED = "backlogged"
    POISSON = "poisson"


class CapacityMode(Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


class CostMode(Enum):
    UNIT = "unit"
    HOPS = "hops"


class AssignmentSource(Enum):
    GIVEN = "given"
    GREEDY = "greedy"
    RANDOM = "random"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class Node:
    id: NodeId
    kind: NodeKind
    # success probability of an entanglement swap performed at this node
    # when it sits between two other nodes on a path
    swap_success_prob: float = 1.0


@dataclass(frozen=True)
class QuantumLink:
    id: EdgeId
    endpoints: tuple[NodeId, NodeId]
    capacity_max: int  # EPR pairs attemptable per slot
    gen_success_prob: float = 1.0
    fidelity: float = 1.0

    @property
    def effective_capacity(self) -> float:
        """Expected pairs generated per slot."""
        return self.capacity_max * self.gen_success_prob


@dataclass(frozen=True)
class Application:
    id: AppId
    host: NodeId
    weight: float
    workers_needed: int
    candidates: frozenset[NodeId]
    min_fidelity: float = WERNER_FLOOR
    arrival_rate: float = 0.0  # requests per slot, Poisson traffic only


@dataclass(frozen=True)
class Flow:
    """A host-to-worker route plus the derived entanglement metrics.

    One grant to a flow consumes one EPR pair on every edge of its path
    within the same slot, then succeeds end to end with ``swap_prob``.
    """

    app: AppId
    path: tuple[NodeId, ...]  # host first, worker last
    edges: tuple[EdgeId, ...]
    swap_prob: float
    e2e_fidelity: float
    cost: int  # scheduler cost: 1 (unit mode) or hop count (hops mode)

    @property
    def hop_count(self) -> int:
        return len(self.edges)

    @property
    def worker(self) -> NodeId:
        return self.path[-1]


class NetworkGraph:
    """Undirected topology of repeater and computation nodes.

    At most one link per node pair (validation rejects duplicates, since
    paths are plain node sequences). The constructor is permissive about
    dangling references; ``validate_scenario`` reports them.
    """

    def __init__(self, nodes: Iterable[Node], links: Iterable[QuantumLink]):
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.links: tuple[QuantumLink, ...] = tuple(links)
        self._nodes = {n.id: n for n in self.nodes}
        self._links = {l.id: l for l in self.links}
        adj: dict[NodeId, list[tuple[NodeId, EdgeId]]] = {n.id: [] for n in self.nodes}
        pair: dict[tuple[NodeId, NodeId], EdgeId] = {}
        for link in self.links:
            u, v = link.endpoints
            adj.setdefault(u, []).append((v, link.id))
            adj.setdefault(v, []).append((u, link.id))
            pair[(min(u, v), max(u, v))] = link.id
        self._adj = {u: tuple(sorted(nbrs)) for u, nbrs in adj.items()}
        self._pair = pair

    def node(self, node_id: NodeId) -> Node:
        return self._nodes[node_id]

    def has_node(self, node_id: NodeId) -> bool:
        return node_id in self._nodes

    def link(self, edge_id: EdgeId) -> QuantumLink:
        return self._links[edge_id]

    def neighbors(self, node_id: NodeId) -> tuple[tuple[NodeId, EdgeId], ...]:
        """Adjacent (node, edge) pairs in ascending neighbor-id order."""
        return self._adj.get(node_id, ())

    def link_between(self, u: NodeId, v: NodeId) -> Optional[QuantumLink]:
        edge_id = self._pair.get((min(u, v), max(u, v)))
        return None if edge_id is None else self._links[edge_id]

    def effective_capacities(self) -> dict[EdgeId, float]:
        return {l.id: l.effective_capacity for l in self.links}


# per-application chosen worker pools
Assignment = dict[AppId, frozenset[NodeId]]


@dataclass(frozen=True)
class SimConfig:
    slots: int
    seed: int
    policy: Policy
    warmup_slots: int = 0
    traffic: Traffic = Traffic.BACKLOGGED
    capacity_mode: CapacityMode = CapacityMode.STOCHASTIC
    cost_mode: CostMode = CostMode.UNIT
    quantum_base: int = 1
    assignment: AssignmentSource = AssignmentSource.GREEDY
    exhaustive_limit: int = 1_000_000
    replications: int = 1


@dataclass(frozen=True)
class Scenario:
    """A validated scenario; all invariants hold and cross-references resolve."""

    graph: NetworkGraph
    apps: tuple[Application, ...]
    config: SimConfig
    eligible: Mapping[AppId, frozenset[NodeId]]
    given_assignment: Optional[Mapping[AppId, frozenset[NodeId]]] = None

    def app(self, app_id: AppId) -> Application:
        for a in self.apps:
            if a.id == app_id:
                return a
        raise KeyError(app_id)
