"""Hop-count routing and per-path entanglement metrics.

Every flow uses a single fixed path chosen by minimum hop count, with a
deterministic tie-break toward the lexicographically smallest node-id
sequence. All functions are pure over an immutable graph.
"""
from __future__ import annotations

from collections import deque

from .model import Application, EdgeId, NetworkGraph, NodeId


class NoPath(Exception):
    """No route exists between the requested endpoints."""


class EmptyEligibleSet(Exception):
    """An application has fewer eligible workers than it needs."""

    def __init__(self, app_id: int, eligible, needed: int):
        self.app_id = app_id
        self.eligible = frozenset(eligible)
        self.needed = needed
        super().__init__(
            f"app {app_id}: {len(self.eligible)} eligible workers, needs {needed}"
        )


def shortest_path(graph: NetworkGraph, src: NodeId, dst: NodeId) -> tuple[NodeId, ...]:
    """Minimum-hop path from src to dst as a node-id tuple.

    Breadth-first search expanding neighbors in ascending id order, never
    reparenting a node once discovered; among equal-hop paths this yields
    the lexicographically smallest node sequence.
    """
    if src == dst:
        raise ValueError("src and dst must differ")
    if not graph.has_node(src) or not graph.has_node(dst):
        raise ValueError(f"unknown node in ({src}, {dst})")
    parent: dict[NodeId, NodeId | None] = {src: None}
    queue: deque[NodeId] = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for v, _edge in graph.neighbors(u):
            if v not in parent:
                parent[v] = u
                queue.append(v)
    if dst not in parent:
        raise NoPath(f"no path from {src} to {dst}")
    path = [dst]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])  # type: ignore[arg-type]
    path.reverse()
    return tuple(path)


def path_edges(graph: NetworkGraph, path: tuple[NodeId, ...]) -> tuple[EdgeId, ...]:
    """Edge ids along a node sequence; consecutive nodes must be adjacent."""
    edges = []
    for u, v in zip(path, path[1:]):
        link = graph.link_between(u, v)
        if link is None:
            raise ValueError(f"nodes {u} and {v} are not adjacent")
        edges.append(link.id)
    return tuple(edges)


def path_swap_prob(path: tuple[NodeId, ...], graph: NetworkGraph) -> float:
    """Probability that all swaps along the path succeed.

    Product of swap_success_prob over the intermediate nodes; 1.0 for a
    single-hop path (no swap needed).
    """
    prob = 1.0
    for node_id in path[1:-1]:
        prob *= graph.node(node_id).swap_success_prob
    return prob


def path_fidelity(path: tuple[NodeId, ...], graph: NetworkGraph) -> float:
    """End-to-end Werner fidelity of the pair delivered over the path.

    Left fold over the path's links of
        F <- F*Fe + (1 - F)*(1 - Fe)/3
    starting from the first link's fidelity. Closed on [0.25, 1], with
    0.25 (fully mixed) as a fixed point.
    """
    edges = path_edges(graph, path)
    fid = graph.link(edges[0]).fidelity
    for edge_id in edges[1:]:
        fe = graph.link(edge_id).fidelity
        fid = fid * fe + (1.0 - fid) * (1.0 - fe) / 3.0
    return fid


def eligible_workers(graph: NetworkGraph, app: Application) -> frozenset[NodeId]:
    """Candidates reachable from the host whose shortest-path fidelity
    meets the application's threshold.

    Raises EmptyEligibleSet when fewer than workers_needed candidates
    survive the filter.
    """
    eligible = set()
    for cand in sorted(app.candidates):
        try:
            path = shortest_path(graph, app.host, cand)
        except NoPath:
            continue
        if path_fidelity(path, graph) >= app.min_fidelity:
            eligible.add(cand)
    if len(eligible) < app.workers_needed:
        raise EmptyEligibleSet(app.id, eligible, app.workers_needed)
    return frozenset(eligible)
