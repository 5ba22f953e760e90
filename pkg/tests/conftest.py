import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qnetfair import (
    Application,
    NetworkGraph,
    Node,
    NodeKind,
    QuantumLink,
)


def line_graph(fidelities, capacity=1, gen_prob=1.0, swap_q=1.0, kinds=None):
    """Chain 0-1-...-n with one link per consecutive pair.

    ``fidelities`` gives one fidelity per link; every node is a
    computation node with the same swap probability unless ``kinds``
    overrides them.
    """
    n = len(fidelities) + 1
    if kinds is None:
        kinds = [NodeKind.COMPUTATION] * n
    nodes = [Node(i, kinds[i], swap_q) for i in range(n)]
    links = [
        QuantumLink(i, (i, i + 1), capacity, gen_prob, fidelities[i])
        for i in range(n - 1)
    ]
    return NetworkGraph(nodes, links)


def shared_link_graph(capacity, gen_prob=1.0):
    """Two computation nodes joined by a single link."""
    nodes = [Node(0, NodeKind.COMPUTATION), Node(1, NodeKind.COMPUTATION)]
    return NetworkGraph(nodes, [QuantumLink(0, (0, 1), capacity, gen_prob, 1.0)])


def shared_link_apps(weights, arrival_rate=0.0):
    """One app per weight, all host 0 with the single candidate worker 1."""
    return [
        Application(i, 0, float(w), 1, frozenset({1}), arrival_rate=arrival_rate)
        for i, w in enumerate(weights)
    ]


def parking_lot():
    """Line 0-1-2 with unit links; app 0 spans both edges, apps 1 and 2
    take one edge each. The canonical fairness topology."""
    graph = line_graph([1.0, 1.0], capacity=1)
    apps = [
        Application(0, 0, 1.0, 1, frozenset({2})),
        Application(1, 0, 1.0, 1, frozenset({1})),
        Application(2, 1, 1.0, 1, frozenset({2})),
    ]
    assignment = {0: frozenset({2}), 1: frozenset({1}), 2: frozenset({2})}
    return graph, apps, assignment


def scenario_dict(**sim_overrides):
    """A small valid scenario document for schema/CLI tests."""
    sim = {
        "slots": 100,
        "warmup": 0,
        "seed": 3,
        "traffic": "backlogged",
        "capacity_mode": "deterministic",
        "policy": "RR",
        "cost_mode": "unit",
        "quantum_base": 1,
        "assignment": "greedy",
        "replications": 1,
    }
    sim.update(sim_overrides)
    return {
        "nodes": [
            {"id": 0, "kind": "computation"},
            {"id": 1, "kind": "computation"},
        ],
        "links": [
            {
                "id": 0,
                "endpoints": [0, 1],
                "capacity_max": 1,
                "gen_success_prob": 1.0,
                "fidelity": 1.0,
            }
        ],
        "apps": [
            {
                "id": 0,
                "host": 0,
                "weight": 1.0,
                "workers_needed": 1,
                "candidates": [1],
            }
        ],
        "sim": sim,
    }


@pytest.fixture
def write_scenario(tmp_path):
    def _write(data, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data, indent=1), encoding="utf-8")
        return str(path)

    return _write
