import random

import pytest
from hypothesis import given, strategies as st

from conftest import line_graph
from gen import random_connected_graph
from qnetfair import (
    Application,
    NetworkGraph,
    Node,
    NodeKind,
    NoPath,
    QuantumLink,
    eligible_workers,
    path_fidelity,
    path_swap_prob,
    shortest_path,
)


def _graph_from_edges(n, edges):
    nodes = [Node(i, NodeKind.COMPUTATION) for i in range(n)]
    links = [QuantumLink(i, e, 1, 1.0, 1.0) for i, e in enumerate(edges)]
    return NetworkGraph(nodes, links)


class TestShortestPath:
    def test_line(self):
        g = _graph_from_edges(3, [(0, 1), (1, 2)])
        assert shortest_path(g, 0, 2) == (0, 1, 2)

    def test_square_lexicographic_tie_break(self):
        g = _graph_from_edges(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
        assert shortest_path(g, 0, 3) == (0, 1, 3)

    def test_disconnected_raises(self):
        g = _graph_from_edges(4, [(0, 1), (2, 3)])
        with pytest.raises(NoPath):
            shortest_path(g, 0, 3)

    def test_same_endpoints_rejected(self):
        g = _graph_from_edges(2, [(0, 1)])
        with pytest.raises(ValueError):
            shortest_path(g, 1, 1)

    def test_matches_exhaustive_enumeration_on_small_graphs(self):
        # brute force: the minimum-hop, lexicographically smallest simple path
        def all_simple_paths(g, src, dst):
            out = []

            def dfs(node, seen, acc):
                if node == dst:
                    out.append(tuple(acc))
                    return
                for nbr, _ in g.neighbors(node):
                    if nbr not in seen:
                        seen.add(nbr)
                        acc.append(nbr)
                        dfs(nbr, seen, acc)
                        acc.pop()
                        seen.remove(nbr)

            dfs(src, {src}, [src])
            return out

        rng = random.Random(99)
        checked = 0
        for _ in range(60):
            n = rng.randint(3, 8)
            g = random_connected_graph(rng, n, extra_edges=rng.randint(0, 4))
            src, dst = rng.sample(range(n), 2)
            paths = all_simple_paths(g, src, dst)
            expected = min(paths, key=lambda p: (len(p), p))
            assert shortest_path(g, src, dst) == expected
            checked += 1
        assert checked == 60

    def test_repeated_calls_identical(self):
        rng = random.Random(5)
        g = random_connected_graph(rng, 7, extra_edges=3)
        assert shortest_path(g, 0, 6) == shortest_path(g, 0, 6)


class TestSwapProb:
    def test_single_hop_needs_no_swap(self):
        g = line_graph([1.0], swap_q=0.3)
        assert path_swap_prob((0, 1), g) == 1.0

    def test_two_intermediates(self):
        g = line_graph([1.0, 1.0, 1.0], swap_q=0.9)
        assert path_swap_prob((0, 1, 2, 3), g) == pytest.approx(0.81)

    def test_mixed_intermediates(self):
        # oracle: direct product of the three intermediate probabilities
        nodes = [
            Node(0, NodeKind.COMPUTATION, 1.0),
            Node(1, NodeKind.REPEATER, 1.0),
            Node(2, NodeKind.REPEATER, 0.5),
            Node(3, NodeKind.REPEATER, 0.8),
            Node(4, NodeKind.COMPUTATION, 1.0),
        ]
        links = [QuantumLink(i, (i, i + 1), 1, 1.0, 1.0) for i in range(4)]
        g = NetworkGraph(nodes, links)
        assert path_swap_prob((0, 1, 2, 3, 4), g) == pytest.approx(1.0 * 0.5 * 0.8)

    @given(
        st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5),
        st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5),
        st.floats(0.05, 1.0),
    )
    def test_multiplicative_over_concatenation(self, left_q, right_q, joint_q):
        qs = left_q + [joint_q] + right_q
        g = line_graph([1.0] * (len(qs) + 1))
        g = NetworkGraph(
            [Node(i, NodeKind.COMPUTATION, ([1.0] + qs + [1.0])[i]) for i in range(len(qs) + 2)],
            g.links,
        )
        full = tuple(range(len(qs) + 2))
        joint = len(left_q) + 1
        p1 = path_swap_prob(full[: joint + 1], g)
        p2 = path_swap_prob(full[joint:], g)
        whole = path_swap_prob(full, g)
        assert whole == pytest.approx(p1 * p2 * qs[len(left_q)])


class TestPathFidelity:
    def test_perfect_links_compose_perfectly(self):
        g = line_graph([1.0, 1.0, 1.0])
        assert path_fidelity((0, 1, 2, 3), g) == 1.0

    def test_fully_mixed_fixed_point(self):
        g = line_graph([0.25, 0.25])
        assert path_fidelity((0, 1, 2), g) == 0.25

    def test_two_point_nine_links(self):
        # 0.9*0.9 + 0.1*0.1/3
        g = line_graph([0.9, 0.9])
        assert path_fidelity((0, 1, 2), g) == pytest.approx(0.81 + 0.01 / 3, abs=1e-12)

    def test_single_link_is_its_fidelity(self):
        g = line_graph([0.6])
        assert path_fidelity((0, 1), g) == 0.6

    @given(st.lists(st.floats(0.2500001, 1.0), min_size=1, max_size=6))
    def test_stays_in_werner_range(self, fids):
        g = line_graph(fids)
        f = path_fidelity(tuple(range(len(fids) + 1)), g)
        assert 0.25 <= f <= 1.0 + 1e-12

    @given(
        st.lists(st.floats(0.2500001, 1.0), min_size=1, max_size=5),
        st.floats(0.2500001, 0.9999999),
    )
    def test_extension_by_imperfect_link_never_increases(self, fids, extra):
        g = line_graph(fids + [extra])
        base = path_fidelity(tuple(range(len(fids) + 1)), g)
        extended = path_fidelity(tuple(range(len(fids) + 2)), g)
        assert extended <= base + 1e-12

    @given(st.lists(st.floats(0.2500001, 1.0), min_size=1, max_size=5))
    def test_extension_by_perfect_link_is_invariant(self, fids):
        g = line_graph(fids + [1.0])
        base = path_fidelity(tuple(range(len(fids) + 1)), g)
        extended = path_fidelity(tuple(range(len(fids) + 2)), g)
        assert extended == base


class TestEligibleWorkers:
    def test_floor_threshold_keeps_everyone_connected(self):
        g = line_graph([0.8, 0.8, 0.8])
        app = Application(0, 0, 1.0, 1, frozenset({1, 2, 3}), min_fidelity=0.25)
        assert eligible_workers(g, app) == frozenset({1, 2, 3})

    def test_perfect_threshold_needs_perfect_links(self):
        g = line_graph([1.0, 0.9])
        app = Application(0, 0, 1.0, 1, frozenset({1, 2}), min_fidelity=1.0)
        assert eligible_workers(g, app) == frozenset({1})

    def test_fidelity_filter_separates_near_and_far_workers(self):
        # host 0, worker 1 reachable over 2 links, worker 2 over 3 links,
        # every link F = 0.9; the worker fidelities are 0.813333 and
        # 0.738222 (by the fold), so a 0.78 threshold keeps only worker 1
        nodes = [
            Node(0, NodeKind.COMPUTATION),
            Node(1, NodeKind.COMPUTATION),
            Node(2, NodeKind.COMPUTATION),
            Node(3, NodeKind.REPEATER),
            Node(4, NodeKind.REPEATER),
        ]
        links = [
            QuantumLink(0, (0, 3), 1, 1.0, 0.9),
            QuantumLink(1, (3, 1), 1, 1.0, 0.9),
            QuantumLink(2, (3, 4), 1, 1.0, 0.9),
            QuantumLink(3, (4, 2), 1, 1.0, 0.9),
        ]
        g = NetworkGraph(nodes, links)
        assert path_fidelity(shortest_path(g, 0, 1), g) == pytest.approx(0.813333, abs=1e-6)
        assert path_fidelity(shortest_path(g, 0, 2), g) == pytest.approx(0.738222, abs=1e-6)
        app = Application(0, 0, 1.0, 1, frozenset({1, 2}), min_fidelity=0.78)
        assert eligible_workers(g, app) == frozenset({1})

    def test_unreachable_candidates_are_dropped(self):
        g = _graph_from_edges(4, [(0, 1), (2, 3)])
        app = Application(0, 0, 1.0, 1, frozenset({1, 3}))
        assert eligible_workers(g, app) == frozenset({1})

    def test_too_few_survivors_raises(self):
        from qnetfair import EmptyEligibleSet

        g = _graph_from_edges(4, [(0, 1), (2, 3)])
        app = Application(0, 0, 1.0, 2, frozenset({1, 3}))
        with pytest.raises(EmptyEligibleSet):
            eligible_workers(g, app)
