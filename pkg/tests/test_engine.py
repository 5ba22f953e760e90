import dataclasses
import math
import random

import pytest

from conftest import line_graph, shared_link_apps, shared_link_graph
from qnetfair import (
    Application,
    AssignmentSource,
    CapacityMode,
    Flow,
    NetworkGraph,
    Node,
    NodeKind,
    Policy,
    QuantumLink,
    SimConfig,
    Traffic,
    poisson_sample,
    replicate,
    replication_runs,
    replication_seed,
    resolve_successes,
    run,
    sample_capacity,
    stream_seed,
    validate_scenario,
)


def make_scenario(graph, apps, **config_overrides):
    base = dict(
        slots=100,
        seed=5,
        policy=Policy.RR,
        capacity_mode=CapacityMode.DETERMINISTIC,
        assignment=AssignmentSource.GREEDY,
    )
    base.update(config_overrides)
    return validate_scenario(graph, apps, SimConfig(**base))


def unit_pipe_scenario(**overrides):
    return make_scenario(shared_link_graph(1), shared_link_apps([1.0]), **overrides)


class TestStreams:
    def test_labels_give_distinct_seeds(self):
        seeds = {stream_seed(42, label) for label in ("capacity", "arrival", "success", "assignment")}
        assert len(seeds) == 4

    def test_stream_seed_deterministic(self):
        assert stream_seed(42, "capacity") == stream_seed(42, "capacity")
        assert stream_seed(42, "capacity") != stream_seed(43, "capacity")

    def test_replication_seeds_distinct(self):
        seeds = {replication_seed(7, i) for i in range(10)}
        assert len(seeds) == 10


class TestSampleCapacity:
    def test_certain_generation(self):
        link = QuantumLink(0, (0, 1), 4, 1.0, 1.0)
        rng = random.Random(0)
        assert sample_capacity(link, CapacityMode.DETERMINISTIC, rng) == 4
        assert sample_capacity(link, CapacityMode.STOCHASTIC, rng) == 4

    def test_deterministic_rounds_integral_product(self):
        link = QuantumLink(0, (0, 1), 4, 0.5, 1.0)
        assert sample_capacity(link, CapacityMode.DETERMINISTIC, random.Random(0)) == 2

    def test_stochastic_binomial_moments(self):
        link = QuantumLink(0, (0, 1), 4, 0.5, 1.0)
        rng = random.Random(123)
        n = 100_000
        draws = [sample_capacity(link, CapacityMode.STOCHASTIC, rng) for _ in range(n)]
        assert set(draws) <= {0, 1, 2, 3, 4}
        mean = sum(draws) / n
        sigma = math.sqrt(4 * 0.5 * 0.5 / n)
        assert abs(mean - 2.0) <= 3 * sigma


class TestPoissonSample:
    def test_zero_rate(self):
        assert poisson_sample(0.0, random.Random(1)) == 0

    def test_moments(self):
        rng = random.Random(9)
        n = 50_000
        lam = 2.5
        draws = [poisson_sample(lam, rng) for _ in range(n)]
        mean = sum(draws) / n
        assert abs(mean - lam) <= 3 * math.sqrt(lam / n)
        var = sum((d - mean) ** 2 for d in draws) / (n - 1)
        assert var == pytest.approx(lam, rel=0.05)


class TestResolveSuccesses:
    def _flow(self, swap_prob):
        return Flow(0, (0, 1, 2), (0, 1), swap_prob, 1.0, 1)

    def test_certain_swap(self):
        flow = self._flow(1.0)
        assert resolve_successes({flow: 17}, random.Random(0)) == {flow: 17}

    def test_zero_grants(self):
        flow = self._flow(0.5)
        assert resolve_successes({flow: 0}, random.Random(0)) == {flow: 0}

    def test_bernoulli_rate(self):
        flow = self._flow(0.81)
        n = 10_000
        done = resolve_successes({flow: n}, random.Random(77))[flow]
        sigma = math.sqrt(0.81 * 0.19 / n)
        assert abs(done / n - 0.81) <= 3 * sigma

    def test_never_exceeds_grants(self):
        flow = self._flow(0.3)
        for seed in range(20):
            assert resolve_successes({flow: 50}, random.Random(seed))[flow] <= 50


class TestRun:
    def test_uncontended_unit_pipe_delivers_every_slot(self):
        metrics = run(unit_pipe_scenario())
        assert metrics.per_app[0].delivered == 100
        assert metrics.per_app[0].delivered_rate == 1.0
        assert metrics.per_edge[0].utilization == 1.0

    def test_warmup_excluded_but_rate_unchanged_in_steady_state(self):
        metrics = run(unit_pipe_scenario(warmup_slots=50))
        assert metrics.measured_slots == 50
        assert metrics.per_app[0].delivered == 50
        assert metrics.per_app[0].delivered_rate == 1.0

    def test_zero_warmup_reproduces_whole_run_average(self):
        m0 = run(unit_pipe_scenario(warmup_slots=0))
        assert m0.per_app[0].delivered == m0.slots * m0.per_app[0].delivered_rate

    def test_drr_converges_to_weighted_maxmin(self):
        scenario = make_scenario(
            shared_link_graph(6),
            shared_link_apps([1.0, 2.0, 3.0]),
            policy=Policy.DRR,
            slots=10_000,
        )
        metrics = run(scenario)
        for app_id, expected in ((0, 1.0), (1, 2.0), (2, 3.0)):
            assert metrics.per_app[app_id].delivered_rate == pytest.approx(
                expected, rel=0.02
            )

    def test_identical_seed_identical_metrics(self):
        scenario = make_scenario(
            shared_link_graph(3),
            shared_link_apps([1.0, 2.0]),
            capacity_mode=CapacityMode.STOCHASTIC,
            policy=Policy.DRR,
            seed=99,
        )
        a = run(scenario, collect_trace=True)
        b = run(scenario, collect_trace=True)
        assert a == b

    def test_different_seed_differs_stochastically(self):
        graph = shared_link_graph(3, gen_prob=0.5)
        scenario = make_scenario(
            graph,
            shared_link_apps([1.0]),
            capacity_mode=CapacityMode.STOCHASTIC,
            slots=50,
        )
        a = run(scenario, collect_trace=True)
        b = run(scenario, dataclasses.replace(scenario.config, seed=6), collect_trace=True)
        assert [l.sampled for l in a.trace] != [l.sampled for l in b.trace]

    def test_capacity_stream_isolated_from_traffic_mode(self):
        graph = shared_link_graph(4, gen_prob=0.5)
        apps = shared_link_apps([1.0], arrival_rate=1.0)
        backlogged = make_scenario(
            graph, apps, capacity_mode=CapacityMode.STOCHASTIC, slots=60
        )
        poisson = make_scenario(
            graph,
            apps,
            capacity_mode=CapacityMode.STOCHASTIC,
            slots=60,
            traffic=Traffic.POISSON,
        )
        mb = run(backlogged, collect_trace=True)
        mp = run(poisson, collect_trace=True)
        assert [l.sampled for l in mb.trace] == [l.sampled for l in mp.trace]

    def test_poisson_latency_recorded(self):
        graph = shared_link_graph(1)
        apps = shared_link_apps([1.0], arrival_rate=0.5)
        scenario = make_scenario(
            graph, apps, traffic=Traffic.POISSON, policy=Policy.FCFS, slots=500
        )
        metrics = run(scenario)
        assert metrics.per_app[0].mean_latency is not None
        assert metrics.per_app[0].mean_latency >= 0.0

    def test_backlogged_latency_is_none(self):
        metrics = run(unit_pipe_scenario())
        assert metrics.per_app[0].mean_latency is None

    def test_given_assignment_used(self):
        graph = NetworkGraph(
            [Node(i, NodeKind.COMPUTATION) for i in range(3)],
            [QuantumLink(0, (0, 1), 1), QuantumLink(1, (0, 2), 1)],
        )
        apps = [Application(0, 0, 1.0, 1, frozenset({1, 2}))]
        scenario = validate_scenario(
            graph,
            apps,
            SimConfig(
                slots=10,
                seed=1,
                policy=Policy.RR,
                capacity_mode=CapacityMode.DETERMINISTIC,
                assignment=AssignmentSource.GIVEN,
            ),
            {0: frozenset({2})},
        )
        metrics = run(scenario, collect_trace=True)
        assert (0, 2) in metrics.trace[0].grants

    def test_delivered_never_exceeds_grants(self):
        graph = line_graph([1.0, 1.0], capacity=2, swap_q=0.7)
        apps = [Application(0, 0, 1.0, 1, frozenset({2}))]
        scenario = make_scenario(graph, apps, slots=2_000)
        metrics = run(scenario)
        am = metrics.per_app[0]
        assert am.delivered <= am.grants
        assert am.attempts == 2 * am.grants  # two elementary pairs per grant


class TestReplicate:
    def test_single_replication_equals_its_run(self):
        scenario = unit_pipe_scenario()
        summary = replicate(scenario, n_replications=1)
        runs = replication_runs(scenario, n_replications=1)
        assert summary.n == 1
        assert summary.stats["app_0.delivered"].mean == runs[0].per_app[0].delivered
        assert summary.stats["app_0.delivered"].stddev == 0.0

    def test_deterministic_scenario_zero_stddev(self):
        summary = replicate(unit_pipe_scenario(), n_replications=5)
        for stat in summary.stats.values():
            assert stat.stddev == 0.0

    def test_clt_sanity_against_fluid_oracle(self):
        # stochastic single pipe: effective capacity 2.0/slot, swap 1.0,
        # so the long-run delivered rate oracle is 2.0
        graph = shared_link_graph(4, gen_prob=0.5)
        scenario = make_scenario(
            graph,
            shared_link_apps([1.0]),
            capacity_mode=CapacityMode.STOCHASTIC,
            slots=400,
            seed=21,
        )
        summary = replicate(scenario, n_replications=30)
        stat = summary.stats["app_0.delivered_rate"]
        assert stat.n == 30
        assert abs(stat.mean - 2.0) <= 3 * stat.stddev / math.sqrt(30) + 1e-9

    def test_order_of_merge_is_by_index(self):
        scenario = make_scenario(
            shared_link_graph(2, gen_prob=0.5),
            shared_link_apps([1.0]),
            capacity_mode=CapacityMode.STOCHASTIC,
            slots=30,
        )
        runs = replication_runs(scenario, n_replications=4)
        seeds = [m.seed for m in runs]
        assert seeds == [replication_seed(scenario.config.seed, i) for i in range(4)]


class TestAssignmentSources:
    def test_random_source_is_seed_deterministic(self):
        graph = NetworkGraph(
            [Node(i, NodeKind.COMPUTATION) for i in range(3)],
            [QuantumLink(0, (0, 1), 1), QuantumLink(1, (0, 2), 1)],
        )
        apps = [Application(0, 0, 1.0, 1, frozenset({1, 2}))]
        scenario = make_scenario(
            graph, apps, assignment=AssignmentSource.RANDOM, slots=5, seed=13
        )
        a = run(scenario, collect_trace=True)
        b = run(scenario, collect_trace=True)
        assert a.trace[0].grants.keys() == b.trace[0].grants.keys()

    def test_exhaustive_source_honors_limit(self):
        from qnetfair import SearchSpaceTooLarge

        graph = NetworkGraph(
            [Node(i, NodeKind.COMPUTATION) for i in range(3)],
            [QuantumLink(0, (0, 1), 1), QuantumLink(1, (0, 2), 1)],
        )
        apps = [Application(0, 0, 1.0, 1, frozenset({1, 2}))]
        scenario = make_scenario(
            graph, apps, assignment=AssignmentSource.EXHAUSTIVE, exhaustive_limit=1, slots=5
        )
        with pytest.raises(SearchSpaceTooLarge):
            run(scenario)
