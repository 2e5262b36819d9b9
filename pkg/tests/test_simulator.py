import random
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qconsensus.event_offset import EventOffsetSchedule
from qconsensus.experiments import build_plans
from qconsensus.graph import Digraph, generate_random_digraph
from qconsensus.protocol import MassPair, StateVars
from qconsensus.simulator import (
    AuditError,
    ConfigError,
    NodePlan,
    SimConfig,
    Simulator,
    detect_convergence,
    run,
    theoretical_bound,
)
from qconsensus.zero_sum_offset import make_zero_sum_schedule

from test_protocol import hand_two_node_trace

TWO_CYCLE = Digraph(n=2, edges=frozenset({(1, 0), (0, 1)}), out_order=((1,), (0,)))


def plain_config(g, y0, **kw):
    return SimConfig(graph=g, plans=tuple(NodePlan(y) for y in y0), **kw)


def mixed_config(case, seed, n=6, p=0.5, **kw):
    g = generate_random_digraph(n, p, seed=seed)
    rng = random.Random(f"{seed}/offsets")
    y0 = [rng.randint(0, 12) for _ in range(n)]
    plans = build_plans(g, y0, case, rng, adding_steps_range=(3, 6),
                        offset_total_range=(6, 12), zero_sum_range=(-5, 5))
    return SimConfig(graph=g, plans=plans, **kw)


class TestTwoNodeOracle:
    def test_frozen_values(self):
        trace = run(plain_config(TWO_CYCLE, (4, 6)))
        assert trace.converged
        assert trace.steps_to_consensus == 3
        assert trace.final_states == ((10, 2), (10, 2))
        assert trace.final_average == Fraction(5)
        assert trace.theoretical_bound == 8

    @given(st.integers(0, 20), st.integers(0, 20))
    @settings(max_examples=30, deadline=None)
    def test_matches_independent_hand_simulation(self, a0, b0):
        trace = run(plain_config(TWO_CYCLE, (a0, b0)))
        steps, history = hand_two_node_trace(a0, b0)
        assert trace.converged
        assert trace.steps_to_consensus == steps
        assert trace.final_states == history[-1][1]


class TestConvergence:
    @pytest.mark.parametrize("case", ["plain", "event_offset", "zero_sum"])
    @pytest.mark.parametrize("seed", range(5))
    def test_exact_average_within_bound(self, case, seed):
        cfg = mixed_config(case, f"conv-{seed}")
        trace = run(cfg)
        total = sum(p.y0 for p in cfg.plans)
        assert trace.converged
        assert trace.final_average == Fraction(total, cfg.graph.n)
        assert trace.steps_to_consensus <= trace.theoretical_bound

    def test_mixed_population_converges(self):
        g = generate_random_digraph(5, 0.6, seed="mix")
        rng = random.Random("mix/off")
        plans = (
            NodePlan(4, "plain"),
            NodePlan(9, "event_offset",
                     event_schedule=EventOffsetSchedule((1,) * (g.out_degree(1) + 2))),
            NodePlan(2, "zero_sum",
                     zero_sum_schedule=make_zero_sum_schedule(
                         {v: rng.randint(-3, 3) for v in g.out_neighbors(2)})),
            NodePlan(7, "plain"),
            NodePlan(3, "plain"),
        )
        trace = run(SimConfig(graph=g, plans=plans))
        assert trace.converged
        assert trace.final_average == Fraction(25, 5)

    def test_identical_states_converge_immediately(self):
        trace = run(plain_config(TWO_CYCLE, (5, 5)))
        assert trace.converged
        assert trace.steps_to_consensus == 0

    def test_verdict_alpha(self):
        trace = run(plain_config(TWO_CYCLE, (4, 6)))
        verdict = trace.verdict()
        assert verdict.converged
        assert verdict.alpha_per_node == (Fraction(1), Fraction(1))
        assert verdict.all_alpha_integral


class TestDistortion:
    def test_zero_sum_preserves_total(self):
        cfg = mixed_config("zero_sum", "dist")
        trace = run(cfg)
        assert sum(trace.distorted_y0) == sum(p.y0 for p in cfg.plans)
        assert trace.distorted_y0 != trace.y0

    def test_event_offset_initial_deficit_and_final_zero(self):
        cfg = mixed_config("event_offset", "dist2")
        trace = run(cfg)
        deficit = sum(p.event_schedule.u_init for p in cfg.plans)
        assert sum(trace.distorted_y0) == sum(trace.y0) + deficit
        assert trace.injected == (0,) * cfg.graph.n

    def test_offset_messages_recorded(self):
        cfg = mixed_config("zero_sum", "dist3")
        trace = run(cfg)
        by_sender = {}
        for msg in trace.offset_messages:
            by_sender.setdefault(msg.sender, []).append((msg.receiver, msg.value))
        for j, plan in enumerate(cfg.plans):
            assert tuple(sorted(by_sender.get(j, []))) == plan.zero_sum_schedule.per_out


class TestAudits:
    def test_tampered_numerator_is_caught(self):
        sim = Simulator(plain_config(TWO_CYCLE, (4, 6)))
        sim._fire_initial()
        sim.pending[0] = replace(sim.pending[0], y=sim.pending[0].y + 1)
        with pytest.raises(AuditError, match="numerator mass total"):
            sim._step(1)

    def test_tampered_counter_is_caught(self):
        sim = Simulator(plain_config(TWO_CYCLE, (4, 6)))
        sim._fire_initial()
        sim.pending[0] = replace(sim.pending[0], z=2)
        with pytest.raises(AuditError, match="counter mass total"):
            sim._step(1)

    def test_stuck_leading_mass_is_caught(self):
        sim = Simulator(plain_config(TWO_CYCLE, (4, 6)))
        sim.nodes[0].mass = MassPair(4, 1)
        sim.nodes[1].mass = MassPair(6, 1)
        report = sim._audit(received=set())
        assert report is not None and "leading mass" in report

    def test_audit_passes_on_honest_runs(self):
        for seed in range(3):
            trace = run(mixed_config("event_offset", f"audit-{seed}", audit=True))
            assert trace.converged  # no AuditError raised along the way

    def test_audit_can_be_disabled(self):
        sim = Simulator(plain_config(TWO_CYCLE, (4, 6), audit=False))
        sim._fire_initial()
        sim.pending[0] = replace(sim.pending[0], y=99)
        sim._step(1)  # silently accepts the corruption


class TestDeterminism:
    def test_identical_configs_identical_traces(self):
        cfg = mixed_config("zero_sum", "det", record_states="full",
                           record_messages=True)
        assert run(cfg) == run(cfg)


class TestRunControls:
    def test_exact_steps_horizon(self):
        trace = run(plain_config(TWO_CYCLE, (4, 6), exact_steps=25))
        assert trace.executed_steps == 25
        assert trace.converged and trace.steps_to_consensus == 3

    def test_window_confirmation_stops_early(self):
        trace = run(plain_config(TWO_CYCLE, (4, 6), window=5))
        assert trace.executed_steps == trace.steps_to_consensus + 5 - 1

    def test_message_hook_abort(self):
        trace = run(plain_config(TWO_CYCLE, (4, 6)), message_hook=lambda m: False)
        assert trace.aborted_by_hook
        assert not trace.converged

    def test_offset_hook_abort_skips_the_run(self):
        cfg = mixed_config("zero_sum", "abort")
        trace = run(cfg, offset_hook=lambda m: False)
        assert trace.aborted_by_hook
        assert trace.executed_steps == 0
        assert trace.firings == (0,) * cfg.graph.n

    def test_recording_levels(self):
        cfg = plain_config(TWO_CYCLE, (4, 6), record_states="full",
                           record_messages=True)
        trace = run(cfg)
        assert trace.records is not None
        assert len(trace.records) == 2 * (trace.executed_steps + 1)
        assert trace.mean_q is not None
        assert trace.mean_q[-1] == pytest.approx(5.0)
        assert trace.messages and trace.messages[0].send_step == 0
        lean = run(plain_config(TWO_CYCLE, (4, 6)))
        assert lean.records is None and lean.mean_q is None and lean.messages is None


class TestValidation:
    def test_plan_count_mismatch(self):
        with pytest.raises(ConfigError, match="plans"):
            run(SimConfig(graph=TWO_CYCLE, plans=(NodePlan(1),)))

    def test_weakly_connected_graph_rejected(self):
        g = Digraph(n=2, edges=frozenset({(1, 0)}), out_order=((1,), ()))
        with pytest.raises(ConfigError, match="strongly connected"):
            run(SimConfig(graph=g, plans=(NodePlan(1), NodePlan(2))))

    def test_missing_event_schedule(self):
        with pytest.raises(ConfigError, match="without a schedule"):
            run(SimConfig(graph=TWO_CYCLE,
                          plans=(NodePlan(1, "event_offset"), NodePlan(2))))

    def test_zero_sum_keys_must_match_out_neighbors(self):
        bad = make_zero_sum_schedule({0: 1})  # node 0's out-neighbor is 1
        with pytest.raises(ConfigError, match="zero-sum offsets keyed"):
            run(SimConfig(graph=TWO_CYCLE,
                          plans=(NodePlan(1, "zero_sum", zero_sum_schedule=bad),
                                 NodePlan(2))))


class TestBound:
    def test_formula(self):
        assert theoretical_bound(5, 10, ["plain"] * 5, l_max=0) == 500
        assert theoretical_bound(5, 10, ["zero_sum"] * 5, l_max=0) == 500
        assert theoretical_bound(5, 10, ["plain", "event_offset"], l_max=7) == 100 * 13

    def test_trace_reports_matching_bound(self):
        cfg = mixed_config("event_offset", "bound")
        trace = run(cfg)
        l_max = max(p.event_schedule.adding_steps for p in cfg.plans)
        m = cfg.graph.m
        assert trace.theoretical_bound == m * m * (cfg.graph.n + l_max + 1)


def test_detect_convergence_alphas():
    states = [StateVars(10, 2), StateVars(5, 1)]
    verdict = detect_convergence(states, exact_sum=10, n=2)
    assert verdict.converged
    assert verdict.alpha_per_node == (Fraction(1), Fraction(2))
    assert verdict.all_alpha_integral
    odd = detect_convergence([StateVars(10, 2), StateVars(15, 3)], 10, 2)
    assert odd.converged
    assert odd.alpha_per_node == (Fraction(1), Fraction(2, 3))
    assert not odd.all_alpha_integral
