import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qconsensus.event_offset import (
    EventOffsetSchedule,
    ScheduleError,
    fire_event_offset,
    init_event_offset,
    injected_so_far,
    sample_event_schedule,
)
from qconsensus.graph import Digraph
from qconsensus.protocol import Message, absorb

TWO_CYCLE = Digraph(n=2, edges=frozenset({(1, 0), (0, 1)}), out_order=((1,), (0,)))

# Worked repayment plan: seven installments summing to 18.
WORKED_INSTALLMENTS = (1, 3, 2, 4, 1, 2, 5)


class TestSchedule:
    def test_worked_example_offset(self):
        sched = EventOffsetSchedule(WORKED_INSTALLMENTS)
        assert sched.u_init == -18
        assert sched.adding_steps == 6

    def test_installment_lookup_and_tail(self):
        sched = EventOffsetSchedule(WORKED_INSTALLMENTS)
        assert [sched.installment(l) for l in range(9)] == [1, 3, 2, 4, 1, 2, 5, 0, 0]

    def test_rejects_negative_installment(self):
        with pytest.raises(ScheduleError, match="nonnegative"):
            EventOffsetSchedule((1, -1))

    def test_rejects_empty(self):
        with pytest.raises(ScheduleError):
            EventOffsetSchedule(())

    def test_validate_for_out_degree(self):
        EventOffsetSchedule((0, 0, 1)).validate_for(2)
        with pytest.raises(ScheduleError, match="out-degree"):
            EventOffsetSchedule((0, 0, 1)).validate_for(3)


class TestSampling:
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    @settings(max_examples=50, deadline=None)
    def test_sampled_schedules_satisfy_constraints(self, seed, d_plus):
        rng = random.Random(seed)
        sched = sample_event_schedule(d_plus, rng)
        assert 20 <= sched.adding_steps <= 40
        assert -100 <= sched.u_init <= -50
        assert all(u >= 0 for u in sched.installments)
        sched.validate_for(d_plus)

    def test_deterministic_per_seed(self):
        a = sample_event_schedule(3, random.Random("x"))
        b = sample_event_schedule(3, random.Random("x"))
        assert a == b

    def test_infeasible_ranges_rejected(self):
        with pytest.raises(ScheduleError):
            sample_event_schedule(5, random.Random(0), adding_steps_range=(1, 3))
        with pytest.raises(ScheduleError):
            sample_event_schedule(5, random.Random(0), total_range=(0, 3))

    def test_composition_distribution_covers_support(self):
        # Every composition of 3 into 2 parts should appear under enough draws.
        rng = random.Random(9)
        seen = set()
        for _ in range(400):
            sched = sample_event_schedule(
                1, rng, adding_steps_range=(1, 1), total_range=(3, 3)
            )
            seen.add(sched.installments)
        assert seen == {(0, 3), (1, 2), (2, 1), (3, 0)}


class TestNodeMechanics:
    def test_init_applies_negative_offset(self):
        node = init_event_offset(6, EventOffsetSchedule(WORKED_INSTALLMENTS))
        assert (node.core.mass.y, node.core.mass.z) == (-12, 1)
        assert (node.core.state.y, node.core.state.z) == (-12, 1)
        assert node.l == 0

    @staticmethod
    def echo_state(node, step):
        """Feed the node's own state back, keeping the tie condition firable."""
        absorb(node.core, [Message(1, 0, node.core.state.y, 1, step)])

    def test_firing_adds_installments_in_order(self):
        sched = EventOffsetSchedule((2, 5))
        node = init_event_offset(10, sched)  # distorted to 3
        msg0 = fire_event_offset(node, TWO_CYCLE, 0, step=0)
        assert (msg0.y, msg0.z) == (3 + 2, 1)
        self.echo_state(node, 0)
        msg1 = fire_event_offset(node, TWO_CYCLE, 0, step=1)
        assert (msg1.y, msg1.z) == (5 + 5, 1)
        assert injected_so_far(node) == 0

    def test_injection_settles_at_zero_and_stays(self):
        sched = EventOffsetSchedule((1, 0, 4))
        node = init_event_offset(0, sched)
        assert injected_so_far(node) == -5
        running = []
        for k in range(5):
            fire_event_offset(node, TWO_CYCLE, 0, step=k)
            running.append(injected_so_far(node))
            self.echo_state(node, k)
        assert running == [-4, -4, 0, 0, 0]

    @given(
        st.lists(st.integers(0, 7), min_size=1, max_size=8).map(tuple),
        st.integers(-10, 10),
    )
    @settings(max_examples=60, deadline=None)
    def test_net_injection_is_zero_after_full_repayment(self, installments, y0):
        node = init_event_offset(y0, EventOffsetSchedule(installments))
        for k in range(len(installments) + 2):
            fire_event_offset(node, TWO_CYCLE, 0, step=k)
            absorb(node.core, [Message(1, 0, node.core.state.y, 1, k)])
        assert injected_so_far(node) == 0
