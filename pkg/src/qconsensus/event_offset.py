"""Event-based offset strategy: a negative initial offset repaid in
nonnegative installments at successive event firings.

A node adds a negative offset u_init to its initial state and then, each
time its event condition fires, adds the next installment of the repayment
schedule to the outgoing mass.  After the (L+1)-th firing the cumulative
injected offset is exactly zero, so the network average is undistorted.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .graph import Digraph
from .protocol import Message, NodeCore, ProtocolError, StateVars, MassPair, fire_and_transmit


class ScheduleError(ValueError):
    """Offset schedule violates its constraints or is infeasible."""


@dataclass(frozen=True)
class EventOffsetSchedule:
    """Repayment plan: ``installments[l]`` is added at the l-th firing.

    The initial offset is the negated installment total, so the net
    injection over L+1 firings is zero by construction.
    """

    installments: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.installments:
            raise ScheduleError("schedule needs at least one installment")
        if any(u < 0 for u in self.installments):
            raise ScheduleError("installments must be nonnegative")

    @property
    def adding_steps(self) -> int:
        """L: last firing index that carries a (possibly zero) installment."""
        return len(self.installments) - 1

    @property
    def u_init(self) -> int:
        return -sum(self.installments)

    def installment(self, l: int) -> int:
        """Installment for the l-th firing; zero beyond the schedule."""
        return self.installments[l] if l <= self.adding_steps else 0

    def validate_for(self, d_plus: int) -> None:
        if self.adding_steps < d_plus:
            raise ScheduleError(
                f"adding steps {self.adding_steps} below out-degree {d_plus}"
            )


@dataclass(slots=True)
class EventOffsetNode:
    core: NodeCore
    schedule: EventOffsetSchedule
    l: int = 0  # event firings so far; keeps counting past the schedule


def sample_event_schedule(
    d_plus: int,
    rng: random.Random,
    adding_steps_range: tuple[int, int] = (20, 40),
    total_range: tuple[int, int] = (50, 100),
) -> EventOffsetSchedule:
    """Draw a schedule with L uniform in ``adding_steps_range`` (clamped to
    >= out-degree) and a repayment total uniform in ``total_range``, split
    uniformly at random into L+1 nonnegative parts."""
    lo, hi = adding_steps_range
    if hi < d_plus:
        raise ScheduleError(
            f"adding-steps range {adding_steps_range} cannot reach out-degree {d_plus}"
        )
    lo = max(lo, d_plus)
    steps = rng.randint(lo, hi)
    t_lo, t_hi = total_range
    if t_hi < d_plus:
        raise ScheduleError(
            f"offset total range {total_range} cannot reach out-degree {d_plus}"
        )
    total = rng.randint(max(t_lo, d_plus), t_hi)
    return EventOffsetSchedule(installments=_random_composition(total, steps + 1, rng))


def _random_composition(total: int, parts: int, rng: random.Random) -> tuple[int, ...]:
    """Uniformly random composition of ``total`` into ``parts`` nonnegative ints."""
    if parts == 1:
        return (total,)
    bars = sorted(rng.sample(range(total + parts - 1), parts - 1))
    out = [bars[0]]
    for a, b in zip(bars, bars[1:]):
        out.append(b - a - 1)
    out.append(total + parts - 2 - bars[-1])
    return tuple(out)


def init_event_offset(y0: int, schedule: EventOffsetSchedule) -> EventOffsetNode:
    """Node state with the negative initial offset already folded in."""
    distorted = y0 + schedule.u_init
    core = NodeCore(mass=MassPair(distorted, 1), state=StateVars(distorted, 1))
    return EventOffsetNode(core=core, schedule=schedule)


def fire_event_offset(
    node: EventOffsetNode, g: Digraph, node_id: int, step: int
) -> Message:
    """Add the current installment to the mass, then fire as in the
    baseline protocol.  The installment enters both the transmitted mass
    and the accepted state."""
    node.core.mass.y += node.schedule.installment(node.l)
    node.l += 1
    return fire_and_transmit(node.core, g, node_id, step)


def injected_so_far(node: EventOffsetNode) -> int:
    """Net offset this node has put into the network, initial offset included."""
    sched = node.schedule
    paid = sum(sched.installments[: min(node.l, sched.adding_steps + 1)])
    return sched.u_init + paid
