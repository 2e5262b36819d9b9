"""Topological privacy checkers and a brute-force adversary-inference oracle.

The checkers are sufficient conditions on the graph and role labeling under
which a coalition of honest-but-curious nodes cannot pin down a node's
initial state.  The oracle is the ground truth at desk scale: it enumerates
every assignment of the unknowns (hidden initial states and offset
parameters), re-simulates each one, and keeps those whose coalition-visible
observations match the real run exactly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, Sequence

from .event_offset import EventOffsetSchedule
from .graph import Digraph, Role, RoleMap
from .protocol import Message
from .simulator import NodePlan, Protocol, SimConfig, SimTrace, run
from .zero_sum_offset import OffsetMessage, ZeroSumSchedule, make_zero_sum_schedule


class BudgetError(RuntimeError):
    """Hypothesis space exceeds the enumeration budget; refusing to sample."""


class PrivacyCondition(Enum):
    PRIVATE_NEIGHBOR = "private-neighbor"  # an in- or out-neighbor also hides its state
    PRIORITIZED_PLAIN_IN_NEIGHBOR = "prioritized-plain-in-neighbor"
    NONCURIOUS_OUT_NEIGHBOR = "noncurious-out-neighbor"
    NONE = "none"


@dataclass(frozen=True)
class PrivacyVerdict:
    node: int
    guaranteed: bool
    condition: PrivacyCondition
    witness: int | None = None

    def describe(self) -> str:
        if not self.guaranteed:
            return f"node {self.node}: no guarantee"
        return f"node {self.node}: guaranteed via {self.condition.value} (witness {self.witness})"


def check_event_offset_privacy(g: Digraph, roles: RoleMap, target: int) -> PrivacyVerdict:
    """Sufficient condition under the event-based offset strategy: the target
    has a privacy-following neighbor (either direction), or a plain
    in-neighbor whose order-0 out-neighbor is the target (so its very first
    transmission, carrying its raw state, lands on the target)."""
    if roles.role(target) is not Role.PRIVACY:
        return PrivacyVerdict(target, False, PrivacyCondition.NONE)
    for v in g.in_neighbors(target) + g.out_neighbors(target):
        if v != target and v in roles.privacy:
            return PrivacyVerdict(target, True, PrivacyCondition.PRIVATE_NEIGHBOR, v)
    for v in g.in_neighbors(target):
        if roles.role(v) is Role.PLAIN and g.out_order[v][0] == target:
            return PrivacyVerdict(
                target, True, PrivacyCondition.PRIORITIZED_PLAIN_IN_NEIGHBOR, v
            )
    return PrivacyVerdict(target, False, PrivacyCondition.NONE)


def check_zero_sum_privacy(g: Digraph, roles: RoleMap, target: int) -> PrivacyVerdict:
    """Sufficient condition under the zero-sum offset strategy: at least one
    out-neighbor is not curious."""
    if roles.role(target) is not Role.PRIVACY:
        return PrivacyVerdict(target, False, PrivacyCondition.NONE)
    for v in g.out_neighbors(target):
        if v not in roles.curious:
            return PrivacyVerdict(
                target, True, PrivacyCondition.NONCURIOUS_OUT_NEIGHBOR, v
            )
    return PrivacyVerdict(target, False, PrivacyCondition.NONE)


@dataclass(frozen=True)
class HypothesisSpace:
    """Bounded ranges the oracle enumerates for the unknowns.

    The coalition knows the offset constraints but not the chosen values;
    tests pick small ranges so exhaustive enumeration terminates.
    """

    state_range: tuple[int, int]
    zero_sum_range: tuple[int, int] = (-2, 2)
    installment_max: int = 2
    adding_steps_slack: int = 1  # adding steps range [D+, D+ + slack]
    budget: int = 10_000_000


@dataclass(frozen=True)
class AdversaryView:
    """Everything the coalition sees: offset and mass messages on edges
    incident to coalition members, in emission order, plus the average."""

    coalition: frozenset[int]
    observations: tuple[tuple, ...]
    average: Fraction


@dataclass(frozen=True)
class InferenceResult:
    target: int
    consistent_values: frozenset[int]
    candidates_checked: int

    @property
    def privacy_preserved(self) -> bool:
        return len(self.consistent_values) >= 2


def _observation(msg: Message | OffsetMessage) -> tuple:
    if isinstance(msg, OffsetMessage):
        return ("offset", msg.sender, msg.receiver, msg.value)
    return ("mass", msg.send_step, msg.sender, msg.receiver, msg.y, msg.z)


def extract_view(trace: SimTrace, coalition: frozenset[int]) -> AdversaryView:
    if trace.messages is None:
        raise ValueError("trace was recorded without messages")
    obs: list[tuple] = []
    for off in trace.offset_messages:
        if off.sender in coalition or off.receiver in coalition:
            obs.append(_observation(off))
    for msg in trace.messages:
        if msg.sender in coalition or msg.receiver in coalition:
            obs.append(_observation(msg))
    total = sum(trace.y0)
    return AdversaryView(coalition, tuple(obs), Fraction(total, trace.n))


class _Matcher:
    """Streaming comparison of a candidate run against the observed view."""

    def __init__(self, view: AdversaryView) -> None:
        self.expected = view.observations
        self.coalition = view.coalition
        self.pos = 0
        self.failed = False

    def _feed(self, obs: tuple) -> bool:
        if self.pos >= len(self.expected) or self.expected[self.pos] != obs:
            self.failed = True
            return False
        self.pos += 1
        return True

    def offset_hook(self, msg: OffsetMessage) -> bool:
        if msg.sender in self.coalition or msg.receiver in self.coalition:
            return self._feed(_observation(msg))
        return True

    def message_hook(self, msg: Message) -> bool:
        if msg.sender in self.coalition or msg.receiver in self.coalition:
            return self._feed(_observation(msg))
        return True

    @property
    def matched(self) -> bool:
        return not self.failed and self.pos == len(self.expected)


def enumerate_event_schedules(
    d_plus: int, space: HypothesisSpace
) -> list[EventOffsetSchedule]:
    """All legal event-offset schedules in the space: adding steps within
    slack of the out-degree, installments bounded, total at least the
    out-degree (so the initial offset is at most -D+)."""
    out: list[EventOffsetSchedule] = []
    for steps in range(d_plus, d_plus + space.adding_steps_slack + 1):
        for parts in itertools.product(
            range(space.installment_max + 1), repeat=steps + 1
        ):
            if sum(parts) >= d_plus:
                out.append(EventOffsetSchedule(parts))
    return out


def enumerate_zero_sum_schedules(
    out_neighbors: Sequence[int], space: HypothesisSpace
) -> list[ZeroSumSchedule]:
    lo, hi = space.zero_sum_range
    values = range(lo, hi + 1)
    out = []
    for combo in itertools.product(values, repeat=len(out_neighbors)):
        out.append(make_zero_sum_schedule(dict(zip(sorted(out_neighbors), combo))))
    return out


def _state_assignments(
    options: Sequence[Sequence[int]], total: int
) -> Iterator[tuple[int, ...]]:
    """All picks (one per slot) summing exactly to ``total``, with pruning."""
    mins = [min(o) for o in options]
    maxs = [max(o) for o in options]
    suffix_min = [0] * (len(options) + 1)
    suffix_max = [0] * (len(options) + 1)
    for i in range(len(options) - 1, -1, -1):
        suffix_min[i] = suffix_min[i + 1] + mins[i]
        suffix_max[i] = suffix_max[i + 1] + maxs[i]

    def rec(i: int, remaining: int, acc: list[int]) -> Iterator[tuple[int, ...]]:
        if i == len(options):
            if remaining == 0:
                yield tuple(acc)
            return
        for v in options[i]:
            rest = remaining - v
            if suffix_min[i + 1] <= rest <= suffix_max[i + 1]:
                acc.append(v)
                yield from rec(i + 1, rest, acc)
                acc.pop()

    yield from rec(0, total, [])


def adversary_enumerate(
    g: Digraph,
    roles: RoleMap,
    protocol: Protocol,
    config: SimConfig,
    trace: SimTrace,
    target: int,
    space: HypothesisSpace,
    coalition: frozenset[int] | None = None,
) -> InferenceResult:
    """Exhaustively test every in-space assignment of the hidden variables
    against the coalition's observations.

    Uses from ``config`` only what the coalition legitimately knows: the
    graph, the coalition members' own plans, and the protocol choice.  The
    true initial state is always among the surviving candidates.
    """
    if coalition is None:
        coalition = roles.curious
    view = extract_view(trace, coalition)
    unknowns = sorted(set(range(g.n)) - coalition)
    if target not in unknowns:
        raise ValueError("target must be outside the coalition")

    lo, hi = space.state_range
    state_options: list[range] = [range(lo, hi + 1)] * len(unknowns)
    param_options: list[list] = []
    for j in unknowns:
        if roles.role(j) is Role.PRIVACY and protocol == "event_offset":
            param_options.append(enumerate_event_schedules(g.out_degree(j), space))
        elif roles.role(j) is Role.PRIVACY and protocol == "zero_sum":
            param_options.append(enumerate_zero_sum_schedules(g.out_neighbors(j), space))
        else:
            param_options.append([None])

    raw_size = 1
    for opts in state_options:
        raw_size *= len(opts)
    for opts in param_options:
        raw_size *= len(opts)
    if raw_size > space.budget:
        raise BudgetError(
            f"hypothesis space has {raw_size} combinations, budget is {space.budget}"
        )

    true_sum = sum(p.y0 for p in config.plans)
    hidden_sum = true_sum - sum(config.plans[j].y0 for j in coalition)

    consistent: set[int] = set()
    checked = 0
    target_pos = unknowns.index(target)
    pos = {j: i for i, j in enumerate(unknowns)}
    for states in _state_assignments(state_options, hidden_sum):
        for params in itertools.product(*param_options):
            checked += 1
            plans: list[NodePlan] = []
            for j in range(g.n):
                if j in coalition:
                    plans.append(config.plans[j])
                    continue
                i = pos[j]
                if roles.role(j) is Role.PRIVACY:
                    if protocol == "event_offset":
                        plans.append(
                            NodePlan(states[i], "event_offset", event_schedule=params[i])
                        )
                    else:
                        plans.append(
                            NodePlan(states[i], "zero_sum", zero_sum_schedule=params[i])
                        )
                else:
                    plans.append(NodePlan(states[i], "plain"))
            matcher = _Matcher(view)
            candidate = SimConfig(
                graph=g,
                plans=tuple(plans),
                audit=False,
                exact_steps=trace.executed_steps,
            )
            run(candidate, message_hook=matcher.message_hook, offset_hook=matcher.offset_hook)
            if matcher.matched:
                consistent.add(states[target_pos])
    return InferenceResult(
        target=target,
        consistent_values=frozenset(consistent),
        candidates_checked=checked,
    )
