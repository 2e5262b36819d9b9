"""Deterministic synchronous scheduler for mixed-protocol node populations.

A run proceeds in lockstep rounds: an optional offset pre-round, an
unconditional initialization transmission at step 0, then repeated
deliver -> absorb -> audit -> fire rounds.  A message sent at step k is
delivered at the start of step k+1.  Per-step conservation audits and the
leading-mass firing property are checked when auditing is enabled; any
violation aborts the run with a diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Literal, Sequence

from .event_offset import EventOffsetNode, EventOffsetSchedule, fire_event_offset, init_event_offset
from .graph import Digraph, is_strongly_connected
from .protocol import (
    Message,
    NodeCore,
    ProtocolError,
    StateVars,
    absorb,
    check_event,
    fire_and_transmit,
    init_plain,
    state_matches_average,
)
from .zero_sum_offset import OffsetMessage, ZeroSumSchedule, init_zero_sum

Protocol = Literal["plain", "event_offset", "zero_sum"]
PROTOCOLS = ("plain", "event_offset", "zero_sum")

# Called for every transmitted message; return False to abort the run early.
MessageHook = Callable[[Message], bool]
OffsetHook = Callable[[OffsetMessage], bool]


class ConfigError(ValueError):
    pass


class AuditError(RuntimeError):
    """A per-step conservation or leading-mass invariant was violated."""

    def __init__(self, step: int, report: str) -> None:
        super().__init__(f"audit failed at step {step}: {report}")
        self.step = step
        self.report = report


@dataclass(frozen=True)
class NodePlan:
    """Per-node run configuration: true initial state, protocol, offsets."""

    y0: int
    protocol: Protocol = "plain"
    event_schedule: EventOffsetSchedule | None = None
    zero_sum_schedule: ZeroSumSchedule | None = None


@dataclass(frozen=True)
class SimConfig:
    graph: Digraph
    plans: tuple[NodePlan, ...]
    max_steps: int | None = None  # default: 2 * bound + window
    window: int | None = None  # consecutive matching steps; default m^2
    audit: bool = True
    record_states: Literal["none", "mean", "full"] = "none"
    record_messages: bool = False
    exact_steps: int | None = None  # run exactly this many rounds, no early stop
    require_strong_connectivity: bool = True


@dataclass(frozen=True)
class ConvergenceVerdict:
    converged: bool
    steps: int | None
    alpha_per_node: tuple[Fraction, ...]

    @property
    def all_alpha_integral(self) -> bool:
        return all(a.denominator == 1 for a in self.alpha_per_node)


@dataclass(frozen=True)
class StepRecord:
    """Post-fire snapshot of one node at one step."""

    step: int
    node: int
    y: int
    z: int
    ys: int
    zs: int
    fired: bool
    injected: int


@dataclass
class SimTrace:
    n: int
    m: int
    protocols: tuple[Protocol, ...]
    y0: tuple[int, ...]
    distorted_y0: tuple[int, ...]
    executed_steps: int
    converged: bool
    steps_to_consensus: int | None
    theoretical_bound: int
    window: int
    final_states: tuple[tuple[int, int], ...]  # (y_s, z_s) per node
    firings: tuple[int, ...]
    injected: tuple[int, ...]  # net event-based offset per node at the end
    offset_messages: tuple[OffsetMessage, ...]
    aborted_by_hook: bool = False
    messages: list[Message] | None = None
    records: list[StepRecord] | None = None
    mean_q: list[float] | None = None

    @property
    def final_average(self) -> Fraction | None:
        if not self.converged:
            return None
        y, z = self.final_states[0]
        return Fraction(y, z)

    def verdict(self) -> ConvergenceVerdict:
        alphas = tuple(Fraction(self.n, z) for _, z in self.final_states)
        return ConvergenceVerdict(self.converged, self.steps_to_consensus, alphas)


def theoretical_bound(n: int, m: int, protocols: Sequence[Protocol], l_max: int) -> int:
    """Worst-case steps to consensus: m^2 * n, plus m^2 * (L_max + 1) when
    event-based offsets are in play."""
    extra = (l_max + 1) if any(p == "event_offset" for p in protocols) else 0
    return m * m * (n + extra)


def _validate(config: SimConfig) -> None:
    g = config.graph
    if len(config.plans) != g.n:
        raise ConfigError(f"{len(config.plans)} plans for {g.n} nodes")
    if config.require_strong_connectivity and not is_strongly_connected(g):
        raise ConfigError("graph is not strongly connected")
    for j, plan in enumerate(config.plans):
        if plan.protocol not in PROTOCOLS:
            raise ConfigError(f"node {j}: unknown protocol {plan.protocol!r}")
        if plan.protocol == "event_offset":
            if plan.event_schedule is None:
                raise ConfigError(f"node {j}: event_offset without a schedule")
            plan.event_schedule.validate_for(g.out_degree(j))
        if plan.protocol == "zero_sum":
            if plan.zero_sum_schedule is None:
                raise ConfigError(f"node {j}: zero_sum without a schedule")
            keys = tuple(k for k, _ in plan.zero_sum_schedule.per_out)
            if keys != g.out_neighbors(j):
                raise ConfigError(
                    f"node {j}: zero-sum offsets keyed by {keys}, "
                    f"out-neighbors are {g.out_neighbors(j)}"
                )


class Simulator:
    """One deterministic run over immutable inputs."""

    def __init__(
        self,
        config: SimConfig,
        message_hook: MessageHook | None = None,
        offset_hook: OffsetHook | None = None,
    ) -> None:
        _validate(config)
        self.config = config
        self.g = config.graph
        self.n = self.g.n
        self.hook = message_hook
        self.offset_hook = offset_hook
        self.true_sum = sum(p.y0 for p in config.plans)
        self.offset_messages: list[OffsetMessage] = []
        self.aborted = False
        self._init_nodes()
        self.expected_y = sum(self.distorted_y0)  # grows as installments land
        self.pending: list[Message] = []
        self.messages: list[Message] | None = [] if config.record_messages else None
        self.records: list[StepRecord] | None = (
            [] if config.record_states == "full" else None
        )
        self.mean_q: list[float] | None = (
            [] if config.record_states in ("mean", "full") else None
        )

    # -- initialization ------------------------------------------------

    def _init_nodes(self) -> None:
        g, plans = self.g, self.config.plans
        # Pre-round: zero-sum offset exchange behind a barrier.
        inbound: list[list[OffsetMessage]] = [[] for _ in range(self.n)]
        for j, plan in enumerate(plans):
            if plan.protocol != "zero_sum":
                continue
            for dest, value in plan.zero_sum_schedule.per_out:
                msg = OffsetMessage(j, dest, value)
                inbound[dest].append(msg)
                self.offset_messages.append(msg)
                if self.offset_hook is not None and not self.offset_hook(msg):
                    self.aborted = True
        self.nodes: list[NodeCore] = []
        self.event_nodes: dict[int, EventOffsetNode] = {}
        for j, plan in enumerate(plans):
            if plan.protocol == "event_offset":
                wrapper = init_event_offset(plan.y0, plan.event_schedule)
                self.event_nodes[j] = wrapper
                node = wrapper.core
            elif plan.protocol == "zero_sum":
                node = init_zero_sum(
                    plan.y0, plan.zero_sum_schedule, inbound[j], g.in_neighbors(j)
                )
            else:
                node = init_plain(plan.y0)
            if plan.protocol != "zero_sum" and inbound[j]:
                # Nodes not running the exchange themselves still accept
                # offsets sent to them; dropping them would break the
                # network-sum invariant in mixed populations.
                extra = sum(m.value for m in inbound[j])
                node.mass.y += extra
                node.state.y += extra
            self.nodes.append(node)
        self.distorted_y0 = tuple(node.mass.y for node in self.nodes)

    def _fire_initial(self) -> None:
        # Step 0: every node transmits unconditionally, before any delivery.
        for j, node in enumerate(self.nodes):
            msg = fire_and_transmit(node, self.g, j, 0)
            self._emit(msg)
        self._record_step(0, fired=set(range(self.n)), injected={})

    # -- stepping ------------------------------------------------------

    def _emit(self, msg: Message) -> None:
        self.pending.append(msg)
        if self.messages is not None:
            self.messages.append(msg)
        if self.hook is not None and not self.hook(msg):
            self.aborted = True

    def _step(self, k: int) -> None:
        inbox: list[list[Message]] = [[] for _ in range(self.n)]
        for msg in self.pending:
            inbox[msg.receiver].append(msg)
        self.pending = []
        received = [j for j in range(self.n) if inbox[j]]
        for j in received:
            absorb(self.nodes[j], inbox[j])
        if self.config.audit:
            report = self._audit(set(received))
            if report is not None:
                raise AuditError(k, report)
        fired: set[int] = set()
        injected: dict[int, int] = {}
        for j in received:
            node = self.nodes[j]
            if not check_event(node):
                continue
            wrapper = self.event_nodes.get(j)
            if wrapper is not None:
                injected[j] = wrapper.schedule.installment(wrapper.l)
                self.expected_y += injected[j]
                msg = fire_event_offset(wrapper, self.g, j, k)
            else:
                msg = fire_and_transmit(node, self.g, j, k)
            fired.add(j)
            self._emit(msg)
        self._record_step(k, fired, injected)

    def _audit(self, received: set[int]) -> str | None:
        """Post-absorb checks; in-flight set is empty at this point."""
        z_total = sum(node.mass.z for node in self.nodes)
        if z_total != self.n:
            return f"counter mass total {z_total} != n = {self.n}"
        y_total = sum(node.mass.y for node in self.nodes)
        if y_total != self.expected_y:
            return (
                f"numerator mass total {y_total} != expected {self.expected_y} "
                "(initial sum plus injected offsets)"
            )
        best = max(
            ((node.mass.z, node.mass.y) for node in self.nodes if node.mass.z >= 1),
            default=None,
        )
        if best is None:
            return "no nonzero mass anywhere in the network"
        for j, node in enumerate(self.nodes):
            if node.mass.z >= 1 and (node.mass.z, node.mass.y) == best:
                if j not in received:
                    return f"leading mass stuck at node {j} which received nothing"
                if not check_event(node):
                    return f"leading mass at node {j} fails the event conditions"
        return None

    def _record_step(self, k: int, fired: set[int], injected: dict[int, int]) -> None:
        if self.records is not None:
            for j, node in enumerate(self.nodes):
                self.records.append(
                    StepRecord(
                        step=k,
                        node=j,
                        y=node.mass.y,
                        z=node.mass.z,
                        ys=node.state.y,
                        zs=node.state.z,
                        fired=j in fired,
                        injected=injected.get(j, 0),
                    )
                )
        if self.mean_q is not None:
            self.mean_q.append(
                sum(node.state.y / node.state.z for node in self.nodes) / self.n
            )

    # -- driving -------------------------------------------------------

    def run(self) -> SimTrace:
        cfg = self.config
        g = self.g
        l_max = max(
            (p.event_schedule.adding_steps for p in cfg.plans if p.protocol == "event_offset"),
            default=0,
        )
        bound = theoretical_bound(self.n, g.m, [p.protocol for p in cfg.plans], l_max)
        window = cfg.window if cfg.window is not None else g.m * g.m
        max_steps = cfg.max_steps if cfg.max_steps is not None else 2 * bound + window
        if cfg.exact_steps is not None:
            max_steps = cfg.exact_steps

        if not self.aborted:
            self._fire_initial()
        k0: int | None = None
        consec = 0
        if self._all_match():
            k0, consec = 0, 1
        executed = 0
        for k in range(1, max_steps + 1):
            if self.aborted:
                break
            self._step(k)
            executed = k
            if self._all_match():
                if k0 is None:
                    k0 = k
                consec += 1
                if cfg.exact_steps is None and consec >= window:
                    break
            else:
                k0, consec = None, 0
        converged = k0 is not None and (consec >= window or cfg.exact_steps is not None)
        # Under an exact-steps horizon, convergence means "matching at the end";
        # the stability window is not enforced.
        if cfg.exact_steps is not None:
            converged = k0 is not None
        return SimTrace(
            n=self.n,
            m=g.m,
            protocols=tuple(p.protocol for p in cfg.plans),
            y0=tuple(p.y0 for p in cfg.plans),
            distorted_y0=self.distorted_y0,
            executed_steps=executed,
            converged=converged,
            steps_to_consensus=k0 if converged else None,
            theoretical_bound=bound,
            window=window,
            final_states=tuple((n.state.y, n.state.z) for n in self.nodes),
            firings=tuple(n.c for n in self.nodes),
            injected=tuple(
                _net_injected(self.event_nodes.get(j)) for j in range(self.n)
            ),
            offset_messages=tuple(self.offset_messages),
            aborted_by_hook=self.aborted,
            messages=self.messages,
            records=self.records,
            mean_q=self.mean_q,
        )

    def _all_match(self) -> bool:
        s, n = self.true_sum, self.n
        return all(node.state.y * n == s * node.state.z for node in self.nodes)


def _net_injected(wrapper: EventOffsetNode | None) -> int:
    if wrapper is None:
        return 0
    from .event_offset import injected_so_far

    return injected_so_far(wrapper)


def run(
    config: SimConfig,
    message_hook: MessageHook | None = None,
    offset_hook: OffsetHook | None = None,
) -> SimTrace:
    """Execute one deterministic run and return its trace."""
    return Simulator(config, message_hook, offset_hook).run()


def detect_convergence(
    states: Sequence[StateVars], exact_sum: int, n: int
) -> ConvergenceVerdict:
    """Instantaneous convergence verdict for a set of node states."""
    ok = all(state_matches_average(s, exact_sum, n) for s in states)
    alphas = tuple(Fraction(n, s.z) for s in states)
    return ConvergenceVerdict(ok, None, alphas)
