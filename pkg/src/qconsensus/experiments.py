"""Experiment harness: random-digraph sweeps, bound-compliance reports,
and the smart-grid total-demand scenario.

Every experiment is fully determined by its spec (seeds included); trial
seeds are derived from the spec seed and the trial index.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

from .event_offset import sample_event_schedule
from .graph import Digraph, GraphError, assign_out_orders, generate_random_digraph
from .simulator import NodePlan, Protocol, SimConfig, SimTrace, run
from .zero_sum_offset import sample_zero_sum_schedule

Seed = int | str


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: ``trials`` runs over freshly sampled digraphs with a fixed
    protocol case and per-trial resampled offsets."""

    n: int
    p: float
    seed: Seed
    case: Protocol = "plain"
    trials: int = 1
    y0: tuple[int, ...] | None = None  # explicit initial states
    y0_range: tuple[int, int] = (3, 19)
    y0_sum: int | None = None  # condition sampled states on this exact sum
    adding_steps_range: tuple[int, int] = (20, 40)
    offset_total_range: tuple[int, int] = (50, 100)
    zero_sum_range: tuple[int, int] = (-20, 20)
    window: int | None = None
    record_states: Literal["none", "mean", "full"] = "none"

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ExperimentError("trials must be >= 1")


@dataclass(frozen=True)
class TrialResult:
    trial: int
    m: int
    converged: bool
    steps: int | None
    bound: int
    final_value: Fraction | None
    distorted_min: int
    distorted_max: int
    distorted_sum: int


@dataclass
class SweepReport:
    spec: ExperimentSpec
    y0: tuple[int, ...]
    exact_average: Fraction
    trials: list[TrialResult]
    violations: list[str]
    mean_q: list[float] | None = None  # per-step mean estimate across trials

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def max_steps(self) -> int:
        return max(t.steps for t in self.trials if t.steps is not None)


def sample_initial_states(
    n: int,
    rng: random.Random,
    value_range: tuple[int, int],
    total: int | None = None,
    max_tries: int = 1_000_000,
) -> tuple[int, ...]:
    """Uniform integer states in ``value_range``; when ``total`` is given,
    rejection-sample until the sum matches exactly."""
    lo, hi = value_range
    if total is not None and not (n * lo <= total <= n * hi):
        raise ExperimentError(f"sum {total} unreachable with {n} states in [{lo}, {hi}]")
    for _ in range(max_tries):
        states = tuple(rng.randint(lo, hi) for _ in range(n))
        if total is None or sum(states) == total:
            return states
    raise ExperimentError(f"could not hit sum {total} in {max_tries} draws")


def build_plans(
    graph: Digraph,
    y0: Sequence[int],
    case: Protocol,
    rng: random.Random,
    adding_steps_range: tuple[int, int] = (20, 40),
    offset_total_range: tuple[int, int] = (50, 100),
    zero_sum_range: tuple[int, int] = (-20, 20),
) -> tuple[NodePlan, ...]:
    """Per-node plans with freshly sampled offsets for the given case."""
    plans = []
    for j, y in enumerate(y0):
        if case == "event_offset":
            sched = sample_event_schedule(
                graph.out_degree(j), rng, adding_steps_range, offset_total_range
            )
            plans.append(NodePlan(y, "event_offset", event_schedule=sched))
        elif case == "zero_sum":
            sched = sample_zero_sum_schedule(graph.out_neighbors(j), rng, zero_sum_range)
            plans.append(NodePlan(y, "zero_sum", zero_sum_schedule=sched))
        else:
            plans.append(NodePlan(y, "plain"))
    return tuple(plans)


def run_trial(spec: ExperimentSpec, trial: int, y0: Sequence[int]) -> SimTrace:
    graph = generate_random_digraph(spec.n, spec.p, seed=f"{spec.seed}/g{trial}")
    rng = random.Random(f"{spec.seed}/offsets{trial}")
    plans = build_plans(
        graph,
        y0,
        spec.case,
        rng,
        spec.adding_steps_range,
        spec.offset_total_range,
        spec.zero_sum_range,
    )
    config = SimConfig(
        graph=graph,
        plans=plans,
        window=spec.window,
        record_states=spec.record_states,
    )
    return run(config)


def experiment_states(spec: ExperimentSpec) -> tuple[int, ...]:
    if spec.y0 is not None:
        if len(spec.y0) != spec.n:
            raise ExperimentError(f"{len(spec.y0)} states for {spec.n} nodes")
        return spec.y0
    rng = random.Random(f"{spec.seed}/states")
    return sample_initial_states(spec.n, rng, spec.y0_range, spec.y0_sum)


def run_experiment(spec: ExperimentSpec) -> SweepReport:
    """Execute all trials; any non-convergence, bound violation, or inexact
    final value is listed in the report's violations."""
    y0 = experiment_states(spec)
    total = sum(y0)
    average = Fraction(total, spec.n)
    trials: list[TrialResult] = []
    violations: list[str] = []
    mean_series: list[list[float]] = []
    for t in range(spec.trials):
        trace = run_trial(spec, t, y0)
        final = trace.final_average
        trials.append(
            TrialResult(
                trial=t,
                m=trace.m,
                converged=trace.converged,
                steps=trace.steps_to_consensus,
                bound=trace.theoretical_bound,
                final_value=final,
                distorted_min=min(trace.distorted_y0),
                distorted_max=max(trace.distorted_y0),
                distorted_sum=sum(trace.distorted_y0),
            )
        )
        if not trace.converged:
            violations.append(f"trial {t}: did not converge")
        else:
            if trace.steps_to_consensus > trace.theoretical_bound:
                violations.append(
                    f"trial {t}: {trace.steps_to_consensus} steps exceeds bound "
                    f"{trace.theoretical_bound}"
                )
            if final != average:
                violations.append(f"trial {t}: final value {final} != {average}")
        if trace.mean_q is not None:
            mean_series.append(trace.mean_q)
    mean_q = _average_padded(mean_series) if mean_series else None
    return SweepReport(
        spec=spec,
        y0=y0,
        exact_average=average,
        trials=trials,
        violations=violations,
        mean_q=mean_q,
    )


def _average_padded(series: list[list[float]]) -> list[float]:
    """Pointwise mean of per-trial series, each padded with its final value."""
    length = max(len(s) for s in series)
    out = []
    for k in range(length):
        out.append(sum(s[k] if k < len(s) else s[-1] for s in series) / len(series))
    return out


# -- smart-grid scenario ------------------------------------------------

NEIGHBORHOOD_SIZE = 8


def neighborhood_digraph(seed: Seed = 0) -> Digraph:
    """Strongly connected 8-household neighborhood: a bidirectional ring
    with two cross streets.  Out-neighbor orders are seeded."""
    n = NEIGHBORHOOD_SIZE
    edges = set()
    for j in range(n):
        edges.add(((j + 1) % n, j))
        edges.add((j, (j + 1) % n))
    edges.add((4, 0))
    edges.add((0, 4))
    edges.add((6, 2))
    edges.add((2, 6))
    order = tuple(
        tuple(sorted(r for (r, s) in edges if s == j)) for j in range(n)
    )
    g = Digraph(n=n, edges=frozenset(edges), out_order=order)
    return assign_out_orders(g, seed)


@dataclass(frozen=True)
class SmartGridResult:
    total_demand: int
    average: Fraction
    metered_state: Fraction  # collecting household's converged estimate
    trace: SimTrace


def validate_distorted_demands(original: Sequence[int], distorted: Sequence[int]) -> bool:
    """Zero-sum distortion check: distorted demands must preserve the total."""
    return len(original) == len(distorted) and sum(original) == sum(distorted)


def run_smartgrid(
    demands: Sequence[int],
    protocol: Protocol,
    graph: Digraph | None = None,
    seed: Seed = 0,
    record_states: Literal["none", "mean", "full"] = "none",
    adding_steps_range: tuple[int, int] = (20, 40),
    offset_total_range: tuple[int, int] = (50, 100),
    zero_sum_range: tuple[int, int] = (-20, 20),
) -> SmartGridResult:
    """Aggregate household demands privately; the meter reads one
    household's converged estimate and scales it by the household count."""
    if graph is None:
        graph = neighborhood_digraph(seed)
    if len(demands) != graph.n:
        raise ExperimentError(f"{len(demands)} demands for {graph.n} households")
    rng = random.Random(f"{seed}/smartgrid")
    plans = build_plans(
        graph, demands, protocol, rng,
        adding_steps_range, offset_total_range, zero_sum_range,
    )
    trace = run(SimConfig(graph=graph, plans=plans, record_states=record_states))
    if not trace.converged:
        raise ExperimentError("smart-grid aggregation did not converge")
    ys, zs = trace.final_states[0]
    metered = Fraction(ys, zs)
    total = metered * graph.n
    if total.denominator != 1:
        raise ExperimentError(f"non-integer total demand {total}")
    return SmartGridResult(
        total_demand=int(total),
        average=metered,
        metered_state=metered,
        trace=trace,
    )
