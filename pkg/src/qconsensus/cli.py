"""Command-line front end: single runs, sweeps, the smart-grid scenario,
topological privacy checks, and the desk-scale adversary oracle.

Exit status is 0 only when every invariant and bound checked by the
subcommand holds.
"""
from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from .experiments import (
    ExperimentSpec,
    build_plans,
    experiment_states,
    neighborhood_digraph,
    run_experiment,
    run_smartgrid,
    sample_initial_states,
)
from .graph import Digraph, RoleMap, generate_random_digraph, load_digraph
from .privacy import (
    HypothesisSpace,
    adversary_enumerate,
    check_event_offset_privacy,
    check_zero_sum_privacy,
    enumerate_event_schedules,
    enumerate_zero_sum_schedules,
)
from .reports import (
    write_mean_series,
    write_smartgrid_report,
    write_step_table,
    write_sweep_report,
    write_trace_report,
)
from .simulator import NodePlan, SimConfig, run

CASES = {"plain": "plain", "event-offset": "event_offset", "zero-sum": "zero_sum"}


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip() != "")


def _load_or_generate_graph(args) -> Digraph:
    if args.graph:
        return load_digraph(args.graph)
    return generate_random_digraph(args.n, args.p, args.seed)


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", type=Path, default=None, help="digraph JSON file")
    p.add_argument("--n", type=int, default=20, help="node count for random digraphs")
    p.add_argument("--p", type=float, default=0.3, help="edge probability")
    p.add_argument("--seed", type=int, default=0)


def _add_offset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--adding-steps", type=_int_list, default=(20, 40), metavar="LO,HI")
    p.add_argument("--offset-total", type=_int_list, default=(50, 100), metavar="LO,HI")
    p.add_argument("--zero-sum-offset", type=_int_list, default=(-20, 20), metavar="LO,HI")


def _cmd_run(args) -> int:
    spec = ExperimentSpec(
        n=args.n,
        p=args.p,
        seed=args.seed,
        case=CASES[args.case],
        trials=1,
        y0=_int_list(args.states) if args.states else None,
        y0_sum=args.sum,
        adding_steps_range=tuple(args.adding_steps),
        offset_total_range=tuple(args.offset_total),
        zero_sum_range=tuple(args.zero_sum_offset),
    )
    y0 = experiment_states(spec)
    if args.graph:
        graph = load_digraph(args.graph)
    else:
        graph = generate_random_digraph(spec.n, spec.p, seed=f"{spec.seed}/g0")
    rng = random.Random(f"{spec.seed}/offsets0")
    plans = build_plans(
        graph, y0, spec.case, rng,
        spec.adding_steps_range, spec.offset_total_range, spec.zero_sum_range,
    )
    trace = run(SimConfig(graph=graph, plans=plans, record_states="full"))

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_trace_report(trace, out / "run_report.json")
    write_step_table(trace, out / "steps.csv")
    if not args.no_plot:
        from .plots import plot_state_trajectories

        plot_state_trajectories(trace, out / "states.png", title=f"case {args.case}")
    ok = trace.converged and trace.steps_to_consensus <= trace.theoretical_bound
    avg = trace.final_average
    print(
        f"converged={trace.converged} steps={trace.steps_to_consensus} "
        f"bound={trace.theoretical_bound} final={avg} -> {out}"
    )
    return 0 if ok else 1


def _cmd_sweep(args) -> int:
    spec = ExperimentSpec(
        n=args.n,
        p=args.p,
        seed=args.seed,
        case=CASES[args.case],
        trials=args.trials,
        y0=_int_list(args.states) if args.states else None,
        y0_sum=args.sum,
        adding_steps_range=tuple(args.adding_steps),
        offset_total_range=tuple(args.offset_total),
        zero_sum_range=tuple(args.zero_sum_offset),
        record_states="mean",
    )
    report = run_experiment(spec)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_report(report, out / "sweep_report.json")
    write_mean_series(report, out / "mean_q.csv")
    if not args.no_plot:
        from .plots import plot_mean_series

        plot_mean_series(
            report, out / "mean_q.png", title=f"case {args.case}, {spec.trials} trials"
        )
    steps = [t.steps for t in report.trials]
    print(
        f"trials={spec.trials} max_steps={report.max_steps} "
        f"median_steps={sorted(steps)[len(steps) // 2]} "
        f"violations={len(report.violations)} -> {out}"
    )
    for v in report.violations:
        print(f"  violation: {v}", file=sys.stderr)
    return 0 if report.ok else 1


def _cmd_smartgrid(args) -> int:
    graph = load_digraph(args.graph) if args.graph else neighborhood_digraph(args.seed)
    demands = _int_list(args.demands)
    result = run_smartgrid(
        demands,
        CASES[args.case],
        graph=graph,
        seed=args.seed,
        record_states="full" if not args.no_plot else "none",
        adding_steps_range=tuple(args.adding_steps),
        offset_total_range=tuple(args.offset_total),
        zero_sum_range=tuple(args.zero_sum_offset),
    )
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_smartgrid_report(result, out / "smartgrid_report.json")
    if not args.no_plot:
        from .plots import plot_state_trajectories

        plot_state_trajectories(
            result.trace, out / "demands.png", title=f"neighborhood demand, case {args.case}"
        )
    expected = sum(demands)
    print(f"total_demand={result.total_demand} average={result.average} -> {out}")
    return 0 if result.total_demand == expected else 1


def _roles_from_args(args, n: int) -> RoleMap:
    return RoleMap(
        n=n,
        privacy=frozenset(_int_list(args.privacy)) if args.privacy else frozenset(),
        curious=frozenset(_int_list(args.curious)) if args.curious else frozenset(),
    )


def _cmd_check_privacy(args) -> int:
    graph = _load_or_generate_graph(args)
    roles = _roles_from_args(args, graph.n)
    if not roles.privacy:
        print("no privacy-seeking nodes given (--privacy)", file=sys.stderr)
        return 2
    for target in sorted(roles.privacy):
        v1 = check_event_offset_privacy(graph, roles, target)
        v2 = check_zero_sum_privacy(graph, roles, target)
        print(f"event-offset : {v1.describe()}")
        print(f"zero-sum     : {v2.describe()}")
    return 0


def _cmd_adversary(args) -> int:
    graph = _load_or_generate_graph(args)
    roles = _roles_from_args(args, graph.n)
    case = CASES[args.case]
    if case == "plain":
        print("choose a privacy case: event-offset or zero-sum", file=sys.stderr)
        return 2
    lo, hi = args.state_range
    space = HypothesisSpace(
        state_range=(lo, hi),
        zero_sum_range=tuple(args.zero_sum_offset),
        installment_max=args.installment_max,
        adding_steps_slack=args.adding_steps_slack,
        budget=args.budget,
    )
    rng = random.Random(f"{args.seed}/true")
    y0 = sample_initial_states(graph.n, rng, (lo, hi))
    plans = []
    for j in range(graph.n):
        if j in roles.privacy:
            if case == "event_offset":
                sched = rng.choice(enumerate_event_schedules(graph.out_degree(j), space))
                plans.append(NodePlan(y0[j], "event_offset", event_schedule=sched))
            else:
                sched = rng.choice(
                    enumerate_zero_sum_schedules(graph.out_neighbors(j), space)
                )
                plans.append(NodePlan(y0[j], "zero_sum", zero_sum_schedule=sched))
        else:
            plans.append(NodePlan(y0[j]))
    config = SimConfig(graph=graph, plans=tuple(plans), record_messages=True)
    trace = run(config)
    result = adversary_enumerate(
        graph, roles, case, config, trace, args.target, space
    )
    values = sorted(result.consistent_values)
    print(
        f"target={args.target} true_state={y0[args.target]} "
        f"consistent_values={values} "
        f"privacy_preserved={result.privacy_preserved} "
        f"candidates_checked={result.candidates_checked}"
    )
    return 0 if y0[args.target] in result.consistent_values else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qconsensus",
        description="Finite-time privacy-preserving quantized average consensus tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single deterministic run with full trace")
    _add_graph_args(p_run)
    _add_offset_args(p_run)
    p_run.add_argument("--case", choices=CASES, default="plain")
    p_run.add_argument("--states", type=str, default=None, help="comma-separated y0")
    p_run.add_argument("--sum", type=int, default=None, help="condition sampled y0 on this sum")
    p_run.add_argument("--out", type=Path, default=Path("out/run"))
    p_run.add_argument("--no-plot", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="multi-trial random-digraph sweep")
    _add_graph_args(p_sweep)
    _add_offset_args(p_sweep)
    p_sweep.add_argument("--case", choices=CASES, default="plain")
    p_sweep.add_argument("--trials", type=int, default=100)
    p_sweep.add_argument("--states", type=str, default=None)
    p_sweep.add_argument("--sum", type=int, default=None)
    p_sweep.add_argument("--out", type=Path, default=Path("out/sweep"))
    p_sweep.add_argument("--no-plot", action="store_true")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_grid = sub.add_parser("smartgrid", help="neighborhood total-demand aggregation")
    p_grid.add_argument("--graph", type=Path, default=None)
    p_grid.add_argument("--seed", type=int, default=0)
    p_grid.add_argument(
        "--demands", type=str, default="30,35,28,34,27,37,29,32",
        help="comma-separated household demands",
    )
    _add_offset_args(p_grid)
    p_grid.add_argument("--case", choices=CASES, default="zero-sum")
    p_grid.add_argument("--out", type=Path, default=Path("out/smartgrid"))
    p_grid.add_argument("--no-plot", action="store_true")
    p_grid.set_defaults(func=_cmd_smartgrid)

    p_check = sub.add_parser("check-privacy", help="topological privacy conditions")
    _add_graph_args(p_check)
    p_check.add_argument("--privacy", type=str, default="", help="comma-separated node ids")
    p_check.add_argument("--curious", type=str, default="", help="comma-separated node ids")
    p_check.set_defaults(func=_cmd_check_privacy)

    p_adv = sub.add_parser("adversary", help="desk-scale exact-inference oracle")
    _add_graph_args(p_adv)
    p_adv.add_argument("--privacy", type=str, default="")
    p_adv.add_argument("--curious", type=str, default="")
    p_adv.add_argument("--case", choices=CASES, default="zero-sum")
    p_adv.add_argument("--target", type=int, required=True)
    p_adv.add_argument("--state-range", type=_int_list, default=(0, 5), metavar="LO,HI")
    p_adv.add_argument("--zero-sum-offset", type=_int_list, default=(-2, 2), metavar="LO,HI")
    p_adv.add_argument("--installment-max", type=int, default=2)
    p_adv.add_argument("--adding-steps-slack", type=int, default=1)
    p_adv.add_argument("--budget", type=int, default=10_000_000)
    p_adv.set_defaults(func=_cmd_adversary)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
