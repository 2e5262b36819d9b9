"""Flat-file outputs: JSON run/sweep reports and per-step CSV tables.

All serialization is deterministic (sorted keys, fixed column order) so
identical specs produce byte-identical artifacts.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

from .experiments import ExperimentSpec, SmartGridResult, SweepReport
from .simulator import SimTrace

STEP_TABLE_HEADER = ["step", "node", "y", "z", "ys", "zs", "q", "fired"]


def _fraction(x: Fraction | None) -> str | None:
    return None if x is None else f"{x.numerator}/{x.denominator}"


def trace_summary(trace: SimTrace) -> dict:
    return {
        "n": trace.n,
        "m": trace.m,
        "protocols": list(trace.protocols),
        "initial_sum": sum(trace.y0),
        "distorted_initial_range": [min(trace.distorted_y0), max(trace.distorted_y0)],
        "distorted_initial_sum": sum(trace.distorted_y0),
        "converged": trace.converged,
        "steps_to_consensus": trace.steps_to_consensus,
        "executed_steps": trace.executed_steps,
        "theoretical_bound": trace.theoretical_bound,
        "window": trace.window,
        "final_value": _fraction(trace.final_average),
        "final_states": [list(s) for s in trace.final_states],
        "firings": list(trace.firings),
        "net_injected_offsets": list(trace.injected),
    }


def write_trace_report(trace: SimTrace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(trace_summary(trace), indent=2, sort_keys=True) + "\n")


def write_step_table(trace: SimTrace, path: str | Path) -> None:
    """Per-step node table; requires a run recorded with full states."""
    if trace.records is None:
        raise ValueError("trace was not recorded with record_states='full'")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STEP_TABLE_HEADER)
        for r in trace.records:
            writer.writerow(
                [r.step, r.node, r.y, r.z, r.ys, r.zs, repr(r.ys / r.zs), int(r.fired)]
            )


def sweep_summary(report: SweepReport) -> dict:
    # normalize tuples to lists so the dict equals its JSON round trip
    spec = json.loads(json.dumps(asdict(report.spec)))
    return {
        "spec": spec,
        "y0": list(report.y0),
        "exact_average": _fraction(report.exact_average),
        "ok": report.ok,
        "violations": report.violations,
        "trials": [
            {
                "trial": t.trial,
                "m": t.m,
                "converged": t.converged,
                "steps": t.steps,
                "bound": t.bound,
                "final_value": _fraction(t.final_value),
                "distorted_range": [t.distorted_min, t.distorted_max],
                "distorted_sum": t.distorted_sum,
            }
            for t in report.trials
        ],
    }


def write_sweep_report(report: SweepReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sweep_summary(report), indent=2, sort_keys=True) + "\n")


def write_mean_series(report: SweepReport, path: str | Path) -> None:
    if report.mean_q is None:
        raise ValueError("sweep was not recorded with per-step means")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "mean_q"])
        for k, q in enumerate(report.mean_q):
            writer.writerow([k, repr(q)])


def smartgrid_summary(result: SmartGridResult) -> dict:
    return {
        "total_demand": result.total_demand,
        "average_demand": _fraction(result.average),
        "metered_state": _fraction(result.metered_state),
        "run": trace_summary(result.trace),
    }


def write_smartgrid_report(result: SmartGridResult, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(smartgrid_summary(result), indent=2, sort_keys=True) + "\n"
    )
