"""Run reports: cost decomposition, per-round metrics, schedules.

The metrics and schedule files carry only algorithmic quantities and are
byte-reproducible for a fixed seed and thread count; wall-clock timings
live in the report file only.  All numbers render with 17 significant
digits so parsers round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

METRICS_VERSION = "maintops-metrics v1"
REPORT_VERSION = "maintops-report v1"


def fmt(v: float) -> str:
    return f"{v:.17g}"


@dataclass
class PhaseStats:
    name: str
    rounds: int = 0
    converged: bool = False
    wall_time: float = 0.0
    inner_iterations: int = 0
    warnings: list[str] = field(default_factory=list)


@dataclass
class RoundMetrics:
    phase: str
    round: int
    primal_residual: float
    dual_residual: float
    exact_cost: float
    messages: int


@dataclass
class RunReport:
    mode: str
    seed: int
    converged: bool
    phases: list[PhaseStats] = field(default_factory=list)
    rounds: list[RoundMetrics] = field(default_factory=list)
    operations: float = 0.0
    maintenance: float = 0.0
    curtailment: float = 0.0
    penalty_exact: float = 0.0
    pwl_bound: float = 0.0
    upper_bound: float | None = None
    message_counts: dict[str, int] = field(default_factory=dict)
    message_bytes: int = 0
    gen_ids: tuple[int, ...] = ()
    num_steps: int = 0
    num_epochs: int = 0
    x: np.ndarray | None = None      # (gens, T)
    y: np.ndarray | None = None
    z: np.ndarray | None = None      # (gens, M)
    balance_residual: float = 0.0

    @property
    def gross(self) -> float:
        return self.operations + self.maintenance + self.curtailment

    def phase(self, name: str) -> PhaseStats:
        for p in self.phases:
            if p.name == name:
                return p
        raise KeyError(name)


def render_metrics(report: RunReport) -> str:
    lines = [f"# {METRICS_VERSION}",
             "phase,round,primal_residual,dual_residual,exact_cost,messages"]
    for r in sorted(report.rounds, key=lambda m: (m.phase, m.round)):
        lines.append(",".join([r.phase, str(r.round), fmt(r.primal_residual),
                               fmt(r.dual_residual), fmt(r.exact_cost),
                               str(r.messages)]))
    return "\n".join(lines) + "\n"


def parse_metrics(text: str) -> list[RoundMetrics]:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or lines[0] != f"# {METRICS_VERSION}":
        raise ValueError("unrecognized metrics file version")
    out = []
    for ln in lines[2:]:
        phase, rnd, pr, dr, cost, msgs = ln.split(",")
        out.append(RoundMetrics(phase=phase, round=int(rnd),
                                primal_residual=float(pr), dual_residual=float(dr),
                                exact_cost=float(cost), messages=int(msgs)))
    return out


def render_schedule(ids, horizon: int, values: np.ndarray, index_name: str) -> str:
    lines = [f"generator,{index_name},value"]
    for i, g in enumerate(ids):
        for t in range(horizon):
            lines.append(f"{g},{t + 1},{fmt(float(values[i, t]))}")
    return "\n".join(lines) + "\n"


def render_report(report: RunReport) -> str:
    lines = [REPORT_VERSION,
             f"mode: {report.mode}",
             f"seed: {report.seed}",
             f"converged: {str(report.converged).lower()}",
             "", "[costs]",
             f"operations: {fmt(report.operations)}",
             f"maintenance: {fmt(report.maintenance)}",
             f"curtailment: {fmt(report.curtailment)}",
             f"gross: {fmt(report.gross)}",
             f"penalty_exact: {fmt(report.penalty_exact)}",
             f"pwl_error_bound: {fmt(report.pwl_bound)}",
             f"balance_residual: {fmt(report.balance_residual)}"]
    if report.upper_bound is not None:
        lines.append(f"upper_bound: {fmt(report.upper_bound)}")
    lines += ["", "[phases]"]
    for p in report.phases:
        warn = f" warnings={len(p.warnings)}" if p.warnings else ""
        lines.append(f"{p.name}: rounds={p.rounds} converged={str(p.converged).lower()} "
                     f"wall_time_s={p.wall_time:.3f} inner_iterations={p.inner_iterations}{warn}")
        for w in p.warnings:
            lines.append(f"  warning: {w}")
    lines += ["", "[messages]", f"bytes: {report.message_bytes}"]
    for kind in sorted(report.message_counts):
        lines.append(f"{kind}: {report.message_counts[kind]}")
    lines.append("")
    return "\n".join(lines)


def write_outputs(report: RunReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.txt, metrics.csv and the schedule tables; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.txt",
        "metrics": out / "metrics.csv",
        "schedule_x": out / "schedule_x.csv",
        "schedule_y": out / "schedule_y.csv",
        "schedule_z": out / "schedule_z.csv",
    }
    paths["report"].write_text(render_report(report))
    paths["metrics"].write_text(render_metrics(report))
    if report.x is not None:
        paths["schedule_x"].write_text(
            render_schedule(report.gen_ids, report.num_steps, report.x, "step"))
        paths["schedule_y"].write_text(
            render_schedule(report.gen_ids, report.num_steps, report.y, "step"))
        paths["schedule_z"].write_text(
            render_schedule(report.gen_ids, report.num_epochs, report.z, "epoch"))
    return paths


@dataclass
class SweepPoint:
    label: str
    decentralized_gross: float
    centralized_gross: float
    decentralized_minutes: float
    centralized_minutes: float
    converged: bool
    error: str = ""

    @property
    def gap(self) -> float:
        if self.centralized_gross == 0.0:
            return 0.0
        return (self.decentralized_gross - self.centralized_gross) / self.centralized_gross


def render_sweep(points: list[SweepPoint]) -> str:
    lines = ["label,gap_percent,decent_gross,central_gross,"
             "decent_minutes,central_minutes,converged,error"]
    for p in points:
        lines.append(",".join([
            p.label, fmt(100.0 * p.gap), fmt(p.decentralized_gross),
            fmt(p.centralized_gross), f"{p.decentralized_minutes:.3f}",
            f"{p.centralized_minutes:.3f}", str(p.converged).lower(),
            p.error.replace(",", ";")]))
    return "\n".join(lines) + "\n"
