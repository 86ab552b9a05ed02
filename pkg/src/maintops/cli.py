"""Command line driver: run, centralized, sweep, validate.

Exit codes: 0 success (all phases converged where applicable), 2 for
configuration or input-file problems, 3/4/5 when the first/second/third
phase failed to converge within its round cap, 6 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .case import (CaseError, TimeGrid, expand_demand, parse_case, parse_partition)
from .config import ConfigError, RunConfig, load_config
from .degradation import ResidualLifeError, cost_curve, parse_rld_file
from .milp import Limits, Tolerances
from .report import SweepPoint, render_sweep, write_outputs
from .runtime import (AlgorithmOptions, MtOptError, OrchestrationError,
                      centralized_benchmark, run_algorithm)
from .subproblem import PenaltyConfig
from .transport import TransportError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHASE = {"fmrc": 3, "fmbc": 4, "bmbc": 5}
EXIT_RUNTIME = 6


def _build_inputs(cfg: RunConfig):
    case = parse_case(Path(cfg.case).read_text())
    partition = parse_partition(Path(cfg.partition).read_text(), case)
    grid = TimeGrid(num_epochs=cfg.epochs, days=cfg.days, steps_per_day=cfg.cgd)
    demand = expand_demand(case, grid, list(cfg.shape))
    rld_path = Path(cfg.rld)
    specs = parse_rld_file(rld_path.read_text(), base_dir=rld_path.parent,
                           default_omega_p=cfg.omega_p, default_omega_f=cfg.omega_f)
    curves = {}
    for g in case.generators:
        if g.id not in specs:
            raise ResidualLifeError(f"generator {g.id} missing from {cfg.rld}")
        spec = specs[g.id]
        curves[g.id] = cost_curve(spec.rld, cfg.kappa, spec.omega_p, spec.omega_f,
                                  cfg.epochs, generator=g.id,
                                  substeps=cfg.integration_substeps)
    return case, partition, grid, demand, curves


def _penalties(cfg: RunConfig) -> PenaltyConfig:
    return PenaltyConfig(
        rho_theta=cfg.rho_theta, rho_flow=cfg.rho_flow,
        rho_production=cfg.rho_production, curtail_cost=cfg.curtail_cost,
        pwl_segments=cfg.pwl_segments, trust_theta=cfg.trust_theta,
        trust_flow_frac=cfg.trust_flow_frac,
        trust_production_frac=cfg.trust_production_frac,
        abs_deviation_mode=cfg.abs_deviation_mode)


def _options(cfg: RunConfig, out_dir: Path | None) -> AlgorithmOptions:
    return AlgorithmOptions(
        eps=cfg.eps, rounds_fmrc=cfg.rounds_fmrc, rounds_fmbc=cfg.rounds_fmbc,
        rounds_bmbc=cfg.rounds_bmbc, inner_cap=cfg.inner_cap,
        tolerances=Tolerances(
            feasibility=cfg.feasibility_tol, optimality=cfg.optimality_tol,
            integrality=cfg.integrality_tol, gap=cfg.gap_tol,
            max_iterations=cfg.iteration_cap),
        limits=Limits(max_nodes=cfg.node_cap),
        threads=cfg.threads, transport=cfg.transport,
        round_timeout=cfg.round_timeout,
        lp_dump_dir=str(out_dir / "models") if (cfg.lp_dump and out_dir) else None)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.transport is not None:
        cfg.transport = args.transport
    if args.out is not None:
        cfg.out = args.out
    cfg.validate()
    return cfg


def _exit_code(report) -> int:
    for p in report.phases:
        if not p.converged:
            return EXIT_PHASE[p.name]
    return EXIT_OK


def cmd_run(args, centralized: bool = False) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out_dir = Path(cfg.out)
    case, partition, grid, demand, curves = _build_inputs(cfg)
    options = _options(cfg, out_dir)
    started = time.perf_counter()
    if centralized:
        report = centralized_benchmark(case, grid, demand, curves,
                                       _penalties(cfg), options, seed=cfg.seed)
    else:
        report = run_algorithm(partition, grid, demand, curves,
                               _penalties(cfg), options, seed=cfg.seed)
    elapsed = time.perf_counter() - started
    paths = write_outputs(report, out_dir)
    print(f"{report.mode}: gross={report.gross:.6f} ops={report.operations:.6f} "
          f"cbm={report.maintenance:.6f} dc={report.curtailment:.6f} "
          f"converged={str(report.converged).lower()} wall_s={elapsed:.1f}")
    for p in report.phases:
        print(f"  {p.name}: rounds={p.rounds} converged={str(p.converged).lower()}")
    print(f"  outputs: {paths['report'].parent}")
    return _exit_code(report)


def cmd_sweep(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    base_out = Path(cfg.out)
    points: list[SweepPoint] = []
    axis: list[tuple[str, dict]] = []
    if args.cgd:
        for c in args.cgd.split(","):
            axis.append((f"cgd{int(c)}", {"cgd": int(c)}))
    if args.partitions:
        for p in args.partitions.split(","):
            axis.append((Path(p).stem, {"partition": p}))
    if not axis:
        axis.append(("base", {}))

    for label, override in axis:
        point_cfg = load_config(args.config)
        _apply_overrides(point_cfg, args)
        for k, v in override.items():
            setattr(point_cfg, k, v)
        if point_cfg.profile and len(point_cfg.profile) != point_cfg.cgd:
            point_cfg.profile = ()   # fall back to a flat profile on cgd sweeps
        try:
            point_cfg.validate()
            case, partition, grid, demand, curves = _build_inputs(point_cfg)
            options = _options(point_cfg, None)
            t0 = time.perf_counter()
            dec = run_algorithm(partition, grid, demand, curves,
                                _penalties(point_cfg), options, seed=point_cfg.seed)
            t_dec = time.perf_counter() - t0
            t0 = time.perf_counter()
            cen = centralized_benchmark(case, grid, demand, curves,
                                        _penalties(point_cfg), options,
                                        seed=point_cfg.seed)
            t_cen = time.perf_counter() - t0
            write_outputs(dec, base_out / label / "decentralized")
            write_outputs(cen, base_out / label / "centralized")
            points.append(SweepPoint(
                label=label, decentralized_gross=dec.gross,
                centralized_gross=cen.gross,
                decentralized_minutes=t_dec / 60.0,
                centralized_minutes=t_cen / 60.0,
                converged=dec.converged and cen.converged))
        except (CaseError, ConfigError, ResidualLifeError, OrchestrationError,
                TransportError, OSError) as exc:
            points.append(SweepPoint(label=label, decentralized_gross=float("nan"),
                                     centralized_gross=float("nan"),
                                     decentralized_minutes=0.0,
                                     centralized_minutes=0.0,
                                     converged=False, error=str(exc)))
    base_out.mkdir(parents=True, exist_ok=True)
    table = render_sweep(points)
    (base_out / "sweep.csv").write_text(table)
    print(table, end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    case, partition, grid, demand, curves = _build_inputs(cfg)
    print(f"case: {len(case.buses)} buses, {len(case.lines)} lines, "
          f"{len(case.generators)} generators")
    ties = sum(len(rv.tie_lines) for rv in partition.regions) // 2
    print(f"partition: {len(partition.regions)} regions, {ties} tie lines")
    for rv in partition.regions:
        print(f"  region {rv.region}: {len(rv.internal)} internal, "
              f"{len(rv.boundary)} boundary, {len(rv.foreign)} foreign, "
              f"{len(rv.generators)} generators")
    print(f"grid: {grid.num_epochs} epochs x {grid.steps_per_epoch} steps "
          f"({grid.days} days, {grid.steps_per_day} per day)")
    print(f"demand: peak {demand.sum(axis=0).max():.3f} MW, "
          f"capacity {sum(g.p_max for g in case.generators):.3f} MW")
    for g, curve in sorted(curves.items()):
        head = ", ".join(f"{v:.3f}" for v in curve.values[:4])
        print(f"curve g{g}: [{head}{', ...' if len(curve) > 4 else ''}]")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="maintops",
        description="Decentralized joint maintenance and unit commitment")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "centralized", "sweep", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--transport", choices=("inproc", "socket"), default=None)
        p.add_argument("--out", default=None)
        if name == "sweep":
            p.add_argument("--cgd", default=None,
                           help="comma-separated commitment decisions per day")
            p.add_argument("--partitions", default=None,
                           help="comma-separated partition files (region axis)")
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "centralized":
            return cmd_run(args, centralized=True)
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_validate(args)
    except (ConfigError, CaseError, ResidualLifeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MtOptError, OrchestrationError, TransportError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
