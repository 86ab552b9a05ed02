"""Round-synchronous multi-region optimization runtime.

One agent per region, each owning its local data and consensus state.
Every round an agent solves all of its epoch models (optionally on a
process pool), exchanges boundary phase-angle estimates with neighbors
and scalar demand violations with everyone, refreshes its consensus
state, and evaluates convergence.  The run proceeds through three
phases:

1. maintenance fixed at each generator's cheapest epoch, relaxed
   commitment (convex),
2. maintenance fixed, binary commitment: its exact cost becomes the
   global upper bound,
3. maintenance released, binary commitment: an inner dual-ascent loop on
   the once-per-horizon maintenance constraint runs between rounds.

Note on the convergence flag: 1 means globally converged, so every
phase loop runs until the flag is set (or its round cap is reached).
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from threading import Thread
from typing import Mapping

import numpy as np

from .case import NetworkCase, PartitionedCase, TimeGrid, single_region_partition
from .consensus import (ConsensusState, check_local_convergence, init_consensus,
                        intermediate_flow, intermediate_theta, local_violation,
                        production_target, update_eta, update_lambda, update_phi)
from .degradation import MaintenanceCostCurve, argmin_epoch
from .lpformat import write_lp
from .milp import Limits, LinearModel, SolveResult, SolveStatus, Tolerances, solve_milp
from .report import PhaseStats, RoundMetrics, RunReport
from .subproblem import (EpochSlice, ModelMode, PenaltyConfig, RegionProblem,
                         balance_residual, build_epoch_model, exact_penalty,
                         extract_solution)
from .transport import (CONV_FLAG, THETA_SHARE, UBOUND_SHARE, VIOLATION_SHARE,
                        BaseTransport, InprocTransport, RoundMessage,
                        SocketTransport, Trace, TransportError)

PHASE_FMRC, PHASE_FMBC, PHASE_BMBC = "fmrc", "fmbc", "bmbc"


class OrchestrationError(RuntimeError):
    pass


class MtOptError(OrchestrationError):
    """An epoch model could not be solved to optimality."""

    def __init__(self, region: int, epoch: int, detail: str):
        super().__init__(f"region {region}, epoch {epoch}: {detail}")
        self.region = region
        self.epoch = epoch
        self.detail = detail


@dataclass
class SubgradientState:
    """Dual state for the once-per-horizon maintenance constraint."""

    alpha: dict[int, float]
    step: float = 0.0
    upper_bound: float | None = None
    inner_iterations: int = 0
    cap: int = 30


def subgradient_step(upper_bound: float, objective: float, deficits) -> float:
    """Step length |UB - L| / sum of squared cardinality deficits.

    A zero denominator would mean every deficit is zero, i.e. the
    maintenance constraint already holds, in which case no step is taken
    at all; callers must not reach this point.
    """
    denom = float(sum(d * d for d in deficits))
    if denom == 0.0:
        raise ValueError("all cardinality deficits are zero; no step is defined")
    return abs(upper_bound - objective) / denom


@dataclass
class AlgorithmOptions:
    eps: float = 1e-2
    rounds_fmrc: int = 200
    rounds_fmbc: int = 200
    rounds_bmbc: int = 500
    inner_cap: int = 30
    tolerances: Tolerances = field(default_factory=Tolerances)
    limits: Limits = field(default_factory=Limits)
    threads: int = 1
    transport: str = "inproc"
    round_timeout: float = 300.0
    lp_dump_dir: str | None = None


def _pool_solve(model: LinearModel, tol: Tolerances, limits: Limits) -> SolveResult:
    return solve_milp(model, tol, limits)


class SolveExecutor:
    """Runs independent epoch solves inline or on a process pool."""

    def __init__(self, pool: ProcessPoolExecutor | None,
                 tol: Tolerances, limits: Limits):
        self.pool = pool
        self.tol = tol
        self.limits = limits

    def solve_many(self, models: list[LinearModel]) -> list[SolveResult]:
        if self.pool is None:
            return [solve_milp(m, self.tol, self.limits) for m in models]
        futures = [self.pool.submit(_pool_solve, m, self.tol, self.limits)
                   for m in models]
        return [f.result() for f in futures]


class RegionAgent:
    """Owns one region's data, models and consensus state."""

    def __init__(self, problem: RegionProblem, part: PartitionedCase,
                 transport: BaseTransport, executor: SolveExecutor,
                 options: AlgorithmOptions):
        self.problem = problem
        self.view = problem.view
        self.region = problem.view.region
        self.part = part
        self.transport = transport
        self.executor = executor
        self.options = options
        self.grid = problem.grid
        self.consensus = init_consensus(problem.view, problem.case,
                                        problem.grid, problem.demand)
        self.assignment = {g: argmin_epoch(problem.curves[g])
                           for g in problem.view.generators}
        self.sg = SubgradientState(alpha={g: 0.0 for g in problem.view.generators},
                                   cap=options.inner_cap)
        self.slices: list[EpochSlice] = []
        self.solve_consensus: ConsensusState | None = None
        self.phases: list[PhaseStats] = []
        self.rounds: list[dict] = []
        self.events: list[tuple] = []        # (phase, round, event, monotonic)
        self.error: BaseException | None = None
        bus_order = {b.id: i for i, b in enumerate(problem.case.buses)}
        self._own_rows = [bus_order[b] for b in sorted(self.view.owned)]
        self._others = [rv.region for rv in part.regions if rv.region != self.region]
        self._lines = {ln.index: ln for ln in problem.case.lines}

    # -- local solves ------------------------------------------------------

    def mt_opt(self, mode: ModelMode, fixed_z: Mapping[int, int] | None,
               alpha: Mapping[int, float], phase: str, round_: int,
               epochs=None) -> list:
        """Build and solve the (selected) epoch models against current consensus."""
        epochs = list(epochs) if epochs is not None else \
            list(range(1, self.grid.num_epochs + 1))
        built = [build_epoch_model(self.problem, m, self.consensus, alpha,
                                   mode, fixed_z) for m in epochs]
        if self.options.lp_dump_dir:
            dump = Path(self.options.lp_dump_dir)
            dump.mkdir(parents=True, exist_ok=True)
            for rm in built:
                name = f"{phase}_k{round_}_r{self.region}_m{rm.epochs[0]}.lp"
                (dump / name).write_text(write_lp(rm.model))
        results = self.executor.solve_many([rm.model for rm in built])
        slices = []
        for rm, res in zip(built, results):
            if res.status is not SolveStatus.OPTIMAL:
                raise MtOptError(self.region, rm.epochs[0],
                                 self._diagnose(rm, res, mode, fixed_z, alpha))
            slices.append(extract_solution(rm, res, self.problem,
                                           self.options.tolerances.integrality))
        return slices

    def _diagnose(self, rm, res: SolveResult, mode, fixed_z, alpha) -> str:
        if res.status is not SolveStatus.INFEASIBLE:
            return f"solver stopped with status {res.status.value}"
        wide = PenaltyConfig(
            rho_theta=self.problem.penalties.rho_theta,
            rho_flow=self.problem.penalties.rho_flow,
            rho_production=self.problem.penalties.rho_production,
            curtail_cost=self.problem.penalties.curtail_cost,
            pwl_segments=self.problem.penalties.pwl_segments,
            trust_theta=1e6, trust_flow_frac=1.0,
            trust_production_frac=1.0,
            abs_deviation_mode=self.problem.penalties.abs_deviation_mode)
        relaxed_prob = RegionProblem(
            view=self.problem.view, case=self.problem.case, grid=self.grid,
            demand=self.problem.demand, curves=self.problem.curves, penalties=wide)
        try:
            relaxed = build_epoch_model(relaxed_prob, rm.epochs[0], self.consensus,
                                        dict(alpha), mode, fixed_z)
            check = solve_milp(relaxed.model, self.options.tolerances,
                               self.options.limits)
        except Exception:
            return "epoch model infeasible (network or commitment structure)"
        if check.status is SolveStatus.OPTIMAL:
            return ("epoch model infeasible within the consensus trust intervals; "
                    "feasible once they are widened")
        return "epoch model infeasible (network or commitment structure)"

    # -- quantities shared each round ---------------------------------------

    def _stitched(self, slices):
        t_total = self.grid.num_steps
        owned = sorted(self.view.owned)
        theta = {b: np.zeros(t_total) for b in sorted(self.view.visible)}
        flows = np.zeros((len(self.view.tie_lines), t_total))
        psi = np.zeros((len(owned), t_total))
        prod = np.zeros(t_total)
        p_col = np.zeros(t_total)
        ties = sorted(self.view.tie_lines)
        for sl in slices:
            cols = list(sl.steps)
            for i, b in enumerate(sl.visible_buses):
                theta[b][cols] = sl.theta[i]
            for i, l in enumerate(sl.tie_lines):
                flows[ties.index(l)][cols] = sl.flow[i]
            for i, u in enumerate(sl.owned_buses):
                psi[owned.index(u)][cols] = sl.psi[i]
            prod[cols] = sl.y.sum(axis=0) if sl.y.size else 0.0
            p_col[cols] = sl.p
        return theta, flows, psi, prod, p_col

    def exact_cost(self, slices, consensus: ConsensusState) -> float:
        total = 0.0
        for sl in slices:
            total += sl.parts.gross + sl.parts.alpha_term
            total += exact_penalty(sl, consensus, self.problem.penalties)
        return total

    # -- one communication round --------------------------------------------

    def communicate(self, phase: str, round_: int) -> tuple[bool, float, float]:
        view, part = self.view, self.part
        theta, flows, psi, prod, _ = self._stitched(self.slices)
        viol = local_violation(self.problem.demand[self._own_rows], psi, prod)

        sent = 0
        for other in self._others:
            ov = part.region(other)
            shared = sorted((view.boundary & ov.foreign) | (view.foreign & ov.boundary))
            if shared:
                values = tuple((f"theta.{b}.{t}", float(theta[b][t]))
                               for b in shared for t in range(self.grid.num_steps))
                self.transport.send(RoundMessage(
                    sender=self.region, receiver=other, round=round_, phase=phase,
                    kind=THETA_SHARE, values=values))
                sent += 1
            self.transport.send(RoundMessage(
                sender=self.region, receiver=other, round=round_, phase=phase,
                kind=VIOLATION_SHARE,
                values=tuple((f"viol.{t}", float(viol[t]))
                             for t in range(self.grid.num_steps))))
            sent += 1

        shares: dict[int, dict[int, np.ndarray]] = {}
        violations: dict[int, np.ndarray] = {self.region: viol}
        for other in self._others:
            ov = part.region(other)
            shared = sorted((view.foreign & ov.boundary) | (view.boundary & ov.foreign))
            if shared:
                msg = self.transport.recv(self.region, other, THETA_SHARE,
                                          phase, round_)
                got = msg.value_map()
                shares[other] = {
                    b: np.array([got[f"theta.{b}.{t}"]
                                 for t in range(self.grid.num_steps)])
                    for b in shared}
            msg = self.transport.recv(self.region, other, VIOLATION_SHARE,
                                      phase, round_)
            got = msg.value_map()
            violations[other] = np.array([got[f"viol.{t}"]
                                          for t in range(self.grid.num_steps)])

        cons = self.consensus
        prev_flow_bar = cons.flow_bar.copy()
        new_theta_bar = cons.theta_bar.copy()
        for b in cons.buses:
            row = cons.bus_row(b)
            if b in view.boundary:
                estimates = [shares[r][b] for r in sorted(view.boundary_neighbors[b])]
            else:
                owner = part.owner(b)
                estimates = [shares[owner][b]]
            new_theta_bar[row] = intermediate_theta(theta[b], estimates)

        new_flow_bar = cons.flow_bar.copy()
        ties = sorted(view.tie_lines)
        for l in ties:
            ln = self._lines[l]
            u, v = ln.from_bus, ln.to_bus
            co = part.owner(v) if part.owner(u) == self.region else part.owner(u)
            new_flow_bar[cons.tie_row(l)] = intermediate_flow(
                ln.susceptance, (theta[u], theta[v]),
                (shares[co][u], shares[co][v]))

        theta_stack = np.vstack([theta[b] for b in cons.buses]) if cons.buses \
            else np.zeros((0, self.grid.num_steps))
        pen = self.problem.penalties
        cons.lam = update_lambda(cons.lam, theta_stack, new_theta_bar, pen.rho_theta)
        cons.phi = update_phi(cons.phi, flows, new_flow_bar, pen.rho_flow)
        cons.theta_bar = new_theta_bar
        cons.flow_bar = new_flow_bar
        cons.p_bar = production_target(
            prod, [violations[r] for r in sorted(violations)])
        cons.eta = update_eta(cons.eta, prod, cons.p_bar, pen.rho_production)
        cons.round = round_

        if flows.size:
            primal = float(np.max(np.abs(flows - new_flow_bar)))
            dual = float(np.max(np.abs(new_flow_bar - prev_flow_bar)))
        else:
            primal = dual = 0.0
        eligible = round_ >= 2
        local_ok = eligible and check_local_convergence(
            flows, new_flow_bar, prev_flow_bar, self.options.eps)

        flag_value = 1.0 if local_ok else 0.0
        for other in self._others:
            self.transport.send(RoundMessage(
                sender=self.region, receiver=other, round=round_, phase=phase,
                kind=CONV_FLAG, values=(("converged", flag_value),)))
            sent += 1
        omega = local_ok
        for other in self._others:
            msg = self.transport.recv(self.region, other, CONV_FLAG, phase, round_)
            omega = omega and msg.value_map()["converged"] >= 0.5
        self._sent_messages = sent
        return omega, primal, dual

    # -- phases --------------------------------------------------------------

    def _round_record(self, phase, k, primal, dual):
        self.rounds.append(dict(
            phase=phase, round=k, primal=primal, dual=dual,
            exact=self.exact_cost(self.slices, self.solve_consensus),
            messages=getattr(self, "_sent_messages", 0)))

    def run_fixed_phase(self, phase: str, mode: ModelMode, cap: int) -> PhaseStats:
        stats = PhaseStats(name=phase)
        start = time.perf_counter()
        zero_alpha = {g: 0.0 for g in self.view.generators}
        for k in range(1, cap + 1):
            self.events.append((phase, k, "solve_start", time.monotonic()))
            self.solve_consensus = self.consensus.copy()
            self.slices = self.mt_opt(mode, self.assignment, zero_alpha, phase, k)
            self.events.append((phase, k, "solve_end", time.monotonic()))
            omega, primal, dual = self.communicate(phase, k)
            self.events.append((phase, k, "round_end", time.monotonic()))
            stats.rounds = k
            self._round_record(phase, k, primal, dual)
            if omega:
                stats.converged = True
                break
        stats.wall_time = time.perf_counter() - start
        self.phases.append(stats)
        return stats

    def exchange_upper_bound(self) -> float:
        own = self.exact_cost(self.slices, self.solve_consensus)
        for other in self._others:
            self.transport.send(RoundMessage(
                sender=self.region, receiver=other, round=0, phase="ubound",
                kind=UBOUND_SHARE, values=(("objective", own),)))
        total = own
        for other in self._others:
            msg = self.transport.recv(self.region, other, UBOUND_SHARE, "ubound", 0)
            total += msg.value_map()["objective"]
        self.sg.upper_bound = total
        return total

    def _cardinality_deficits(self, slices) -> dict[int, float]:
        gens = sorted(self.view.generators)
        totals = {g: 0.0 for g in gens}
        for sl in slices:
            for i, g in enumerate(sl.gens):
                totals[g] += float(sl.z[i])
        return {g: 1.0 - totals[g] for g in gens}

    def _regional_dual_objective(self, slices) -> float:
        """Commitment plus dispatch plus maintenance cost of the current solution."""
        total = 0.0
        for sl in slices:
            for i, g in enumerate(sl.gens):
                gen = self.problem.generator(g)
                total += gen.commit_cost * float(sl.x[i].sum())
                total += gen.dispatch_cost * float(sl.y[i].sum())
                total += self.problem.curves[g].value(sl.epoch) * float(sl.z[i])
        return total

    def repair_cardinality(self, slices, phase: str, round_: int) -> list:
        """Force exactly one maintenance epoch per generator and re-solve."""
        by_epoch = {sl.epoch: sl for sl in slices}
        assignment: dict[int, int] = {}
        affected: set[int] = set()
        for g in sorted(self.view.generators):
            chosen = [m for m, sl in by_epoch.items()
                      if sl.z[sl.gens.index(g)] > 0.5]
            curve = self.problem.curves[g]
            if len(chosen) == 1:
                assignment[g] = chosen[0]
                continue
            if chosen:
                # keep the epoch with the lowest maintenance cost
                best = min(chosen, key=lambda m: (curve.value(m), m))
            else:
                # the dual shift is uniform across epochs, so the raw curve decides
                best = argmin_epoch(curve)
            assignment[g] = best
            affected |= set(chosen) ^ {best}
        if affected:
            fixed = self.mt_opt(ModelMode.FMBC, assignment, self.sg.alpha,
                                phase, round_, epochs=sorted(affected))
            for sl in fixed:
                by_epoch[sl.epoch] = sl
        return [by_epoch[m] for m in sorted(by_epoch)]

    def run_subgradient_phase(self, phase: str, cap: int) -> PhaseStats:
        stats = PhaseStats(name=phase)
        start = time.perf_counter()
        if self.sg.upper_bound is None:
            raise OrchestrationError("subgradient phase requires the exchanged upper bound")
        for k in range(1, cap + 1):
            self.events.append((phase, k, "solve_start", time.monotonic()))
            self.solve_consensus = self.consensus.copy()
            j = 0
            while True:
                self.slices = self.mt_opt(ModelMode.BMBC, None, self.sg.alpha,
                                          phase, k)
                deficits = self._cardinality_deficits(self.slices)
                if all(abs(d) < 0.5 for d in deficits.values()):
                    break
                j += 1
                self.sg.inner_iterations += 1
                stats.inner_iterations += 1
                if j >= self.sg.cap:
                    self.slices = self.repair_cardinality(self.slices, phase, k)
                    stats.warnings.append(
                        f"round {k}: inner cap {self.sg.cap} reached; "
                        f"maintenance schedule repaired")
                    break
                objective = self._regional_dual_objective(self.slices)
                self.sg.step = subgradient_step(self.sg.upper_bound, objective,
                                                list(deficits.values()))
                for g, d in deficits.items():
                    self.sg.alpha[g] += self.sg.step * d
            self.events.append((phase, k, "solve_end", time.monotonic()))
            omega, primal, dual = self.communicate(phase, k)
            self.events.append((phase, k, "round_end", time.monotonic()))
            stats.rounds = k
            self._round_record(phase, k, primal, dual)
            if omega:
                stats.converged = True
                break
        stats.wall_time = time.perf_counter() - start
        self.phases.append(stats)
        return stats

    def run(self) -> None:
        options = self.options
        try:
            self.run_fixed_phase(PHASE_FMRC, ModelMode.FMRC, options.rounds_fmrc)
            self.run_fixed_phase(PHASE_FMBC, ModelMode.FMBC, options.rounds_fmbc)
            self.exchange_upper_bound()
            self.run_subgradient_phase(PHASE_BMBC, options.rounds_bmbc)
        except BaseException as exc:  # surface through the orchestrator
            self.error = exc
            self.transport.close()


def make_transport(kind: str, regions, timeout: float, trace: Trace) -> BaseTransport:
    if kind == "socket":
        return SocketTransport(regions, timeout=timeout, trace=trace)
    return InprocTransport(regions, timeout=timeout, trace=trace)


def run_agents(part: PartitionedCase, grid: TimeGrid, demand: np.ndarray,
               curves: Mapping[int, MaintenanceCostCurve],
               penalties: PenaltyConfig,
               options: AlgorithmOptions) -> tuple[list[RegionAgent], Trace]:
    """Drive one agent per region through all three phases.

    Returns the finished agents (with their solutions, metrics and event
    traces) plus the byte-level message trace.  Raises the first
    non-transport agent error, if any.
    """
    problems = {}
    for rv in part.regions:
        local = {g: curves[g] for g in rv.generators}
        problems[rv.region] = RegionProblem(
            view=rv, case=part.case, grid=grid, demand=demand,
            curves=local, penalties=penalties)

    trace = Trace()
    regions = [rv.region for rv in part.regions]
    transport = make_transport(options.transport, regions,
                               options.round_timeout, trace)
    pool = ProcessPoolExecutor(max_workers=options.threads) \
        if options.threads > 1 else None
    executor = SolveExecutor(pool, options.tolerances, options.limits)
    agents = [RegionAgent(problems[r], part, transport, executor, options)
              for r in regions]
    try:
        if len(agents) == 1:
            agents[0].run()
        else:
            threads = [Thread(target=a.run, daemon=True) for a in agents]
            for th in threads:
                th.start()
            for th in threads:
                th.join()
    finally:
        transport.close()
        if pool is not None:
            pool.shutdown()

    errors = [a.error for a in agents if a.error is not None]
    if errors:
        primary = next((e for e in errors if not isinstance(e, TransportError)),
                       errors[0])
        raise primary
    return agents, trace


def run_algorithm(part: PartitionedCase, grid: TimeGrid, demand: np.ndarray,
                  curves: Mapping[int, MaintenanceCostCurve],
                  penalties: PenaltyConfig, options: AlgorithmOptions,
                  seed: int = 0, mode_label: str = "decentralized") -> RunReport:
    """Run the three-phase decentralized algorithm and assemble a report."""
    agents, trace = run_agents(part, grid, demand, curves, penalties, options)
    return _assemble_report(agents, part, grid, seed, mode_label, trace)


def centralized_benchmark(case: NetworkCase, grid: TimeGrid, demand: np.ndarray,
                          curves: Mapping[int, MaintenanceCostCurve],
                          penalties: PenaltyConfig, options: AlgorithmOptions,
                          seed: int = 0) -> RunReport:
    """The same algorithm over the trivial one-region partition."""
    part = single_region_partition(case)
    return run_algorithm(part, grid, demand, curves, penalties, options,
                         seed=seed, mode_label="centralized")


def _assemble_report(agents, part, grid, seed, mode_label, trace: Trace) -> RunReport:
    phase_names = [PHASE_FMRC, PHASE_FMBC, PHASE_BMBC]
    phases = []
    for name in phase_names:
        merged = PhaseStats(name=name)
        for a in agents:
            for p in a.phases:
                if p.name == name:
                    merged.rounds = max(merged.rounds, p.rounds)
                    merged.wall_time = max(merged.wall_time, p.wall_time)
                    merged.inner_iterations += p.inner_iterations
                    merged.warnings += [f"region {a.region}: {w}" for w in p.warnings]
        merged.converged = all(
            any(p.name == name and p.converged for p in a.phases) for a in agents)
        phases.append(merged)

    by_round: dict[tuple, list[dict]] = {}
    for a in agents:
        for rec in a.rounds:
            by_round.setdefault((rec["phase"], rec["round"]), []).append(rec)
    rounds = []
    for (phase, k) in sorted(by_round, key=lambda p: (phase_names.index(p[0]), p[1])):
        recs = by_round[(phase, k)]
        rounds.append(RoundMetrics(
            phase=phase, round=k,
            primal_residual=max(r["primal"] for r in recs),
            dual_residual=max(r["dual"] for r in recs),
            exact_cost=sum(r["exact"] for r in recs),
            messages=sum(r["messages"] for r in recs)))

    gen_ids = tuple(sorted(g.id for g in part.case.generators))
    g_index = {g: i for i, g in enumerate(gen_ids)}
    x = np.zeros((len(gen_ids), grid.num_steps))
    y = np.zeros((len(gen_ids), grid.num_steps))
    z = np.zeros((len(gen_ids), grid.num_epochs))
    ops = cbm = dc = pen_exact = pwl = residual = 0.0
    for a in agents:
        for sl in a.slices:
            cols = list(sl.steps)
            for i, g in enumerate(sl.gens):
                x[g_index[g]][cols] = sl.x[i]
                y[g_index[g]][cols] = sl.y[i]
                z[g_index[g]][sl.epoch - 1] = sl.z[i]
            ops += sl.parts.operations
            cbm += sl.parts.maintenance
            dc += sl.parts.curtailment
            pwl += sl.parts.pwl_bound
            pen_exact += exact_penalty(sl, a.solve_consensus, a.problem.penalties)
            residual = max(residual, balance_residual(sl, a.problem))

    counts: dict[str, int] = {}
    for msg in trace.messages():
        counts[msg.kind] = counts.get(msg.kind, 0) + 1

    ub = next((a.sg.upper_bound for a in agents if a.sg.upper_bound is not None), None)
    return RunReport(
        mode=mode_label, seed=seed, converged=all(p.converged for p in phases),
        phases=phases, rounds=rounds, operations=ops, maintenance=cbm,
        curtailment=dc, penalty_exact=pen_exact, pwl_bound=pwl, upper_bound=ub,
        message_counts=counts, message_bytes=trace.total_bytes(),
        gen_ids=gen_ids, num_steps=grid.num_steps, num_epochs=grid.num_epochs,
        x=x, y=y, z=z, balance_residual=residual)
