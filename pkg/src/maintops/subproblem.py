"""Regional per-epoch mixed-integer models.

Each maintenance epoch of each region becomes an independent model over
the epoch's operational steps: commitment/dispatch/start-stop columns
per generator, one maintenance column per generator, phase angles for
every visible bus, tie-line flows, curtailment slack, and a regional
production column.  Coupling to the rest of the network enters through
consensus targets with multiplier terms and quadratic penalties; the
quadratics are encoded as convex piecewise-linear epigraphs over a trust
interval centered on the consensus value.

Ramp and start-stop continuity is never enforced across epoch
boundaries, which keeps the per-epoch constraint sets disjoint; only the
first epoch sees the units' initial status.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .case import NetworkCase, RegionView, TimeGrid
from .consensus import ConsensusState
from .degradation import MaintenanceCostCurve
from .milp import EQ, GE, LE, LinearModel, SolveResult, SolveStatus


class BuildError(ValueError):
    """Model cannot be assembled: missing data or infeasible bounds."""


class ExtractionError(ValueError):
    """Solver output cannot be mapped back onto the model columns."""


class ModelMode(enum.Enum):
    """Commitment/maintenance variable treatment.

    FMRC: maintenance fixed, commitment relaxed to [0, 1] (pure LP).
    FMBC: maintenance fixed, commitment binary.
    BMBC: maintenance binary and free, commitment binary.
    """

    FMRC = "fmrc"
    FMBC = "fmbc"
    BMBC = "bmbc"


@dataclass(frozen=True)
class PenaltyConfig:
    rho_theta: float = 200.0
    rho_flow: float = 1.0
    rho_production: float = 1.0
    curtail_cost: float = 1e4
    pwl_segments: int = 8
    trust_theta: float = 0.5
    trust_flow_frac: float = 0.5
    trust_production_frac: float = 0.1
    abs_deviation_mode: bool = False


def quadratic_chords(rho: float, lo: float, hi: float, segments: int):
    """Chord rows under-approximating f(d) = rho/2 * d^2 on [lo, hi].

    Returns (slope, intercept) pairs; an epigraph column e satisfies
    e >= slope * d + intercept for each pair.  With rho = 0 no rows are
    needed.
    """
    if lo >= hi:
        raise BuildError(f"empty chord interval [{lo}, {hi}]")
    if segments < 1:
        raise BuildError("need at least one segment")
    if rho < 0:
        raise BuildError("penalty coefficient must be >= 0")
    if rho == 0.0:
        return []
    pts = np.linspace(lo, hi, segments + 1)
    f = 0.5 * rho * pts ** 2
    slopes = (f[1:] - f[:-1]) / (pts[1:] - pts[:-1])
    intercepts = f[:-1] - slopes * pts[:-1]
    return list(zip(slopes.tolist(), intercepts.tolist()))


def pwl_error_bound(rho: float, lo: float, hi: float, segments: int) -> float:
    """Largest gap between the chord interpolant and the quadratic on [lo, hi]."""
    if rho == 0.0:
        return 0.0
    h = (hi - lo) / segments
    return 0.5 * rho * h * h / 4.0


@dataclass(frozen=True)
class RegionProblem:
    """Static inputs for one region's models."""

    view: RegionView
    case: NetworkCase
    grid: TimeGrid
    demand: np.ndarray                       # (num case buses, T)
    curves: Mapping[int, MaintenanceCostCurve]
    penalties: PenaltyConfig

    def __post_init__(self):
        order = {b.id: i for i, b in enumerate(self.case.buses)}
        object.__setattr__(self, "_bus_order", order)
        gens = {g.id: g for g in self.case.generators}
        object.__setattr__(self, "_gens", gens)
        expected = (self.demand.shape == (len(self.case.buses), self.grid.num_steps))
        if not expected:
            raise BuildError(
                f"demand shaped {self.demand.shape}, expected "
                f"({len(self.case.buses)}, {self.grid.num_steps})")
        for g in self.view.generators:
            if g not in self.curves:
                raise BuildError(f"generator {g} has no maintenance cost curve")
            if len(self.curves[g]) != self.grid.num_epochs:
                raise BuildError(f"curve for generator {g} does not span every epoch")

    def demand_at(self, bus: int, t: int) -> float:
        return float(self.demand[self._bus_order[bus], t])

    def generator(self, gen_id: int):
        return self._gens[gen_id]

    @property
    def capacity(self) -> float:
        return sum(self._gens[g].p_max for g in self.view.generators)


@dataclass
class RegionModel:
    """A built model plus the column maps needed to read a solution back."""

    region: int
    epochs: tuple[int, ...]
    steps: tuple[int, ...]               # global step indices covered
    model: LinearModel
    gens: tuple[int, ...]
    visible_buses: tuple[int, ...]
    owned_buses: tuple[int, ...]
    tie_lines: tuple[int, ...]
    x_col: dict = field(default_factory=dict)       # (gen, t) -> col
    y_col: dict = field(default_factory=dict)
    pu_col: dict = field(default_factory=dict)
    pd_col: dict = field(default_factory=dict)
    z_col: dict = field(default_factory=dict)       # (gen, epoch) -> col
    theta_col: dict = field(default_factory=dict)   # (bus, t) -> col
    flow_col: dict = field(default_factory=dict)    # (line, t) -> col
    psi_col: dict = field(default_factory=dict)     # (bus, t) -> col
    p_col: dict = field(default_factory=dict)       # t -> col
    pwl_bound: float = 0.0
    alpha_const: float = 0.0


def _trust_interval(center: float, half_width: float,
                    hard_lo: float = -math.inf, hard_hi: float = math.inf,
                    include_zero: bool = False) -> tuple[float, float]:
    lo = max(center - half_width, hard_lo)
    hi = min(center + half_width, hard_hi)
    if include_zero:
        lo = min(lo, 0.0)
        hi = max(hi, 0.0)
    if lo > hi:
        raise BuildError(f"empty trust interval [{lo}, {hi}] around {center}")
    return lo, hi


def encode_deviation_penalty(rm: RegionModel, pen: PenaltyConfig, col: int,
                           tag: str, multiplier: float, rho: float,
                           center: float, lo: float, hi: float) -> None:
    """Objective terms for one penalized quantity.

    Multiplier part: either the signed form ``multiplier * (q - center)``
    or, in absolute-deviation mode, ``multiplier * (s+ + s-)`` with a
    split row.  Quadratic part: epigraph column with chord rows.
    """
    model = rm.model
    if pen.abs_deviation_mode:
        if multiplier != 0.0:
            span = max(abs(lo - center), abs(hi - center))
            sp = model.add_column(f"abp_{tag}", 0.0, span, multiplier)
            sm = model.add_column(f"abm_{tag}", 0.0, span, multiplier)
            model.add_row([(col, 1.0), (sp, -1.0), (sm, 1.0)], EQ, center,
                          name=f"abs_{tag}")
    else:
        if multiplier != 0.0:
            model.add_objective(col, multiplier)
            model.offset -= multiplier * center
    if hi - lo <= 1e-12:
        # fixed quantity: its quadratic penalty is a constant
        dev = lo - center
        model.offset += 0.5 * rho * dev * dev
        return
    if rho == 0.0:
        return
    # split the segments at zero deviation: the interpolant then has a kink
    # exactly at the consensus value, so agreement is a vertex the solver can
    # land on instead of a flat stretch it wanders across
    d_lo, d_hi = lo - center, hi - center
    k_total = max(2, pen.pwl_segments)
    chords = []
    bound = 0.0
    if d_lo < 0.0 < d_hi:
        k_neg = max(1, k_total // 2)
        k_pos = max(1, k_total - k_neg)
        chords += quadratic_chords(rho, d_lo, 0.0, k_neg)
        chords += quadratic_chords(rho, 0.0, d_hi, k_pos)
        bound = max(pwl_error_bound(rho, d_lo, 0.0, k_neg),
                    pwl_error_bound(rho, 0.0, d_hi, k_pos))
    else:
        chords += quadratic_chords(rho, d_lo, d_hi, k_total)
        bound = pwl_error_bound(rho, d_lo, d_hi, k_total)
    epi = model.add_column(f"q_{tag}", 0.0, math.inf, 1.0)
    for k, (slope, intercept) in enumerate(chords):
        model.add_row([(epi, 1.0), (col, -slope)], GE,
                      intercept - slope * center, name=f"pwl_{tag}_{k}")
    rm.pwl_bound += bound


def _add_epoch_block(rm: RegionModel, prob: RegionProblem, epoch: int,
                     consensus: ConsensusState, alpha: Mapping[int, float],
                     mode: ModelMode, fixed_z: Mapping[int, int] | None) -> None:
    view, case, grid, pen = prob.view, prob.case, prob.grid, prob.penalties
    model = rm.model
    steps = list(grid.epoch_steps(epoch))
    first = steps[0]
    owned = sorted(view.owned)
    visible = sorted(view.visible)
    coupled = view.coupled
    gens = [prob.generator(g) for g in sorted(view.generators)]
    num_epochs = grid.num_epochs

    if mode in (ModelMode.FMRC, ModelMode.FMBC):
        if fixed_z is None:
            raise BuildError("fixed-maintenance modes need a maintenance assignment")
        for g in gens:
            if g.id not in fixed_z:
                raise BuildError(f"generator {g.id} missing from the maintenance assignment")

    lines_by_index = {ln.index: ln for ln in case.lines}
    tie_set = set(view.tie_lines)
    incident = [ln for ln in case.lines
                if (ln.from_bus in view.owned or ln.to_bus in view.owned)]
    internal_lines = [ln for ln in incident if ln.index not in tie_set]

    # generator columns
    for g in gens:
        z_fixed = None
        if fixed_z is not None:
            z_fixed = 1.0 if fixed_z[g.id] == epoch else 0.0
        zc = model.add_column(f"z_g{g.id}_m{epoch}",
                              z_fixed if z_fixed is not None else 0.0,
                              z_fixed if z_fixed is not None else 1.0,
                              objective=prob.curves[g.id].value(epoch) - alpha.get(g.id, 0.0),
                              integer=mode is ModelMode.BMBC)
        rm.z_col[(g.id, epoch)] = zc
        model.offset += alpha.get(g.id, 0.0) / num_epochs
        rm.alpha_const += alpha.get(g.id, 0.0) / num_epochs
        for t in steps:
            x_int = mode is not ModelMode.FMRC
            x_lo, x_hi = 0.0, 1.0
            if epoch == 1:
                x_lo, x_hi = _initial_forcing(g, t - first, x_lo, x_hi)
            if z_fixed == 1.0 and x_lo > 0.0:
                raise BuildError(
                    f"generator {g.id}: epoch-1 maintenance conflicts with its on-going "
                    f"minimum-up window")
            rm.x_col[(g.id, t)] = model.add_column(
                f"x_g{g.id}_t{t}", x_lo, x_hi, objective=g.commit_cost, integer=x_int)
            rm.y_col[(g.id, t)] = model.add_column(
                f"y_g{g.id}_t{t}", 0.0, g.p_max, objective=g.dispatch_cost)
            rm.pu_col[(g.id, t)] = model.add_column(
                f"pu_g{g.id}_t{t}", 0.0, 1.0, objective=g.startup_cost)
            rm.pd_col[(g.id, t)] = model.add_column(
                f"pd_g{g.id}_t{t}", 0.0, 1.0, objective=g.shutdown_cost)

    # bus angles; consensus-coupled buses live in a trust interval
    pin_reference = not coupled
    for b in visible:
        for t in steps:
            if b in coupled:
                row = consensus.bus_row(b)
                lo, hi = _trust_interval(float(consensus.theta_bar[row, t]),
                                         pen.trust_theta)
            elif pin_reference and b == min(owned):
                lo = hi = 0.0
            else:
                lo, hi = -math.inf, math.inf
            rm.theta_col[(b, t)] = model.add_column(f"th_b{b}_t{t}", lo, hi)

    # tie-line flows within trust and capacity
    for l in sorted(view.tie_lines):
        ln = lines_by_index[l]
        w = pen.trust_flow_frac * ln.capacity
        for t in steps:
            fbar = float(consensus.flow_bar[consensus.tie_row(l), t])
            fbar = min(max(fbar, -ln.capacity), ln.capacity)
            lo, hi = _trust_interval(fbar, w, -ln.capacity, ln.capacity)
            rm.flow_col[(l, t)] = model.add_column(f"f_l{l}_t{t}", lo, hi)

    # curtailment slack, up to the bus demand
    for u in owned:
        for t in steps:
            rm.psi_col[(u, t)] = model.add_column(
                f"dc_b{u}_t{t}", 0.0, prob.demand_at(u, t), objective=pen.curtail_cost)

    # regional production column: its true range [0, capacity] is implied by
    # the linking row, so tighter bounds would only manufacture infeasibility
    cap = prob.capacity
    for t in steps:
        rm.p_col[t] = model.add_column(f"p_t{t}", 0.0, cap)

    # objective: consensus deviation penalties
    for b in sorted(coupled):
        row = consensus.bus_row(b)
        for t in steps:
            center = float(consensus.theta_bar[row, t])
            encode_deviation_penalty(
                rm, pen, rm.theta_col[(b, t)], f"th_b{b}_t{t}",
                float(consensus.lam[row, t]), pen.rho_theta, center,
                center - pen.trust_theta, center + pen.trust_theta)
    for l in sorted(view.tie_lines):
        ln = lines_by_index[l]
        for t in steps:
            center = float(consensus.flow_bar[consensus.tie_row(l), t])
            lo = float(model.lower[rm.flow_col[(l, t)]])
            hi = float(model.upper[rm.flow_col[(l, t)]])
            encode_deviation_penalty(
                rm, pen, rm.flow_col[(l, t)], f"f_l{l}_t{t}",
                float(consensus.phi[consensus.tie_row(l), t]), pen.rho_flow,
                center, lo, hi)
    # the production chord span covers the reachable range so the quadratic
    # stays under-approximated everywhere, with at least the trust width
    w_p = pen.trust_production_frac * cap
    for t in steps:
        center = float(consensus.p_bar[t])
        lo = min(0.0, center - w_p)
        hi = max(cap, center + w_p)
        encode_deviation_penalty(rm, pen, rm.p_col[t], f"p_t{t}",
                                 float(consensus.eta[t]), pen.rho_production,
                                 center, lo, hi)

    # coupling, capacity and continuity rows
    for g in gens:
        zc = rm.z_col[(g.id, epoch)]
        for t in steps:
            x, y = rm.x_col[(g.id, t)], rm.y_col[(g.id, t)]
            model.add_row([(x, 1.0), (zc, 1.0)], LE, 1.0, name=f"mtc_g{g.id}_t{t}")
            model.add_row([(y, 1.0), (x, -g.p_min)], GE, 0.0, name=f"pmin_g{g.id}_t{t}")
            model.add_row([(y, 1.0), (x, -g.p_max)], LE, 0.0, name=f"pmax_g{g.id}_t{t}")
            if t > first:
                xp = rm.x_col[(g.id, t - 1)]
                model.add_row([(x, 1.0), (xp, -1.0), (rm.pu_col[(g.id, t)], -1.0)],
                              LE, 0.0, name=f"up_g{g.id}_t{t}")
                model.add_row([(xp, 1.0), (x, -1.0), (rm.pd_col[(g.id, t)], -1.0)],
                              LE, 0.0, name=f"dn_g{g.id}_t{t}")
                yp = rm.y_col[(g.id, t - 1)]
                model.add_row([(y, 1.0), (yp, -1.0)], LE, g.ramp, name=f"rup_g{g.id}_t{t}")
                model.add_row([(yp, 1.0), (y, -1.0)], LE, g.ramp, name=f"rdn_g{g.id}_t{t}")
            elif epoch == 1:
                x0 = 1.0 if g.init_status > 0 else 0.0
                model.add_row([(x, 1.0), (rm.pu_col[(g.id, t)], -1.0)], LE, x0,
                              name=f"up_g{g.id}_t{t}")
                model.add_row([(x, -1.0), (rm.pd_col[(g.id, t)], -1.0)], LE, -x0,
                              name=f"dn_g{g.id}_t{t}")
            # minimum up/down windows, truncated to this epoch
            up_win = [i for i in range(t - g.min_up + 1, t + 1) if i >= first]
            dn_win = [i for i in range(t - g.min_down + 1, t + 1) if i >= first]
            if g.min_up > 1:
                model.add_row([(rm.pu_col[(g.id, i)], 1.0) for i in up_win] + [(x, -1.0)],
                              LE, 0.0, name=f"mup_g{g.id}_t{t}")
            if g.min_down > 1:
                model.add_row([(x, 1.0)] + [(rm.pd_col[(g.id, i)], 1.0) for i in dn_win],
                              LE, 1.0, name=f"mdn_g{g.id}_t{t}")

    for l in sorted(view.tie_lines):
        ln = lines_by_index[l]
        u, v = ln.from_bus, ln.to_bus
        for t in steps:
            model.add_row([(rm.theta_col[(u, t)], ln.susceptance),
                           (rm.theta_col[(v, t)], -ln.susceptance),
                           (rm.flow_col[(l, t)], -1.0)], EQ, 0.0,
                          name=f"tie_l{l}_t{t}")

    for ln in internal_lines:
        u, v = ln.from_bus, ln.to_bus
        for t in steps:
            pair = [(rm.theta_col[(u, t)], ln.susceptance),
                    (rm.theta_col[(v, t)], -ln.susceptance)]
            model.add_row(pair, LE, ln.capacity, name=f"cap_l{ln.index}_t{t}")
            model.add_row(pair, GE, -ln.capacity, name=f"capn_l{ln.index}_t{t}")

    gens_at: dict[int, list[int]] = {}
    for g in gens:
        gens_at.setdefault(g.bus, []).append(g.id)
    adjacency: dict[int, list] = {u: [] for u in owned}
    for ln in incident:
        if ln.from_bus in adjacency:
            adjacency[ln.from_bus].append((ln.to_bus, ln.susceptance))
        if ln.to_bus in adjacency:
            adjacency[ln.to_bus].append((ln.from_bus, ln.susceptance))
    for u in owned:
        for t in steps:
            coeffs: dict[int, float] = {}
            for gid in gens_at.get(u, []):
                coeffs[rm.y_col[(gid, t)]] = coeffs.get(rm.y_col[(gid, t)], 0.0) + 1.0
            coeffs[rm.psi_col[(u, t)]] = coeffs.get(rm.psi_col[(u, t)], 0.0) + 1.0
            for v, gamma in adjacency[u]:
                cu = rm.theta_col[(u, t)]
                cv = rm.theta_col[(v, t)]
                coeffs[cu] = coeffs.get(cu, 0.0) - gamma
                coeffs[cv] = coeffs.get(cv, 0.0) + gamma
            model.add_row(sorted(coeffs.items()), EQ, prob.demand_at(u, t),
                          name=f"bal_b{u}_t{t}")

    for t in steps:
        coeffs = [(rm.p_col[t], 1.0)] + [(rm.y_col[(g.id, t)], -1.0) for g in gens]
        model.add_row(coeffs, EQ, 0.0, name=f"plink_t{t}")


def _initial_forcing(g, offset: int, lo: float, hi: float) -> tuple[float, float]:
    """Bound forcing from partial minimum-up/down history before the horizon."""
    if g.init_status > 0 and g.init_status < g.min_up:
        if offset < g.min_up - g.init_status:
            lo = 1.0
    elif g.init_status < 0 and -g.init_status < g.min_down:
        if offset < g.min_down + g.init_status:
            hi = 0.0
    return lo, hi


def build_epoch_model(prob: RegionProblem, epoch: int, consensus: ConsensusState,
                      alpha: Mapping[int, float], mode: ModelMode,
                      fixed_z: Mapping[int, int] | None = None) -> RegionModel:
    """One region's model for one maintenance epoch."""
    view = prob.view
    rm = RegionModel(
        region=view.region, epochs=(epoch,),
        steps=tuple(prob.grid.epoch_steps(epoch)), model=LinearModel(),
        gens=tuple(sorted(view.generators)),
        visible_buses=tuple(sorted(view.visible)),
        owned_buses=tuple(sorted(view.owned)),
        tie_lines=tuple(sorted(view.tie_lines)))
    _add_epoch_block(rm, prob, epoch, consensus, alpha, mode, fixed_z)
    rm.model.validate()
    return rm


def build_monolithic_model(prob: RegionProblem, consensus: ConsensusState,
                           mode: ModelMode, fixed_z: Mapping[int, int] | None = None,
                           cardinality: bool = True) -> RegionModel:
    """All epochs of one region in a single model.

    With ``cardinality`` each generator is maintained exactly once across
    the horizon.  No dual adjustment enters here; this is the reference
    form the per-epoch decomposition relaxes.
    """
    view = prob.view
    rm = RegionModel(
        region=view.region, epochs=tuple(range(1, prob.grid.num_epochs + 1)),
        steps=tuple(range(prob.grid.num_steps)), model=LinearModel(),
        gens=tuple(sorted(view.generators)),
        visible_buses=tuple(sorted(view.visible)),
        owned_buses=tuple(sorted(view.owned)),
        tie_lines=tuple(sorted(view.tie_lines)))
    for epoch in rm.epochs:
        _add_epoch_block(rm, prob, epoch, consensus, {}, mode, fixed_z)
    if cardinality:
        for g in rm.gens:
            coeffs = [(rm.z_col[(g, m)], 1.0) for m in rm.epochs]
            rm.model.add_row(coeffs, EQ, 1.0, name=f"card_g{g}")
    rm.model.validate()
    return rm


@dataclass
class CostParts:
    operations: float = 0.0
    maintenance: float = 0.0
    curtailment: float = 0.0
    penalty_model: float = 0.0
    alpha_term: float = 0.0
    objective: float = 0.0
    pwl_bound: float = 0.0

    @property
    def gross(self) -> float:
        return self.operations + self.maintenance + self.curtailment


@dataclass
class EpochSlice:
    """Decision values of one epoch model, mapped back to named indices."""

    region: int
    epoch: int
    steps: tuple[int, ...]
    gens: tuple[int, ...]
    visible_buses: tuple[int, ...]
    owned_buses: tuple[int, ...]
    tie_lines: tuple[int, ...]
    x: np.ndarray            # (gens, steps)
    y: np.ndarray
    pi_up: np.ndarray
    pi_dn: np.ndarray
    z: np.ndarray            # (gens,)
    theta: np.ndarray        # (visible buses, steps)
    flow: np.ndarray         # (tie lines, steps)
    psi: np.ndarray          # (owned buses, steps)
    p: np.ndarray            # (steps,)
    parts: CostParts


def extract_solution(rm: RegionModel, result: SolveResult,
                     prob: RegionProblem, int_tol: float = 1e-6) -> EpochSlice:
    """Map a solver result back onto one epoch's named quantities."""
    if len(rm.epochs) != 1:
        raise ExtractionError("extract_solution expects a single-epoch model")
    if result.x is None or result.status not in (SolveStatus.OPTIMAL,
                                                 SolveStatus.NODE_LIMIT):
        raise ExtractionError(f"no usable solution (status {result.status.value})")
    if result.x.shape[0] != rm.model.num_cols:
        raise ExtractionError("solution length does not match the model columns")

    epoch = rm.epochs[0]
    x = result.x
    for j in range(rm.model.num_cols):
        if rm.model.integer[j]:
            if abs(x[j] - round(x[j])) > int_tol:
                raise ExtractionError(
                    f"column {rm.model.col_names[j]} = {x[j]} is not integral")

    def grab(colmap, rows, steps):
        out = np.zeros((len(rows), len(steps)))
        for i, r in enumerate(rows):
            for k, t in enumerate(steps):
                v = x[colmap[(r, t)]]
                out[i, k] = v
        return out

    steps = rm.steps
    xs = grab(rm.x_col, rm.gens, steps)
    if any(rm.model.integer[c] for c in rm.x_col.values()):
        xs = np.round(xs)
    ys = grab(rm.y_col, rm.gens, steps)
    pus = grab(rm.pu_col, rm.gens, steps)
    pds = grab(rm.pd_col, rm.gens, steps)
    zs = np.array([x[rm.z_col[(g, epoch)]] for g in rm.gens])
    zs = np.round(zs)
    thetas = grab(rm.theta_col, rm.visible_buses, steps)
    flows = grab(rm.flow_col, rm.tie_lines, steps)
    psis = grab(rm.psi_col, rm.owned_buses, steps)
    ps = np.array([x[rm.p_col[t]] for t in steps])

    parts = CostParts(objective=result.objective, pwl_bound=rm.pwl_bound)
    for i, g in enumerate(rm.gens):
        gen = prob.generator(g)
        parts.operations += float(gen.commit_cost * xs[i].sum()
                                  + gen.dispatch_cost * ys[i].sum()
                                  + gen.startup_cost * pus[i].sum()
                                  + gen.shutdown_cost * pds[i].sum())
        parts.maintenance += float(prob.curves[g].value(epoch) * zs[i])
        alpha_gross = rm.model.obj[rm.z_col[(g, epoch)]] - (
            prob.curves[g].value(epoch))
        parts.alpha_term += float(alpha_gross * zs[i])
    parts.alpha_term += rm.alpha_const
    parts.curtailment = float(prob.penalties.curtail_cost * psis.sum())
    parts.penalty_model = (parts.objective - parts.operations - parts.maintenance
                           - parts.curtailment - parts.alpha_term)
    return EpochSlice(
        region=rm.region, epoch=epoch, steps=tuple(steps), gens=rm.gens,
        visible_buses=rm.visible_buses, owned_buses=rm.owned_buses,
        tie_lines=rm.tie_lines, x=xs, y=ys, pi_up=pus, pi_dn=pds, z=zs,
        theta=thetas, flow=flows, psi=psis, p=ps, parts=parts)


def balance_residual(sl: EpochSlice, prob: RegionProblem) -> float:
    """Largest nodal-balance violation of a slice over owned buses and steps."""
    case = prob.case
    gens_at: dict[int, list[int]] = {}
    for g in sl.gens:
        gens_at.setdefault(prob.generator(g).bus, []).append(g)
    vis = {b: i for i, b in enumerate(sl.visible_buses)}
    worst = 0.0
    for i, u in enumerate(sl.owned_buses):
        for k, t in enumerate(sl.steps):
            gen_sum = sum(sl.y[sl.gens.index(g), k] for g in gens_at.get(u, []))
            flow = 0.0
            for ln in case.lines:
                if ln.from_bus == u and ln.to_bus in vis:
                    flow += ln.susceptance * (sl.theta[vis[u], k]
                                              - sl.theta[vis[ln.to_bus], k])
                elif ln.to_bus == u and ln.from_bus in vis:
                    flow += ln.susceptance * (sl.theta[vis[u], k]
                                              - sl.theta[vis[ln.from_bus], k])
            residual = gen_sum - prob.demand_at(u, t) + sl.psi[i, k] - flow
            worst = max(worst, abs(residual))
    return worst


def exact_penalty(sl: EpochSlice, consensus: ConsensusState,
                  pen: PenaltyConfig) -> float:
    """Exact consensus penalty of a slice: multiplier terms plus true quadratics."""
    total = 0.0
    for i, b in enumerate(sl.visible_buses):
        if not consensus.tracks(b):
            continue
        row = consensus.bus_row(b)
        for k, t in enumerate(sl.steps):
            dev = sl.theta[i, k] - consensus.theta_bar[row, t]
            lam = consensus.lam[row, t]
            mult = lam * abs(dev) if pen.abs_deviation_mode else lam * dev
            total += mult + 0.5 * pen.rho_theta * dev * dev
    for i, l in enumerate(sl.tie_lines):
        row = consensus.tie_row(l)
        for k, t in enumerate(sl.steps):
            dev = sl.flow[i, k] - consensus.flow_bar[row, t]
            phi = consensus.phi[row, t]
            mult = phi * abs(dev) if pen.abs_deviation_mode else phi * dev
            total += mult + 0.5 * pen.rho_flow * dev * dev
    for k, t in enumerate(sl.steps):
        dev = sl.p[k] - consensus.p_bar[t]
        eta = consensus.eta[t]
        mult = eta * abs(dev) if pen.abs_deviation_mode else eta * dev
        total += mult + 0.5 * pen.rho_production * dev * dev
    return total


def exact_objective(slices, consensus: ConsensusState, pen: PenaltyConfig) -> float:
    """Full-horizon exact objective of stitched slices: gross cost plus penalties."""
    total = 0.0
    for sl in slices:
        total += sl.parts.gross + exact_penalty(sl, consensus, pen)
    return total
