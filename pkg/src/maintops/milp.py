"""Self-contained LP and mixed-integer solver.

LPs are solved with a bounded-variable revised primal simplex: phase 1
drives artificial columns out of an always-feasible start, phase 2
optimizes the true objective.  Dantzig pricing switches to Bland's rule
after a run of degenerate pivots; the basis inverse is refactorized
periodically.  MILPs run best-bound branch and bound over the integer
columns, branching on the most fractional one and warm-starting child
nodes from the parent basis.

Everything is deterministic: identical model bytes produce identical
results regardless of how many solves run concurrently elsewhere.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

_PIVOT_EPS = 1e-10
_RATIO_TIE = 1e-12


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NODE_LIMIT = "node_limit"


class ModelError(ValueError):
    """Ill-formed model: NaN coefficients, inverted bounds, non-finite rhs."""


LE, EQ, GE = "<=", "==", ">="
_SENSES = (LE, EQ, GE)


@dataclass
class Tolerances:
    feasibility: float = 1e-7
    optimality: float = 1e-7
    integrality: float = 1e-6
    gap: float = 1e-6
    max_iterations: int = 50_000
    degeneracy_threshold: int = 200
    refactor_every: int = 64


@dataclass
class Limits:
    max_nodes: int = 100_000


class LinearModel:
    """Sparse-rows minimization model with bounded columns."""

    def __init__(self):
        self.obj: list[float] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.integer: list[bool] = []
        self.col_names: list[str] = []
        self.rows: list[list[tuple[int, float]]] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []
        self.offset: float = 0.0

    @property
    def num_cols(self) -> int:
        return len(self.obj)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def add_column(self, name: str | None = None, lower: float = 0.0,
                   upper: float = math.inf, objective: float = 0.0,
                   integer: bool = False) -> int:
        j = self.num_cols
        self.obj.append(float(objective))
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.integer.append(bool(integer))
        self.col_names.append(name if name is not None else f"c{j}")
        return j

    def add_row(self, coeffs, sense: str, rhs: float, name: str | None = None) -> int:
        if sense not in _SENSES:
            raise ModelError(f"unknown row sense {sense!r}")
        if isinstance(coeffs, dict):
            coeffs = sorted(coeffs.items())
        terms: dict[int, float] = {}
        for j, v in coeffs:
            if not 0 <= j < self.num_cols:
                raise ModelError(f"row references unknown column {j}")
            terms[j] = terms.get(j, 0.0) + float(v)
        i = self.num_rows
        self.rows.append(sorted(terms.items()))
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.row_names.append(name if name is not None else f"r{i}")
        return i

    def add_objective(self, col: int, coeff: float) -> None:
        self.obj[col] += float(coeff)

    def fix_column(self, col: int, value: float) -> None:
        self.lower[col] = float(value)
        self.upper[col] = float(value)

    def validate(self) -> None:
        for j in range(self.num_cols):
            if math.isnan(self.obj[j]):
                raise ModelError(f"NaN objective on column {self.col_names[j]}")
            if math.isnan(self.lower[j]) or math.isnan(self.upper[j]):
                raise ModelError(f"NaN bound on column {self.col_names[j]}")
            if self.lower[j] > self.upper[j]:
                raise ModelError(
                    f"column {self.col_names[j]}: lower {self.lower[j]} > upper {self.upper[j]}")
        for i, row in enumerate(self.rows):
            if not math.isfinite(self.rhs[i]):
                raise ModelError(f"row {self.row_names[i]}: non-finite rhs")
            for _, v in row:
                if not math.isfinite(v):
                    raise ModelError(f"row {self.row_names[i]}: non-finite coefficient")

    def dense(self) -> np.ndarray:
        a = np.zeros((self.num_rows, self.num_cols))
        for i, row in enumerate(self.rows):
            for j, v in row:
                a[i, j] = v
        return a

    def copy(self) -> "LinearModel":
        m = LinearModel()
        m.obj = list(self.obj)
        m.lower = list(self.lower)
        m.upper = list(self.upper)
        m.integer = list(self.integer)
        m.col_names = list(self.col_names)
        m.rows = [list(r) for r in self.rows]
        m.senses = list(self.senses)
        m.rhs = list(self.rhs)
        m.row_names = list(self.row_names)
        m.offset = self.offset
        return m


@dataclass
class Basis:
    """Restart point: basic column set plus nonbasic bound statuses."""

    basic: np.ndarray          # row -> column index
    at_upper: np.ndarray       # per column, nonbasic-at-upper flag


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float
    x: np.ndarray | None
    iterations: int = 0
    nodes: int = 0
    basis: Basis | None = None

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


# column states inside the simplex
_BASIC, _AT_LOWER, _AT_UPPER, _NB_FREE = 0, 1, 2, 3


class _Simplex:
    """Bounded-variable primal simplex over [A | I] with artificial phase 1."""

    def __init__(self, model: LinearModel, tol: Tolerances):
        self.tol = tol
        m, n = model.num_rows, model.num_cols
        self.m, self.n = m, n
        self.A = np.zeros((m, n + m))
        for i, row in enumerate(model.rows):
            for j, v in row:
                self.A[i, j] = v
            self.A[i, n + i] = 1.0
        self.b = np.asarray(model.rhs, dtype=float)
        self.lower = np.empty(n + m)
        self.upper = np.empty(n + m)
        self.lower[:n] = model.lower
        self.upper[:n] = model.upper
        for i, sense in enumerate(model.senses):
            if sense == LE:
                self.lower[n + i], self.upper[n + i] = 0.0, math.inf
            elif sense == GE:
                self.lower[n + i], self.upper[n + i] = -math.inf, 0.0
            else:
                self.lower[n + i], self.upper[n + i] = 0.0, 0.0
        self.c = np.zeros(n + m)
        self.c[:n] = model.obj
        self.iterations = 0
        self.art_cols: list[int] = []

    # -- helpers ---------------------------------------------------------

    def _nb_value(self, j: int, state: int) -> float:
        if state == _AT_LOWER:
            return self.lower[j]
        if state == _AT_UPPER:
            return self.upper[j]
        return 0.0

    def _default_state(self, j: int) -> int:
        lo, hi = self.lower[j], self.upper[j]
        if math.isfinite(lo) and math.isfinite(hi):
            return _AT_LOWER if abs(lo) <= abs(hi) else _AT_UPPER
        if math.isfinite(lo):
            return _AT_LOWER
        if math.isfinite(hi):
            return _AT_UPPER
        return _NB_FREE

    def _recompute_basics(self) -> None:
        rhs = self.b.copy()
        nonbasic = np.nonzero(self.state != _BASIC)[0]
        vN = self.vals[nonbasic]
        live = vN != 0.0
        if np.any(live):
            rhs = rhs - self.A[:, nonbasic[live]] @ vN[live]
        self.vals[self.basic] = self.Binv @ rhs

    def _refactor(self) -> bool:
        try:
            self.Binv = np.linalg.inv(self.A[:, self.basic])
        except np.linalg.LinAlgError:
            return False
        self._recompute_basics()
        return True

    # -- start points ----------------------------------------------------

    def cold_start(self) -> None:
        total = self.A.shape[1]
        self.state = np.full(total, _AT_LOWER, dtype=np.int8)
        self.vals = np.zeros(total)
        for j in range(self.n):
            self.state[j] = self._default_state(j)
            self.vals[j] = self._nb_value(j, self.state[j])
        r = self.b - self.A[:, : self.n] @ self.vals[: self.n]
        self.art_cols = []
        basic = np.empty(self.m, dtype=int)
        pending: list[tuple[int, float, float]] = []  # (row, sign, magnitude)
        for i in range(self.m):
            aux = self.n + i
            lo, hi = self.lower[aux], self.upper[aux]
            if lo - self.tol.feasibility <= r[i] <= hi + self.tol.feasibility:
                self.vals[aux] = r[i]
                self.state[aux] = _BASIC
                basic[i] = aux
            else:
                snapped = min(max(r[i], lo), hi)
                self.vals[aux] = snapped
                self.state[aux] = _AT_LOWER if snapped == lo else _AT_UPPER
                gap = r[i] - snapped
                pending.append((i, math.copysign(1.0, gap), abs(gap)))
                basic[i] = -1
        if pending:
            add = np.zeros((self.m, len(pending)))
            base = self.A.shape[1]
            for k, (i, sign, mag) in enumerate(pending):
                add[i, k] = sign
                basic[i] = base + k
                self.art_cols.append(base + k)
            self.A = np.hstack([self.A, add])
            self.lower = np.concatenate([self.lower, np.zeros(len(pending))])
            self.upper = np.concatenate([self.upper, np.full(len(pending), math.inf)])
            self.state = np.concatenate(
                [self.state, np.full(len(pending), _BASIC, dtype=np.int8)])
            self.vals = np.concatenate(
                [self.vals, np.array([mag for _, _, mag in pending])])
        self.basic = basic
        self.Binv = np.linalg.inv(self.A[:, self.basic])

    def warm_start(self, basis: Basis) -> bool:
        """Adopt a previous basis; report False when it is unusable."""
        total = self.n + self.m
        if basis.basic.shape != (self.m,) or basis.at_upper.shape[0] != total:
            return False
        if np.any(basis.basic < 0) or np.any(basis.basic >= total):
            return False
        if len(set(basis.basic.tolist())) != self.m:
            return False
        self.art_cols = []
        self.basic = basis.basic.copy()
        self.state = np.full(total, _AT_LOWER, dtype=np.int8)
        self.vals = np.zeros(total)
        in_basis = np.zeros(total, dtype=bool)
        in_basis[self.basic] = True
        for j in range(total):
            if in_basis[j]:
                self.state[j] = _BASIC
                continue
            st = _AT_UPPER if basis.at_upper[j] else _AT_LOWER
            if st == _AT_UPPER and not math.isfinite(self.upper[j]):
                st = self._default_state(j)
            elif st == _AT_LOWER and not math.isfinite(self.lower[j]):
                st = self._default_state(j)
            self.state[j] = st
            self.vals[j] = self._nb_value(j, st)
        if not self._refactor():
            return False
        xb = self.vals[self.basic]
        return bool(np.all(xb >= self.lower[self.basic] - self.tol.feasibility)
                    and np.all(xb <= self.upper[self.basic] + self.tol.feasibility))

    # -- core iteration --------------------------------------------------

    def optimize(self, phase1: bool) -> SolveStatus:
        tol = self.tol
        total = self.A.shape[1]
        cost = np.zeros(total)
        if phase1:
            cost[self.art_cols] = 1.0
        else:
            cost[: self.c.shape[0]] = self.c
        degenerate_run = 0
        bland = False
        since_refactor = 0
        movable = (self.upper - self.lower) > 0

        while True:
            if self.iterations >= tol.max_iterations:
                return SolveStatus.ITERATION_LIMIT
            y = cost[self.basic] @ self.Binv
            d = cost - y @ self.A
            eligible = (((self.state == _AT_LOWER) & movable & (d < -tol.optimality))
                        | ((self.state == _AT_UPPER) & movable & (d > tol.optimality))
                        | ((self.state == _NB_FREE) & (np.abs(d) > tol.optimality)))
            idx = np.nonzero(eligible)[0]
            if idx.size == 0:
                return SolveStatus.OPTIMAL
            if bland:
                q = int(idx[0])
            else:
                q = int(idx[np.argmax(np.abs(d[idx]))])
            sigma = 1.0 if (self.state[q] == _AT_LOWER
                            or (self.state[q] == _NB_FREE and d[q] < 0)) else -1.0

            w = self.Binv @ self.A[:, q]
            xb = self.vals[self.basic]
            rate = -sigma * w
            with np.errstate(invalid="ignore"):
                up_t = np.where(rate > _PIVOT_EPS,
                                np.maximum(self.upper[self.basic] - xb, 0.0)
                                / np.where(rate > _PIVOT_EPS, rate, 1.0),
                                math.inf)
                lo_t = np.where(rate < -_PIVOT_EPS,
                                np.maximum(xb - self.lower[self.basic], 0.0)
                                / np.where(rate < -_PIVOT_EPS, -rate, 1.0),
                                math.inf)
            t_basic = np.minimum(up_t, lo_t)
            t_block = float(np.min(t_basic)) if self.m else math.inf
            t_enter = (self.upper[q] - self.lower[q]
                       if self.state[q] != _NB_FREE else math.inf)
            step = min(t_block, t_enter)
            if math.isinf(step):
                return SolveStatus.UNBOUNDED

            self.iterations += 1
            degenerate_run = degenerate_run + 1 if step < 1e-9 else 0
            if degenerate_run > tol.degeneracy_threshold:
                bland = True
            elif degenerate_run == 0:
                bland = False

            if t_enter <= t_block + _RATIO_TIE:
                # entering column swings to its opposite bound
                self.vals[q] += sigma * step
                self.vals[self.basic] = xb - sigma * step * w
                self.state[q] = _AT_UPPER if self.state[q] == _AT_LOWER else _AT_LOWER
                continue

            # among blocking rows prefer the largest pivot magnitude
            ties = np.nonzero(t_basic <= t_block + _RATIO_TIE)[0]
            leave_r = int(ties[np.argmax(np.abs(w[ties]))])
            leaving = int(self.basic[leave_r])
            to_upper = rate[leave_r] > 0
            self.vals[q] += sigma * step
            self.vals[self.basic] = xb - sigma * step * w
            self.vals[leaving] = self.upper[leaving] if to_upper else self.lower[leaving]
            self.state[leaving] = _AT_UPPER if to_upper else _AT_LOWER
            self.state[q] = _BASIC
            self.basic[leave_r] = q
            piv = w[leave_r]
            row = self.Binv[leave_r] / piv
            self.Binv -= np.outer(w, row)
            self.Binv[leave_r] = row
            since_refactor += 1
            if since_refactor >= tol.refactor_every:
                since_refactor = 0
                if not self._refactor():
                    return SolveStatus.ITERATION_LIMIT

    def solve(self, basis: Basis | None = None) -> SolveStatus:
        warm_ok = basis is not None and self.warm_start(basis)
        if not warm_ok:
            self.cold_start()
            if self.art_cols:
                status = self.optimize(phase1=True)
                if status is SolveStatus.ITERATION_LIMIT:
                    return status
                infeas = float(np.sum(self.vals[self.art_cols]))
                scale = max(1.0, float(np.max(np.abs(self.b))) if self.m else 1.0)
                if infeas > self.tol.feasibility * scale:
                    return SolveStatus.INFEASIBLE
                for j in self.art_cols:
                    self.lower[j] = self.upper[j] = 0.0
        return self.optimize(phase1=False)

    def extract(self, model: LinearModel, status: SolveStatus) -> SolveResult:
        if status in (SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED):
            return SolveResult(status=status, objective=math.nan, x=None,
                               iterations=self.iterations)
        self._refactor()
        x = self.vals[: self.n].copy()
        x = np.minimum(np.maximum(x, np.asarray(model.lower)), np.asarray(model.upper))
        obj = float(np.asarray(model.obj) @ x) + model.offset
        nm = self.n + self.m
        if np.all(self.basic < nm):
            at_upper = np.asarray(self.state[:nm] == _AT_UPPER)
            basis = Basis(basic=self.basic.copy(), at_upper=at_upper)
        else:
            basis = None  # an artificial is still basic; restart cold next time
        return SolveResult(status=status, objective=obj, x=x,
                           iterations=self.iterations, basis=basis)


def solve_lp(model: LinearModel, tol: Tolerances | None = None,
             basis: Basis | None = None) -> SolveResult:
    """Solve the continuous relaxation of ``model``."""
    tol = tol or Tolerances()
    model.validate()
    if model.num_rows == 0:
        x = np.empty(model.num_cols)
        for j in range(model.num_cols):
            lo, hi, cj = model.lower[j], model.upper[j], model.obj[j]
            if cj > 0:
                if not math.isfinite(lo):
                    return SolveResult(SolveStatus.UNBOUNDED, math.nan, None)
                x[j] = lo
            elif cj < 0:
                if not math.isfinite(hi):
                    return SolveResult(SolveStatus.UNBOUNDED, math.nan, None)
                x[j] = hi
            else:
                x[j] = lo if math.isfinite(lo) else (hi if math.isfinite(hi) else 0.0)
        obj = float(np.asarray(model.obj) @ x) + model.offset
        return SolveResult(SolveStatus.OPTIMAL, obj, x)
    sx = _Simplex(model, tol)
    status = sx.solve(basis=basis)
    return sx.extract(model, status)


def _fractional(x: np.ndarray, cols: list[int], int_tol: float) -> list[tuple[int, float]]:
    out = []
    for j in cols:
        f = x[j] - math.floor(x[j])
        frac = min(f, 1.0 - f)
        if frac > int_tol:
            out.append((j, frac))
    return out


def solve_milp(model: LinearModel, tol: Tolerances | None = None,
               limits: Limits | None = None) -> SolveResult:
    """Best-bound branch and bound over the integer-marked columns."""
    tol = tol or Tolerances()
    limits = limits or Limits()
    model.validate()
    int_cols = [j for j in range(model.num_cols) if model.integer[j]]
    root = solve_lp(model, tol)
    if not int_cols or root.status is not SolveStatus.OPTIMAL:
        return root

    obj_vec = np.asarray(model.obj)
    incumbent: SolveResult | None = None
    total_iter = root.iterations
    nodes = 1
    counter = 0
    heap: list[tuple[float, int, dict[int, tuple[float, float]], Basis | None]] = []

    def push(bound_obj, overrides, parent_basis):
        nonlocal counter
        heapq.heappush(heap, (bound_obj, counter, overrides, parent_basis))
        counter += 1

    def consider(res: SolveResult) -> None:
        nonlocal incumbent
        x = res.x.copy()
        for j in int_cols:
            x[j] = round(x[j])
        obj = float(obj_vec @ x) + model.offset
        if incumbent is None or obj < incumbent.objective:
            incumbent = SolveResult(SolveStatus.OPTIMAL, obj, x, basis=res.basis)

    def gap_cut() -> float:
        if incumbent is None:
            return math.inf
        return incumbent.objective - tol.gap * max(1.0, abs(incumbent.objective))

    def branch(res: SolveResult, overrides) -> None:
        fracs = _fractional(res.x, int_cols, tol.integrality)
        if not fracs:
            consider(res)
            return
        best_frac = max(f for _, f in fracs)
        j = min(jj for jj, f in fracs if f >= best_frac - 1e-15)
        xj = res.x[j]
        down = dict(overrides)
        down[j] = (model.lower[j], math.floor(xj))
        up = dict(overrides)
        up[j] = (math.ceil(xj), model.upper[j])
        push(res.objective, down, res.basis)
        push(res.objective, up, res.basis)

    branch(root, {})
    work = model.copy()

    while heap:
        bound_obj, _, overrides, parent_basis = heapq.heappop(heap)
        if bound_obj >= gap_cut():
            break
        if nodes >= limits.max_nodes:
            if incumbent is not None:
                return replace(incumbent, status=SolveStatus.NODE_LIMIT,
                               nodes=nodes, iterations=total_iter)
            return SolveResult(SolveStatus.NODE_LIMIT, math.nan, None,
                               nodes=nodes, iterations=total_iter)
        nodes += 1
        for j in range(work.num_cols):
            work.lower[j] = model.lower[j]
            work.upper[j] = model.upper[j]
        for j, (lo, hi) in overrides.items():
            work.lower[j], work.upper[j] = lo, hi
        res = solve_lp(work, tol, basis=parent_basis)
        total_iter += res.iterations
        if res.status is SolveStatus.ITERATION_LIMIT:
            if incumbent is not None:
                return replace(incumbent, status=res.status, nodes=nodes,
                               iterations=total_iter)
            return SolveResult(res.status, math.nan, None, nodes=nodes,
                               iterations=total_iter)
        if res.status is not SolveStatus.OPTIMAL:
            continue
        if res.objective >= gap_cut():
            continue
        branch(res, overrides)

    if incumbent is None:
        return SolveResult(SolveStatus.INFEASIBLE, math.nan, None,
                           nodes=nodes, iterations=total_iter)
    return replace(incumbent, nodes=nodes, iterations=total_iter)
