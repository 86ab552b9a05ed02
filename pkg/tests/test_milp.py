import math

import numpy as np
import pytest

from maintops.milp import (LE, EQ, GE, Basis, Limits, LinearModel, ModelError,
                           SolveStatus, Tolerances, solve_lp, solve_milp)

from oracles import OPTIMAL, UNBOUNDED, bounded_lp_oracle, enumerate_milp


def test_min_x_with_floor():
    m = LinearModel()
    x = m.add_column("x", lower=0.0, upper=10.0, objective=1.0)
    m.add_row([(x, 1.0)], GE, 1.0)
    res = solve_lp(m)
    assert res.status is SolveStatus.OPTIMAL
    assert res.objective == pytest.approx(1.0, abs=1e-9)


def test_two_var_box():
    m = LinearModel()
    x = m.add_column("x", 0.0, 1.0, -1.0)
    y = m.add_column("y", 0.0, 1.0, -1.0)
    m.add_row([(x, 1.0), (y, 1.0)], LE, 1.0)
    res = solve_lp(m)
    assert res.objective == pytest.approx(-1.0, abs=1e-9)


def test_infeasible_lp():
    m = LinearModel()
    x = m.add_column("x", 0.0, 1.0)
    m.add_row([(x, 1.0)], GE, 2.0)
    assert solve_lp(m).status is SolveStatus.INFEASIBLE


def test_unbounded_lp():
    m = LinearModel()
    x = m.add_column("x", 0.0, math.inf, -1.0)
    m.add_row([(x, -1.0)], LE, 0.0)
    assert solve_lp(m).status is SolveStatus.UNBOUNDED


def test_equality_and_free_variable():
    m = LinearModel()
    x = m.add_column("x", -math.inf, math.inf, 1.0)
    y = m.add_column("y", 0.0, 5.0, 2.0)
    m.add_row([(x, 1.0), (y, 1.0)], EQ, 3.0)
    res = solve_lp(m)
    # y stays at 0, x carries the equality
    assert res.objective == pytest.approx(3.0, abs=1e-8)
    assert res.x[1] == pytest.approx(0.0, abs=1e-8)


def test_offset_carried_into_objective():
    m = LinearModel()
    x = m.add_column("x", 1.0, 2.0, 1.0)
    m.add_row([(x, 1.0)], GE, 1.0)
    m.offset = 10.0
    assert solve_lp(m).objective == pytest.approx(11.0, abs=1e-9)


def test_model_validation():
    m = LinearModel()
    x = m.add_column("x", 2.0, 1.0)
    with pytest.raises(ModelError):
        m.validate()
    m2 = LinearModel()
    x = m2.add_column("x")
    with pytest.raises(ModelError):
        m2.add_row([(x, 1.0)], "<", 1.0)
    m3 = LinearModel()
    x = m3.add_column("x")
    m3.add_row([(x, 1.0)], LE, math.inf)
    with pytest.raises(ModelError):
        m3.validate()


def test_binary_choice_milp():
    # max 5a + 4b subject to a + b <= 1, as minimization of the negation
    m = LinearModel()
    a = m.add_column("a", 0.0, 1.0, -5.0, integer=True)
    b = m.add_column("b", 0.0, 1.0, -4.0, integer=True)
    m.add_row([(a, 1.0), (b, 1.0)], LE, 1.0)
    res = solve_milp(m)
    assert res.status is SolveStatus.OPTIMAL
    assert res.objective == pytest.approx(-5.0, abs=1e-9)
    assert res.x[a] == pytest.approx(1.0)
    assert res.x[b] == pytest.approx(0.0)


def test_knapsack_matches_enumeration():
    # min -(3a + 4b + 5c) s.t. 2a + 3b + 4c <= 5
    m = LinearModel()
    cols = [m.add_column(nm, 0.0, 1.0, -v, integer=True)
            for nm, v in (("a", 3.0), ("b", 4.0), ("c", 5.0))]
    m.add_row([(cols[0], 2.0), (cols[1], 3.0), (cols[2], 4.0)], LE, 5.0)
    res = solve_milp(m)
    status, _, oracle_obj = enumerate_milp(
        [-3.0, -4.0, -5.0], m.rows, m.senses, m.rhs, m.lower, m.upper, cols)
    assert status is OPTIMAL
    assert oracle_obj == pytest.approx(-7.0, abs=1e-12)
    assert res.objective == pytest.approx(oracle_obj, abs=1e-9)


def test_integer_infeasible_milp():
    m = LinearModel()
    a = m.add_column("a", 0.0, 1.0, 1.0, integer=True)
    b = m.add_column("b", 0.0, 1.0, 1.0, integer=True)
    m.add_row([(a, 2.0), (b, 2.0)], EQ, 1.0)
    assert solve_milp(m).status is SolveStatus.INFEASIBLE


def _random_lp(rng):
    n = int(rng.integers(4, 10))
    m = int(rng.integers(3, 8))
    a = rng.normal(size=(m, n)).round(3)
    x0 = rng.uniform(0.2, 2.0, size=n)
    lower = np.zeros(n)
    upper = np.empty(n)
    for j in range(n):
        kind = rng.integers(0, 4)
        if kind == 0:
            lower[j], upper[j] = 0.0, x0[j] + rng.uniform(0.5, 3.0)
        elif kind == 1:
            lower[j] = x0[j] - rng.uniform(0.5, 2.0)
            upper[j] = x0[j] + rng.uniform(0.5, 2.0)
        elif kind == 2:
            lower[j], upper[j] = -math.inf, x0[j] + rng.uniform(0.5, 2.0)
        else:
            lower[j], upper[j] = 0.0, x0[j] + rng.uniform(1.0, 4.0)
    model = LinearModel()
    for j in range(n):
        model.add_column(f"x{j}", lower[j], upper[j], round(float(rng.normal()), 3))
    for i in range(m):
        coeffs = [(j, float(a[i, j])) for j in range(n)]
        r = float(a[i] @ x0)
        sense = (LE, GE, EQ)[int(rng.integers(0, 3))]
        if sense == LE:
            model.add_row(coeffs, sense, r + float(rng.uniform(0.1, 2.0)))
        elif sense == GE:
            model.add_row(coeffs, sense, r - float(rng.uniform(0.1, 2.0)))
        else:
            model.add_row(coeffs, sense, r)
    return model


def test_random_lps_match_naive_oracle():
    rng = np.random.default_rng(20240705)
    solved = 0
    for _ in range(50):
        model = _random_lp(rng)
        res = solve_lp(model)
        status, _, oracle_obj = bounded_lp_oracle(
            model.obj, model.rows, model.senses, model.rhs, model.lower, model.upper)
        if status is UNBOUNDED:
            assert res.status is SolveStatus.UNBOUNDED
            continue
        assert status is OPTIMAL, "instances are feasible by construction"
        assert res.status is SolveStatus.OPTIMAL
        assert res.objective == pytest.approx(oracle_obj, abs=1e-6, rel=1e-6)
        solved += 1
    assert solved >= 40


def _random_milp(rng):
    nbin = int(rng.integers(3, 13))
    ncont = int(rng.integers(0, 4))
    n = nbin + ncont
    m = int(rng.integers(2, 7))
    a = rng.normal(size=(m, n)).round(3)
    pat = rng.integers(0, 2, size=nbin).astype(float)
    xc = rng.uniform(0.0, 2.0, size=ncont)
    x0 = np.concatenate([pat, xc])
    model = LinearModel()
    for j in range(nbin):
        model.add_column(f"b{j}", 0.0, 1.0, round(float(rng.normal()), 3), integer=True)
    for j in range(ncont):
        model.add_column(f"y{j}", 0.0, float(xc[j] + rng.uniform(0.5, 3.0)),
                         round(float(rng.normal()), 3))
    for i in range(m):
        coeffs = [(j, float(a[i, j])) for j in range(n)]
        r = float(a[i] @ x0)
        sense = (LE, GE)[int(rng.integers(0, 2))]
        if sense == LE:
            model.add_row(coeffs, sense, r + float(rng.uniform(0.1, 1.5)))
        else:
            model.add_row(coeffs, sense, r - float(rng.uniform(0.1, 1.5)))
    return model, list(range(nbin))


def test_random_milps_match_enumeration():
    rng = np.random.default_rng(987654321)
    for _ in range(100):
        model, bins = _random_milp(rng)
        res = solve_milp(model)
        status, _, oracle_obj = enumerate_milp(
            model.obj, model.rows, model.senses, model.rhs,
            model.lower, model.upper, bins)
        assert status is OPTIMAL
        assert res.status is SolveStatus.OPTIMAL
        assert res.objective == pytest.approx(oracle_obj, abs=1e-6, rel=1e-6)

        # LP relaxation bounds the integer optimum from below
        relax = solve_lp(model)
        assert relax.objective <= res.objective + 1e-6

        # re-solving with the binaries pinned reproduces the objective
        pinned = model.copy()
        for j in bins:
            pinned.fix_column(j, round(res.x[j]))
        again = solve_lp(pinned)
        assert again.status is SolveStatus.OPTIMAL
        assert again.objective == pytest.approx(res.objective, abs=1e-6, rel=1e-6)


def test_solver_determinism():
    rng = np.random.default_rng(7)
    model, _ = _random_milp(rng)
    first = solve_milp(model)
    second = solve_milp(model)
    assert first.status == second.status
    assert first.objective == second.objective
    assert np.array_equal(first.x, second.x)
    assert first.nodes == second.nodes
    assert first.iterations == second.iterations


def test_iteration_limit_status():
    rng = np.random.default_rng(3)
    model = _random_lp(rng)
    tol = Tolerances(max_iterations=1)
    assert solve_lp(model, tol).status is SolveStatus.ITERATION_LIMIT


def test_node_limit_returns_incumbent():
    rng = np.random.default_rng(11)
    # craft an instance that needs branching
    model, bins = _random_milp(rng)
    res = solve_milp(model, limits=Limits(max_nodes=1))
    assert res.status in (SolveStatus.NODE_LIMIT, SolveStatus.OPTIMAL)


def test_warm_start_from_previous_basis():
    m = LinearModel()
    x = m.add_column("x", 0.0, 4.0, 1.0)
    y = m.add_column("y", 0.0, 4.0, 2.0)
    m.add_row([(x, 1.0), (y, 1.0)], GE, 3.0)
    first = solve_lp(m)
    assert first.basis is not None
    res = solve_lp(m, basis=first.basis)
    assert res.objective == pytest.approx(first.objective, abs=1e-9)
