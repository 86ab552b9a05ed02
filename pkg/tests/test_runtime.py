import numpy as np
import pytest

from maintops.case import TimeGrid, expand_demand, parse_case, parse_partition
from maintops.consensus import init_consensus
from maintops.milp import solve_milp
from maintops.runtime import (AlgorithmOptions, MtOptError, RegionAgent,
                              SolveExecutor, centralized_benchmark,
                              run_agents, run_algorithm, subgradient_step)
from maintops.subproblem import ModelMode, PenaltyConfig, RegionProblem
from maintops.transport import KINDS, InprocTransport, Trace

from conftest import SEVEN_BUS, SEVEN_BUS_PARTITION, THREE_BUS, THREE_BUS_SPLIT, \
    flat_curve, make_problems, single_bus_text


def _options(**kw):
    base = dict(eps=1e-2, rounds_fmrc=60, rounds_fmbc=60, rounds_bmbc=80,
                inner_cap=8)
    base.update(kw)
    return AlgorithmOptions(**base)


def _pen(**kw):
    base = dict(rho_theta=50.0, rho_flow=0.5, rho_production=0.002,
                curtail_cost=1e4, pwl_segments=8, trust_flow_frac=0.3)
    base.update(kw)
    return PenaltyConfig(**base)


def _three_bus_setup(partition=THREE_BUS_SPLIT):
    case = parse_case(THREE_BUS)
    part = parse_partition(partition, case)
    grid = TimeGrid(num_epochs=3, days=3, steps_per_day=2)
    demand = expand_demand(case, grid, [0.9, 1.1])
    curves = {1: flat_curve(1, [40.0, 30.0, 35.0]),
              2: flat_curve(2, [25.0, 30.0, 35.0])}
    return case, part, grid, demand, curves


def _single_agent(problem, part, options):
    transport = InprocTransport([problem.view.region], timeout=5.0, trace=Trace())
    executor = SolveExecutor(None, options.tolerances, options.limits)
    return RegionAgent(problem, part, transport, executor, options)


def test_subgradient_step_examples():
    # two generators still unscheduled: sigma = |100 - 90| / (1 + 1)
    assert subgradient_step(100.0, 90.0, [1.0, 1.0]) == pytest.approx(5.0)
    # a scheduled generator contributes nothing to the denominator
    assert subgradient_step(100.0, 90.0, [1.0, 0.0]) == pytest.approx(10.0)
    assert subgradient_step(50.0, 80.0, [-2.0, 1.0]) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        subgradient_step(100.0, 90.0, [0.0, 0.0])


def test_alpha_untouched_when_deficit_zero():
    deficits = {1: 0.0, 2: 1.0}
    alpha = {1: 3.0, 2: 0.0}
    step = subgradient_step(10.0, 4.0, list(deficits.values()))
    for g, d in deficits.items():
        alpha[g] += step * d
    assert alpha[1] == 3.0
    assert alpha[2] == pytest.approx(6.0)


def test_mt_opt_single_epoch_and_determinism():
    case, part, grid, demand, curves = _three_bus_setup()
    options = _options()
    prob = RegionProblem(view=part.region(1), case=case, grid=grid, demand=demand,
                         curves={1: curves[1]}, penalties=_pen())
    agent = _single_agent(prob, part, options)
    slices = agent.mt_opt(ModelMode.FMRC, agent.assignment,
                          {1: 0.0}, "fmrc", 1)
    assert [sl.epoch for sl in slices] == [1, 2, 3]
    assert [tuple(sl.steps) for sl in slices] == [(0, 1), (2, 3), (4, 5)]
    only_two = agent.mt_opt(ModelMode.FMRC, agent.assignment, {1: 0.0},
                            "fmrc", 1, epochs=[2])
    assert len(only_two) == 1 and only_two[0].epoch == 2
    assert np.array_equal(only_two[0].y, slices[1].y)


def test_epoch_objectives_sum_across_epochs():
    case, part, grid, demand, curves = _three_bus_setup()
    prob = RegionProblem(view=part.region(1), case=case, grid=grid, demand=demand,
                         curves={1: curves[1]}, penalties=_pen())
    agent = _single_agent(prob, part, _options())
    slices = agent.mt_opt(ModelMode.FMBC, agent.assignment, {1: 0.0}, "fmbc", 1)
    total = sum(sl.parts.objective for sl in slices)
    assert total == pytest.approx(sum(sl.parts.objective for sl in slices))
    assert len({tuple(sl.steps) for sl in slices}) == 3


def test_infeasible_epoch_names_trust_interval():
    # susceptance so small the reachable flow cannot reach the consensus window
    case_text = THREE_BUS.replace("2 3 20.0 8.0", "2 3 1.0 10.0")
    case = parse_case(case_text.replace("1 2 20.0 9.0", "1 2 30.0 20.0"))
    part = parse_partition(THREE_BUS_SPLIT, case)
    grid = TimeGrid(num_epochs=1, days=1, steps_per_day=1)
    demand = expand_demand(case, grid, [1.0])
    pen = _pen(trust_theta=0.05, trust_flow_frac=0.2)
    prob = RegionProblem(view=part.region(2), case=case, grid=grid, demand=demand,
                         curves={2: flat_curve(2, [5.0])}, penalties=pen)
    agent = _single_agent(prob, part, _options())
    agent.consensus.flow_bar[0, 0] = 9.0   # far beyond what angles allow
    with pytest.raises(MtOptError, match="trust"):
        agent.mt_opt(ModelMode.FMRC, agent.assignment, {2: 0.0}, "fmrc", 1)


def test_single_region_run_converges_quickly():
    case, part, grid, demand, curves = _three_bus_setup("1 1\n2 1\n3 1\n")
    report = run_algorithm(part, grid, demand, curves, _pen(), _options())
    assert report.converged
    for p in report.phases:
        assert p.rounds <= 2
    # no neighbors: only the coupling-free record kinds may appear
    assert set(report.message_counts) == set()
    # every generator is maintained exactly once
    assert np.allclose(report.z.sum(axis=1), 1.0)


def test_two_region_run_end_to_end():
    case, part, grid, demand, curves = _three_bus_setup()
    report = run_algorithm(part, grid, demand, curves, _pen(), _options())
    assert report.converged
    assert np.allclose(report.z.sum(axis=1), 1.0)
    # commitment never overlaps maintenance
    for i in range(report.z.shape[0]):
        for m in range(report.z.shape[1]):
            if report.z[i, m] == 1.0:
                steps = grid.epoch_steps(m + 1)
                assert np.all(report.x[i, list(steps)] == 0.0)
    assert report.balance_residual <= 1e-6
    assert report.upper_bound is not None


def test_phase_cost_ordering_and_round_metrics():
    case, part, grid, demand, curves = _three_bus_setup()
    report = run_algorithm(part, grid, demand, curves, _pen(), _options())
    fmrc_last = [m for m in report.rounds if m.phase == "fmrc"][-1]
    fmbc_last = [m for m in report.rounds if m.phase == "fmbc"][-1]
    assert fmrc_last.exact_cost <= fmbc_last.exact_cost + 1e-6
    assert report.upper_bound >= report.gross - report.pwl_bound - 1e-6


def test_thread_count_does_not_change_results():
    case, part, grid, demand, curves = _three_bus_setup()
    a = run_algorithm(part, grid, demand, curves, _pen(), _options(threads=1))
    b = run_algorithm(part, grid, demand, curves, _pen(), _options(threads=2))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    assert np.array_equal(a.z, b.z)
    assert a.gross == b.gross
    assert [(m.phase, m.round, m.primal_residual, m.exact_cost) for m in a.rounds] \
        == [(m.phase, m.round, m.primal_residual, m.exact_cost) for m in b.rounds]


def test_centralized_benchmark_matches_single_region_run():
    case, part, grid, demand, curves = _three_bus_setup("1 1\n2 1\n3 1\n")
    via_run = run_algorithm(part, grid, demand, curves, _pen(), _options())
    via_bench = centralized_benchmark(case, grid, demand, curves, _pen(), _options())
    assert via_bench.gross == pytest.approx(via_run.gross, rel=1e-12)
    assert np.array_equal(via_bench.z, via_run.z)


def test_seven_bus_message_counts_and_privacy():
    case = parse_case(SEVEN_BUS)
    part = parse_partition(SEVEN_BUS_PARTITION, case)
    grid = TimeGrid(num_epochs=2, days=2, steps_per_day=1)
    demand = expand_demand(case, grid, [1.0])
    curves = {1: flat_curve(1, [5.0, 6.0]), 2: flat_curve(2, [6.0, 5.0]),
              3: flat_curve(3, [5.5, 5.5])}
    options = _options(rounds_fmrc=1, rounds_fmbc=1, rounds_bmbc=1, inner_cap=2)
    agents, trace = run_agents(part, grid, demand, curves, _pen(), options)
    msgs = trace.messages()
    assert {m.kind for m in msgs} <= KINDS
    # every region pair is adjacent in this topology: six directed pairs,
    # one theta and one violation share each per round, three rounds total
    theta = [m for m in msgs if m.kind == "THETA_SHARE"]
    viol = [m for m in msgs if m.kind == "VIOLATION_SHARE"]
    conv = [m for m in msgs if m.kind == "CONV_FLAG"]
    ub = [m for m in msgs if m.kind == "UBOUND_SHARE"]
    assert len(theta) == 6 * 3
    assert len(viol) == 6 * 3
    assert len(conv) == 6 * 3
    assert len(ub) == 6
    # payload keys carry only angles, violations, bounds and flags
    for m in msgs:
        for key, _ in m.values:
            assert key.split(".")[0] in ("theta", "viol", "objective", "converged")


def test_round_barrier_ordering():
    case, part, grid, demand, curves = _three_bus_setup()
    options = _options(rounds_fmrc=4, rounds_fmbc=3, rounds_bmbc=3)
    agents, _ = run_agents(part, grid, demand, curves, _pen(), options)
    for phase in ("fmrc", "fmbc", "bmbc"):
        rounds = sorted({k for a in agents for (ph, k, ev, _) in a.events
                         if ph == phase})
        for k in rounds[:-1]:
            ends = [t for a in agents for (ph, kk, ev, t) in a.events
                    if ph == phase and kk == k and ev == "round_end"]
            starts = [t for a in agents for (ph, kk, ev, t) in a.events
                      if ph == phase and kk == k + 1 and ev == "solve_start"]
            if ends and starts:
                # nobody starts round k+1 before everyone finished round k
                assert min(starts) >= max(ends) - 1e-6


def test_repair_produces_cardinal_schedule():
    case, part, grid, demand, curves = _three_bus_setup()
    options = _options(inner_cap=1, rounds_bmbc=10)
    report = run_algorithm(part, grid, demand, curves, _pen(), options)
    assert np.allclose(report.z.sum(axis=1), 1.0)
    bmbc = report.phase("bmbc")
    assert bmbc.warnings  # the single-step inner cap forces the repair path
