import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from maintops.case import TimeGrid, expand_demand, parse_case, parse_partition
from maintops.degradation import MaintenanceCostCurve
from maintops.subproblem import PenaltyConfig, RegionProblem


def flat_curve(gen: int, values) -> MaintenanceCostCurve:
    return MaintenanceCostCurve(generator=gen, values=tuple(float(v) for v in values),
                                kappa=1.0, omega_p=1.0, omega_f=2.0)


def make_problems(case_text: str, partition_text: str, grid: TimeGrid,
                  profile, curve_values, penalties: PenaltyConfig):
    """Parse a fixture and build one RegionProblem per region."""
    case = parse_case(case_text)
    part = parse_partition(partition_text, case)
    demand = expand_demand(case, grid, profile)
    curves = {g: flat_curve(g, vals) for g, vals in curve_values.items()}
    problems = {}
    for rv in part.regions:
        local = {g: curves[g] for g in rv.generators}
        problems[rv.region] = RegionProblem(
            view=rv, case=case, grid=grid, demand=demand,
            curves=local, penalties=penalties)
    return case, part, demand, problems


SINGLE_BUS = """
BUS
1 {demand}
GEN
1 1 {pmin} {pmax} 1000.0 {mu} {md} 0
COST
1 {d} {c} {su} {sd}
"""


def single_bus_text(demand=0.0, pmin=0.0, pmax=10.0, d=2.0, c=1.0,
                    su=0.0, sd=0.0, mu=1, md=1) -> str:
    return SINGLE_BUS.format(demand=demand, pmin=pmin, pmax=pmax,
                             d=d, c=c, su=su, sd=sd, mu=mu, md=md)


# three buses in a line, generators at the ends, two regions
THREE_BUS = """
BUS
1 0.0
2 6.0
3 4.0
BRANCH
1 2 20.0 9.0
2 3 20.0 8.0
GEN
1 1 0.0 14.0 1000.0 1 1 0
2 3 0.0 14.0 1000.0 1 1 0
COST
1 5.0 2.0 0.0 0.0
2 9.0 1.0 0.0 0.0
"""

THREE_BUS_SPLIT = "1 1\n2 1\n3 2\n"
THREE_BUS_SINGLE = "1 1\n2 1\n3 1\n"

# seven buses A..G numbered 1..7, three regions; tie lines 2-7, 3-5, 5-6
SEVEN_BUS = """
BUS
1 0.0
2 5.0
3 5.0
4 4.0
5 4.0
6 3.0
7 3.0
BRANCH
1 2 10.0 8.0
1 3 10.0 8.0
4 5 10.0 8.0
6 7 10.0 8.0
2 7 10.0 8.0
3 5 10.0 8.0
5 6 10.0 8.0
GEN
1 1 0.0 20.0 100.0 1 1 0
2 4 0.0 20.0 100.0 1 1 0
3 6 0.0 20.0 100.0 1 1 0
COST
1 1.0 1.0 0.0 0.0
2 2.0 1.0 0.0 0.0
3 3.0 1.0 0.0 0.0
"""

SEVEN_BUS_PARTITION = """
1 1
2 1
3 1
4 2
5 2
6 3
7 3
"""


@pytest.fixture
def quiet_penalties():
    return PenaltyConfig(rho_theta=0.0, rho_flow=0.0, rho_production=0.0,
                         curtail_cost=0.0)
