import numpy as np
import pytest

from maintops.case import (CaseDomainError, CaseReferenceError, CaseSyntaxError,
                           TimeGrid, build_partition, dump_case, expand_demand,
                           parse_case, parse_partition, single_region_partition)

from conftest import SEVEN_BUS, SEVEN_BUS_PARTITION

TWO_BUS = """
# two buses, one line, one generator
BUS
1 0.0
2 3.0
BRANCH
1 2 10.0 5.0
GEN
1 1 0.0 10.0 100.0 1 1 0
COST
1 2.0 1.0 0.0 0.0
"""

def test_parse_two_bus_fixture():
    case = parse_case(TWO_BUS)
    assert len(case.buses) == 2
    assert len(case.lines) == 1
    assert len(case.generators) == 1
    assert case.lines[0].susceptance == 10.0
    assert case.lines[0].capacity == 5.0
    g = case.generators[0]
    assert g.p_max == 10.0 and g.dispatch_cost == 2.0 and g.commit_cost == 1.0


def test_empty_file_is_a_syntax_error():
    with pytest.raises(CaseSyntaxError):
        parse_case("")
    with pytest.raises(CaseSyntaxError):
        parse_case("# only a comment\n")


def test_unknown_bus_reference_is_named():
    bad = TWO_BUS.replace("1 2 10.0 5.0", "1 99 10.0 5.0")
    with pytest.raises(CaseReferenceError, match="99"):
        parse_case(bad)


def test_domain_errors():
    with pytest.raises(CaseDomainError, match="capacity"):
        parse_case(TWO_BUS.replace("1 2 10.0 5.0", "1 2 10.0 -5.0"))
    with pytest.raises(CaseDomainError):
        parse_case(TWO_BUS.replace("1 1 0.0 10.0", "1 1 12.0 10.0"))


def test_syntax_error_carries_line_number():
    bad = "BUS\n1 0.0\n2 oops\n"
    with pytest.raises(CaseSyntaxError) as err:
        parse_case(bad)
    assert err.value.line == 3


def test_missing_cost_row():
    bad = TWO_BUS.replace("COST\n1 2.0 1.0 0.0 0.0", "COST")
    with pytest.raises(CaseReferenceError, match="COST"):
        parse_case(bad)


def test_case_round_trip():
    case = parse_case(SEVEN_BUS)
    assert parse_case(dump_case(case)) == case


def test_three_region_classification():
    case = parse_case(SEVEN_BUS)
    part = parse_partition(SEVEN_BUS_PARTITION, case)
    r1, r2, r3 = (part.region(i) for i in (1, 2, 3))
    assert r1.boundary == {2, 3} and r1.foreign == {7, 5}
    assert r2.boundary == {5} and r2.foreign == {6, 3}
    assert r3.boundary == {7, 6} and r3.foreign == {2, 5}
    assert r1.internal == {1}
    assert r2.internal == {4}
    assert r3.internal == frozenset()
    assert r1.neighbors == {2, 3}
    assert r2.boundary_neighbors[5] == {1, 3}


def test_single_region_has_no_coupling():
    case = parse_case(SEVEN_BUS)
    part = single_region_partition(case)
    rv = part.regions[0]
    assert rv.boundary == frozenset() and rv.foreign == frozenset()
    assert rv.internal == set(case.bus_ids())
    assert rv.tie_lines == ()


def test_two_bus_split_has_one_tie():
    case = parse_case(TWO_BUS)
    part = parse_partition("1 1\n2 2\n", case)
    for rv in part.regions:
        assert len(rv.boundary) == 1 and len(rv.foreign) == 1
        assert len(rv.tie_lines) == 1


def test_partition_errors():
    case = parse_case(TWO_BUS)
    with pytest.raises(CaseReferenceError, match="without a region"):
        parse_partition("1 1\n", case)
    with pytest.raises(CaseReferenceError, match="unknown bus"):
        parse_partition("1 1\n2 1\n5 2\n", case)
    with pytest.raises(CaseSyntaxError):
        parse_partition("1 1\n1 2\n2 1\n", case)


def test_partition_order_independent():
    case = parse_case(SEVEN_BUS)
    lines = [l for l in SEVEN_BUS_PARTITION.strip().splitlines()]
    a = parse_partition("\n".join(lines), case)
    b = parse_partition("\n".join(reversed(lines)), case)
    assert a.regions == b.regions
    # idempotent: rebuilding from the same assignment changes nothing
    c = build_partition(case, a.assignment)
    assert c.regions == a.regions


def test_every_tie_line_is_carried_by_exactly_two_regions():
    case = parse_case(SEVEN_BUS)
    part = parse_partition(SEVEN_BUS_PARTITION, case)
    carried: dict[int, int] = {}
    for rv in part.regions:
        for l in rv.tie_lines:
            carried[l] = carried.get(l, 0) + 1
    cross = {ln.index for ln in case.lines
             if part.owner(ln.from_bus) != part.owner(ln.to_bus)}
    assert set(carried) == cross
    assert all(n == 2 for n in carried.values())


def test_time_grid():
    grid = TimeGrid(num_epochs=3, days=3, steps_per_day=2)
    assert grid.num_steps == 6 and grid.steps_per_epoch == 2
    assert list(grid.epoch_steps(1)) == [0, 1]
    assert list(grid.epoch_steps(3)) == [4, 5]
    assert grid.epoch_of_step(5) == 3
    assert grid.step_of_day(3) == 1
    with pytest.raises(CaseDomainError):
        TimeGrid(num_epochs=4, days=3, steps_per_day=2)
    with pytest.raises(IndexError):
        grid.epoch_steps(4)


def test_expand_demand_profile():
    case = parse_case(TWO_BUS.replace("2 3.0", "2 100.0"))
    grid = TimeGrid(num_epochs=1, days=1, steps_per_day=2)
    d = expand_demand(case, grid, [0.5, 1.0])
    assert np.allclose(d[1], [50.0, 100.0])
    assert np.allclose(d[0], [0.0, 0.0])


def test_expand_demand_flat_and_zero():
    case = parse_case(TWO_BUS)
    grid = TimeGrid(num_epochs=2, days=2, steps_per_day=1)
    d = expand_demand(case, grid, [1.0])
    assert np.allclose(d[1], 3.0)
    zero = parse_case(TWO_BUS.replace("2 3.0", "2 0.0"))
    assert np.allclose(expand_demand(zero, grid, [1.0]), 0.0)


def test_expand_demand_length_mismatch():
    case = parse_case(TWO_BUS)
    grid = TimeGrid(num_epochs=1, days=1, steps_per_day=2)
    with pytest.raises(CaseDomainError, match="profile length"):
        expand_demand(case, grid, [1.0])
