"""Network case and partition parsing.

The case format is section-tagged tabular text. Four sections, each
introduced by a bare header line, hold whitespace-separated numeric
columns; ``#`` starts a comment anywhere on a line.

    BUS     bus_id  base_demand_mw
    BRANCH  from_bus  to_bus  susceptance_mw_per_rad  capacity_mw
    GEN     gen_id  bus  p_min  p_max  ramp  min_up  min_down  init_status
    COST    gen_id  dispatch  commit  startup  shutdown

``init_status`` is the number of steps the unit has been on (positive)
or off (non-positive) before the horizon starts.  Every generator needs
exactly one COST row.  Costs are USD; dispatch cost is USD per MW per
operational step.

The partition format is one ``bus_id region_id`` pair per line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class CaseError(Exception):
    """Base class for case/partition file problems."""


class CaseSyntaxError(CaseError):
    """Malformed line: wrong token count, non-numeric field, unknown section."""

    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}: {message}" if column == 0 else f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class CaseReferenceError(CaseError):
    """A record references an id that does not exist."""


class CaseDomainError(CaseError):
    """A numeric field violates its domain (negative capacity etc.)."""


@dataclass(frozen=True)
class Bus:
    id: int
    demand: float


@dataclass(frozen=True)
class Line:
    index: int
    from_bus: int
    to_bus: int
    susceptance: float
    capacity: float


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_min: float
    p_max: float
    dispatch_cost: float
    commit_cost: float
    startup_cost: float
    shutdown_cost: float
    ramp: float
    min_up: int
    min_down: int
    init_status: int


@dataclass(frozen=True)
class NetworkCase:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]

    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def bus(self, bus_id: int) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise KeyError(bus_id)

    def generator(self, gen_id: int) -> Generator:
        for g in self.generators:
            if g.id == gen_id:
                return g
        raise KeyError(gen_id)

    def lines_at(self, bus_id: int) -> list[Line]:
        return [ln for ln in self.lines if bus_id in (ln.from_bus, ln.to_bus)]

    def validate(self) -> None:
        ids = set()
        for b in self.buses:
            if b.id in ids:
                raise CaseDomainError(f"duplicate bus id {b.id}")
            ids.add(b.id)
            if b.demand < 0:
                raise CaseDomainError(f"bus {b.id}: negative demand {b.demand}")
        for ln in self.lines:
            for end in (ln.from_bus, ln.to_bus):
                if end not in ids:
                    raise CaseReferenceError(f"branch {ln.index + 1}: unknown bus {end}")
            if ln.from_bus == ln.to_bus:
                raise CaseDomainError(f"branch {ln.index + 1}: self loop at bus {ln.from_bus}")
            if ln.susceptance <= 0:
                raise CaseDomainError(f"branch {ln.index + 1}: susceptance must be > 0")
            if ln.capacity <= 0:
                raise CaseDomainError(f"branch {ln.index + 1}: capacity must be > 0")
        seen_gen = set()
        for g in self.generators:
            if g.id in seen_gen:
                raise CaseDomainError(f"duplicate generator id {g.id}")
            seen_gen.add(g.id)
            if g.bus not in ids:
                raise CaseReferenceError(f"generator {g.id}: unknown bus {g.bus}")
            if not (0 <= g.p_min <= g.p_max):
                raise CaseDomainError(f"generator {g.id}: requires 0 <= p_min <= p_max")
            if g.ramp < 0:
                raise CaseDomainError(f"generator {g.id}: negative ramp limit")
            if g.min_up < 1 or g.min_down < 1:
                raise CaseDomainError(f"generator {g.id}: min up/down times must be >= 1")


_SECTIONS = ("BUS", "BRANCH", "GEN", "COST")


def _tokenize(text: str) -> list[tuple[int, list[str]]]:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            rows.append((lineno, body.split()))
    return rows


def _num(tok: str, lineno: int, col: int, kind: str = "float") -> float:
    try:
        return int(tok) if kind == "int" else float(tok)
    except ValueError:
        raise CaseSyntaxError(f"expected {kind}, got {tok!r}", lineno, col) from None


def parse_case(text: str) -> NetworkCase:
    """Parse case-file text into a validated NetworkCase."""
    rows = _tokenize(text)
    if not rows:
        raise CaseSyntaxError("empty case file", 1)

    section = None
    buses: list[Bus] = []
    lines: list[Line] = []
    gens: list[dict] = []
    costs: dict[int, tuple[float, float, float, float]] = {}

    for lineno, toks in rows:
        if len(toks) == 1 and not _is_number(toks[0]):
            if toks[0] not in _SECTIONS:
                raise CaseSyntaxError(f"unknown section {toks[0]!r}", lineno)
            section = toks[0]
            continue
        if section is None:
            raise CaseSyntaxError("data before any section header", lineno)
        if section == "BUS":
            if len(toks) != 2:
                raise CaseSyntaxError(f"BUS row needs 2 columns, got {len(toks)}", lineno)
            buses.append(Bus(int(_num(toks[0], lineno, 1, "int")), _num(toks[1], lineno, 2)))
        elif section == "BRANCH":
            if len(toks) != 4:
                raise CaseSyntaxError(f"BRANCH row needs 4 columns, got {len(toks)}", lineno)
            lines.append(Line(len(lines), int(_num(toks[0], lineno, 1, "int")),
                              int(_num(toks[1], lineno, 2, "int")),
                              _num(toks[2], lineno, 3), _num(toks[3], lineno, 4)))
        elif section == "GEN":
            if len(toks) != 8:
                raise CaseSyntaxError(f"GEN row needs 8 columns, got {len(toks)}", lineno)
            gens.append(dict(
                id=int(_num(toks[0], lineno, 1, "int")), bus=int(_num(toks[1], lineno, 2, "int")),
                p_min=_num(toks[2], lineno, 3), p_max=_num(toks[3], lineno, 4),
                ramp=_num(toks[4], lineno, 5),
                min_up=int(_num(toks[5], lineno, 6, "int")),
                min_down=int(_num(toks[6], lineno, 7, "int")),
                init_status=int(_num(toks[7], lineno, 8, "int"))))
        elif section == "COST":
            if len(toks) != 5:
                raise CaseSyntaxError(f"COST row needs 5 columns, got {len(toks)}", lineno)
            gid = int(_num(toks[0], lineno, 1, "int"))
            if gid in costs:
                raise CaseSyntaxError(f"duplicate COST row for generator {gid}", lineno)
            costs[gid] = tuple(_num(toks[i], lineno, i + 1) for i in range(1, 5))  # type: ignore[assignment]

    generators = []
    for g in gens:
        if g["id"] not in costs:
            raise CaseReferenceError(f"generator {g['id']}: missing COST row")
        d, c, su, sd = costs[g["id"]]
        generators.append(Generator(
            id=g["id"], bus=g["bus"], p_min=g["p_min"], p_max=g["p_max"],
            dispatch_cost=d, commit_cost=c, startup_cost=su, shutdown_cost=sd,
            ramp=g["ramp"], min_up=g["min_up"], min_down=g["min_down"],
            init_status=g["init_status"]))
    gen_ids = {g.id for g in generators}
    for gid in costs:
        if gid not in gen_ids:
            raise CaseReferenceError(f"COST row for unknown generator {gid}")

    case = NetworkCase(tuple(buses), tuple(lines), tuple(generators))
    case.validate()
    return case


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def dump_case(case: NetworkCase) -> str:
    """Render a NetworkCase back to case-file text (round-trips through parse_case)."""
    out = ["BUS"]
    out += [f"{b.id} {b.demand!r}" for b in case.buses]
    out.append("BRANCH")
    out += [f"{ln.from_bus} {ln.to_bus} {ln.susceptance!r} {ln.capacity!r}" for ln in case.lines]
    out.append("GEN")
    out += [f"{g.id} {g.bus} {g.p_min!r} {g.p_max!r} {g.ramp!r} {g.min_up} {g.min_down} {g.init_status}"
            for g in case.generators]
    out.append("COST")
    out += [f"{g.id} {g.dispatch_cost!r} {g.commit_cost!r} {g.startup_cost!r} {g.shutdown_cost!r}"
            for g in case.generators]
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class RegionView:
    """One region's local view: generators, bus classification, tie lines."""

    region: int
    generators: tuple[int, ...]
    internal: frozenset[int]
    boundary: frozenset[int]
    foreign: frozenset[int]
    neighbors: frozenset[int]
    # boundary bus -> regions observing it across a tie line
    boundary_neighbors: Mapping[int, frozenset[int]]
    tie_lines: tuple[int, ...]

    @property
    def owned(self) -> frozenset[int]:
        return self.internal | self.boundary

    @property
    def visible(self) -> frozenset[int]:
        """Buses with phase-angle variables in this region's models."""
        return self.internal | self.boundary | self.foreign

    @property
    def coupled(self) -> frozenset[int]:
        """Boundary plus foreign buses (the consensus-penalized set)."""
        return self.boundary | self.foreign


@dataclass(frozen=True)
class PartitionedCase:
    case: NetworkCase
    assignment: Mapping[int, int]
    regions: tuple[RegionView, ...]

    def owner(self, bus_id: int) -> int:
        return self.assignment[bus_id]

    def region(self, region_id: int) -> RegionView:
        for rv in self.regions:
            if rv.region == region_id:
                return rv
        raise KeyError(region_id)


def parse_partition(text: str, case: NetworkCase) -> PartitionedCase:
    """Parse ``bus_id region_id`` lines and classify buses per region."""
    rows = _tokenize(text)
    assignment: dict[int, int] = {}
    for lineno, toks in rows:
        if len(toks) != 2:
            raise CaseSyntaxError(f"partition row needs 2 columns, got {len(toks)}", lineno)
        bus = int(_num(toks[0], lineno, 1, "int"))
        region = int(_num(toks[1], lineno, 2, "int"))
        if bus in assignment:
            raise CaseSyntaxError(f"bus {bus} assigned twice", lineno)
        assignment[bus] = region
    return build_partition(case, assignment)


def build_partition(case: NetworkCase, assignment: Mapping[int, int]) -> PartitionedCase:
    """Classify buses into internal/boundary/foreign sets for each region."""
    known = set(case.bus_ids())
    for bus in assignment:
        if bus not in known:
            raise CaseReferenceError(f"partition assigns unknown bus {bus}")
    missing = known - set(assignment)
    if missing:
        raise CaseReferenceError(f"buses without a region: {sorted(missing)}")

    region_ids = sorted(set(assignment.values()))
    owned: dict[int, set[int]] = {r: set() for r in region_ids}
    for bus, region in assignment.items():
        owned[region].add(bus)
    for r in region_ids:
        if not owned[r]:
            raise CaseDomainError(f"region {r} owns no buses")

    views = []
    for r in region_ids:
        boundary: set[int] = set()
        foreign: set[int] = set()
        neighbors: set[int] = set()
        bneigh: dict[int, set[int]] = {}
        ties: list[int] = []
        for ln in case.lines:
            ra, rb = assignment[ln.from_bus], assignment[ln.to_bus]
            if ra == rb:
                continue
            if r == ra:
                mine, theirs, other = ln.from_bus, ln.to_bus, rb
            elif r == rb:
                mine, theirs, other = ln.to_bus, ln.from_bus, ra
            else:
                continue
            boundary.add(mine)
            foreign.add(theirs)
            neighbors.add(other)
            bneigh.setdefault(mine, set()).add(other)
            ties.append(ln.index)
        gens = tuple(sorted(g.id for g in case.generators if assignment[g.bus] == r))
        views.append(RegionView(
            region=r,
            generators=gens,
            internal=frozenset(owned[r] - boundary),
            boundary=frozenset(boundary),
            foreign=frozenset(foreign),
            neighbors=frozenset(neighbors),
            boundary_neighbors={b: frozenset(v) for b, v in sorted(bneigh.items())},
            tie_lines=tuple(sorted(ties)),
        ))
    return PartitionedCase(case=case, assignment=dict(assignment), regions=tuple(views))


def single_region_partition(case: NetworkCase, region_id: int = 1) -> PartitionedCase:
    """The trivial partition placing every bus in one region."""
    return build_partition(case, {b: region_id for b in case.bus_ids()})


@dataclass(frozen=True)
class TimeGrid:
    """Maintenance epochs over an operational step grid.

    The horizon spans ``days`` days with ``steps_per_day`` commitment
    decisions per generator per day; the resulting step count must divide
    evenly into ``num_epochs`` contiguous epoch blocks.
    """

    num_epochs: int
    days: int
    steps_per_day: int

    def __post_init__(self):
        if self.num_epochs < 1 or self.days < 1 or self.steps_per_day < 1:
            raise CaseDomainError("grid dimensions must be >= 1")
        if self.num_steps % self.num_epochs != 0:
            raise CaseDomainError(
                f"{self.num_steps} steps not divisible into {self.num_epochs} epochs")

    @property
    def num_steps(self) -> int:
        return self.days * self.steps_per_day

    @property
    def steps_per_epoch(self) -> int:
        return self.num_steps // self.num_epochs

    def epoch_steps(self, epoch: int) -> range:
        """Zero-based step indices of epoch m (m is 1-based)."""
        if not 1 <= epoch <= self.num_epochs:
            raise IndexError(f"epoch {epoch} outside 1..{self.num_epochs}")
        w = self.steps_per_epoch
        return range((epoch - 1) * w, epoch * w)

    def epoch_of_step(self, step: int) -> int:
        if not 0 <= step < self.num_steps:
            raise IndexError(f"step {step} outside 0..{self.num_steps - 1}")
        return step // self.steps_per_epoch + 1

    def step_of_day(self, step: int) -> int:
        return step % self.steps_per_day


def expand_demand(case: NetworkCase, grid: TimeGrid, profile: Sequence[float]) -> np.ndarray:
    """Per-bus, per-step demand: base demand times the repeating daily profile.

    Returns an array shaped (num_buses, num_steps) in case bus order.
    """
    if len(profile) != grid.steps_per_day:
        raise CaseDomainError(
            f"profile length {len(profile)} != steps per day {grid.steps_per_day}")
    shape = np.asarray(profile, dtype=float)
    if np.any(shape < 0):
        raise CaseDomainError("profile factors must be nonnegative")
    base = np.array([b.demand for b in case.buses], dtype=float)
    factors = np.tile(shape, grid.days)
    return np.outer(base, factors)
