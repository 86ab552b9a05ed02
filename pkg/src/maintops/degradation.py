"""Degradation-driven maintenance cost curves.

A generator's remaining life is described by a survival function
S(t) = P(remaining life > t), with t measured in maintenance epochs.
Performing maintenance at time t costs, per unit of expected cycle
length,

    cost(t) = kappa * (omega_p * S(t) + omega_f * (1 - S(t)))
                    / (integral_0^t S(z) dz + age)

where omega_p is the preventive-maintenance cost, omega_f the cost of
an unexpected failure, kappa a dimensionless criticality coefficient,
and age the time already survived.  Early maintenance wastes useful
life (small denominator); late maintenance risks paying omega_f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ResidualLifeError(ValueError):
    """Invalid distribution parameters or evaluation point."""


@dataclass(frozen=True)
class ResidualLife:
    """Remaining-life distribution: exponential, Weibull, or tabulated survival points.

    ``age`` is the time (in epochs) the unit has already been in service;
    it enters the cost denominator only.
    """

    kind: str
    age: float = 0.0
    rate: float = 0.0          # exponential
    shape: float = 0.0         # weibull
    scale: float = 0.0         # weibull
    points: tuple[tuple[float, float], ...] = ()  # tabulated (t, S(t))

    def __post_init__(self):
        if self.age < 0:
            raise ResidualLifeError("age must be >= 0")
        if self.kind == "exponential":
            if self.rate <= 0:
                raise ResidualLifeError("exponential rate must be > 0")
        elif self.kind == "weibull":
            if self.shape <= 0 or self.scale <= 0:
                raise ResidualLifeError("weibull shape and scale must be > 0")
        elif self.kind == "tabulated":
            if len(self.points) < 2:
                raise ResidualLifeError("tabulated kind needs at least two points")
            ts = [p[0] for p in self.points]
            ss = [p[1] for p in self.points]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ResidualLifeError("tabulated times must be strictly increasing")
            if any(b > a for a, b in zip(ss, ss[1:])):
                raise ResidualLifeError("tabulated survival values must be nonincreasing")
            if any(not (0.0 <= s <= 1.0) for s in ss):
                raise ResidualLifeError("tabulated survival values must lie in [0, 1]")
        else:
            raise ResidualLifeError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def exponential(cls, rate: float, age: float = 0.0) -> "ResidualLife":
        return cls(kind="exponential", rate=rate, age=age)

    @classmethod
    def weibull(cls, shape: float, scale: float, age: float = 0.0) -> "ResidualLife":
        return cls(kind="weibull", shape=shape, scale=scale, age=age)

    @classmethod
    def tabulated(cls, points, age: float = 0.0) -> "ResidualLife":
        return cls(kind="tabulated", points=tuple((float(t), float(s)) for t, s in points), age=age)


def survival(rld: ResidualLife, t: float) -> float:
    """P(remaining life > t).

    Tabulated distributions interpolate linearly between points and
    extrapolate with constants (1 before the first point, the last value
    after the last point).
    """
    if t < 0:
        raise ResidualLifeError(f"survival time must be >= 0, got {t}")
    if rld.kind == "exponential":
        return math.exp(-rld.rate * t)
    if rld.kind == "weibull":
        return math.exp(-((t / rld.scale) ** rld.shape))
    ts = [p[0] for p in rld.points]
    ss = [p[1] for p in rld.points]
    if t <= ts[0]:
        return 1.0 if t < ts[0] else ss[0]
    if t >= ts[-1]:
        return ss[-1]
    return float(np.interp(t, ts, ss))


def survival_integral(rld: ResidualLife, t: float, substeps: int = 64) -> float:
    """Composite-trapezoid integral of S over [0, t] with ``substeps`` nodes per epoch."""
    if t < 0:
        raise ResidualLifeError(f"integral bound must be >= 0, got {t}")
    if t == 0:
        return 0.0
    n = max(1, int(math.ceil(t * substeps)))
    zs = np.linspace(0.0, t, n + 1)
    vals = np.array([survival(rld, z) for z in zs])
    return float(np.trapezoid(vals, zs))


def maintenance_cost(rld: ResidualLife, kappa: float, omega_p: float, omega_f: float,
                     t: float, substeps: int = 64) -> float:
    """Expected maintenance cost rate for performing maintenance at time t."""
    if t < 0:
        raise ResidualLifeError(f"maintenance time must be >= 0, got {t}")
    denom = survival_integral(rld, t, substeps) + rld.age
    if denom <= 0.0:
        raise ResidualLifeError("cost undefined at t=0 for a unit of age 0")
    s = survival(rld, t)
    return kappa * (omega_p * s + omega_f * (1.0 - s)) / denom


@dataclass(frozen=True)
class MaintenanceCostCurve:
    """Per-epoch expected maintenance cost for one generator."""

    generator: int
    values: tuple[float, ...]
    kappa: float
    omega_p: float
    omega_f: float

    def __post_init__(self):
        if not self.values:
            raise ResidualLifeError("cost curve must have at least one epoch")
        if any(not math.isfinite(v) for v in self.values):
            raise ResidualLifeError("cost curve entries must be finite")

    def __len__(self) -> int:
        return len(self.values)

    def value(self, epoch: int) -> float:
        """Cost of maintaining in epoch m (1-based)."""
        return self.values[epoch - 1]


def cost_curve(rld: ResidualLife, kappa: float, omega_p: float, omega_f: float,
               num_epochs: int, generator: int = 0, substeps: int = 64) -> MaintenanceCostCurve:
    """Evaluate the cost at each epoch's midpoint (m - 0.5 epochs from now).

    For a unit of age 0 the first epoch is evaluated at the epoch end
    instead, where the cost is still defined.
    """
    if num_epochs < 1:
        raise ResidualLifeError("need at least one epoch")
    values = []
    for m in range(1, num_epochs + 1):
        # new units get their first epoch priced at the epoch end, clear of
        # the t -> 0 singularity of the cost denominator
        t = 1.0 if (m == 1 and rld.age == 0.0) else m - 0.5
        values.append(maintenance_cost(rld, kappa, omega_p, omega_f, t, substeps))
    return MaintenanceCostCurve(generator=generator, values=tuple(values),
                                kappa=kappa, omega_p=omega_p, omega_f=omega_f)


def argmin_epoch(curve: MaintenanceCostCurve) -> int:
    """Earliest epoch (1-based) attaining the curve minimum."""
    best = min(curve.values)
    for m, v in enumerate(curve.values, start=1):
        if v == best:
            return m
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class GeneratorRld:
    """One generator's distribution plus its preventive/failure costs."""

    generator: int
    rld: ResidualLife
    omega_p: float
    omega_f: float


def parse_rld_file(text: str, base_dir: str | Path = ".",
                   default_omega_p: float = 1000.0,
                   default_omega_f: float = 4000.0) -> dict[int, GeneratorRld]:
    """Parse per-generator distribution lines.

    Grammar, one generator per line (# comments allowed):

        gen_id exponential <rate> <age> [omega_p omega_f]
        gen_id weibull <shape> <scale> <age> [omega_p omega_f]
        gen_id tabulated <table_path> <age> [omega_p omega_f]

    A tabulated line references a two-column ``t S(t)`` text file,
    resolved relative to ``base_dir``.
    """
    out: dict[int, GeneratorRld] = {}
    base = Path(base_dir)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        toks = body.split()
        try:
            gid = int(toks[0])
            kind = toks[1]
            if kind == "exponential":
                core, rest = 2, toks[2:]
                rld = ResidualLife.exponential(float(rest[0]), float(rest[1]))
                tail = rest[2:]
            elif kind == "weibull":
                rest = toks[2:]
                rld = ResidualLife.weibull(float(rest[0]), float(rest[1]), float(rest[2]))
                tail = rest[3:]
            elif kind == "tabulated":
                rest = toks[2:]
                table = (base / rest[0]).read_text()
                pts = []
                for trow in table.splitlines():
                    tbody = trow.split("#", 1)[0].strip()
                    if tbody:
                        a, b = tbody.split()
                        pts.append((float(a), float(b)))
                rld = ResidualLife.tabulated(pts, float(rest[1]))
                tail = rest[2:]
            else:
                raise ResidualLifeError(f"line {lineno}: unknown kind {kind!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ResidualLifeError):
                raise
            raise ResidualLifeError(f"line {lineno}: malformed distribution line: {body!r}") from exc
        if len(tail) not in (0, 2):
            raise ResidualLifeError(f"line {lineno}: expected optional 'omega_p omega_f' pair")
        op = float(tail[0]) if tail else default_omega_p
        of = float(tail[1]) if tail else default_omega_f
        if op <= 0 or of <= 0:
            raise ResidualLifeError(f"line {lineno}: maintenance costs must be > 0")
        if gid in out:
            raise ResidualLifeError(f"line {lineno}: duplicate generator {gid}")
        out[gid] = GeneratorRld(generator=gid, rld=rld, omega_p=op, omega_f=of)
    return out
