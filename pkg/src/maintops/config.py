"""Run configuration: ``key = value`` text with # comments.

Paths are resolved relative to the config file location.  Every knob has
a default except the three input paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case: str = ""
    partition: str = ""
    rld: str = ""
    out: str = "out"

    epochs: int = 3
    days: int = 3
    cgd: int = 2
    profile: tuple[float, ...] = ()     # defaults to flat when empty

    rho_theta: float = 200.0
    rho_flow: float = 1.0
    rho_production: float = 1.0
    curtail_cost: float = 1e4
    kappa: float = 1.0
    omega_p: float = 1000.0
    omega_f: float = 4000.0
    integration_substeps: int = 64

    pwl_segments: int = 8
    trust_theta: float = 0.5
    trust_flow_frac: float = 0.5
    trust_production_frac: float = 0.1
    abs_deviation_mode: bool = False

    eps: float = 1e-2
    rounds_fmrc: int = 200
    rounds_fmbc: int = 200
    rounds_bmbc: int = 500
    inner_cap: int = 30

    feasibility_tol: float = 1e-7
    optimality_tol: float = 1e-7
    integrality_tol: float = 1e-6
    gap_tol: float = 1e-6
    iteration_cap: int = 50_000
    node_cap: int = 100_000

    transport: str = "inproc"
    round_timeout: float = 300.0
    seed: int = 0
    threads: int = 1
    lp_dump: bool = False

    def validate(self) -> None:
        if not self.case or not self.partition or not self.rld:
            raise ConfigError("case, partition and rld paths are required")
        if not (1 <= self.cgd <= 24):
            raise ConfigError("cgd must lie in 1..24")
        if self.epochs < 1 or self.days < 1:
            raise ConfigError("epochs and days must be >= 1")
        if (self.days * self.cgd) % self.epochs != 0:
            raise ConfigError(
                f"{self.days * self.cgd} steps do not divide into {self.epochs} epochs")
        if self.profile and len(self.profile) != self.cgd:
            raise ConfigError("profile length must equal cgd")
        for name in ("rounds_fmrc", "rounds_fmbc", "rounds_bmbc", "inner_cap",
                     "iteration_cap", "node_cap", "threads", "pwl_segments",
                     "integration_substeps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.transport not in ("inproc", "socket"):
            raise ConfigError("transport must be 'inproc' or 'socket'")
        if self.eps <= 0 or self.round_timeout <= 0:
            raise ConfigError("eps and round_timeout must be > 0")
        for name in ("rho_theta", "rho_flow", "rho_production", "curtail_cost",
                     "kappa", "trust_theta", "trust_flow_frac",
                     "trust_production_frac"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and >= 0")

    @property
    def shape(self) -> tuple[float, ...]:
        return self.profile if self.profile else (1.0,) * self.cgd


_BOOL = {"true": True, "1": True, "yes": True, "on": True,
         "false": False, "0": False, "no": False, "off": False}


def parse_config(text: str, base_dir: str | Path = ".") -> RunConfig:
    cfg = RunConfig()
    spec = {f.name: f.type for f in fields(RunConfig)}
    base = Path(base_dir)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {body!r}")
        key, _, val = body.partition("=")
        key, val = key.strip(), val.strip()
        if key not in spec:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key == "profile":
                setattr(cfg, key, tuple(float(p) for p in val.split(",") if p.strip()))
            elif key in ("case", "partition", "rld", "out"):
                setattr(cfg, key, str((base / val)) if not Path(val).is_absolute() else val)
            elif key in ("abs_deviation_mode", "lp_dump"):
                setattr(cfg, key, _BOOL[val.lower()])
            elif key == "transport":
                setattr(cfg, key, val)
            elif isinstance(getattr(cfg, key), bool):
                setattr(cfg, key, _BOOL[val.lower()])
            elif isinstance(getattr(cfg, key), int):
                setattr(cfg, key, int(val))
            else:
                setattr(cfg, key, float(val))
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from exc
    return cfg


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    cfg = parse_config(p.read_text(), base_dir=p.parent)
    cfg.validate()
    return cfg
