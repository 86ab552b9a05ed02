"""Consensus state and update algebra for the regional coordination scheme.

Each region keeps, per operational step: averaged phase angles for its
boundary and foreign buses, averaged tie-line flows, a regional
production target, and the matching Lagrangian multipliers.  The update
operations are pure functions; the runtime wires them to the message
exchange.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .case import NetworkCase, RegionView, TimeGrid


class ConsensusError(ValueError):
    """Missing neighbor estimate or mismatched index sets."""


@dataclass
class ConsensusState:
    """One region's view of the coupling quantities, indexed per step."""

    region: int
    buses: tuple[int, ...]          # sorted boundary+foreign buses
    tie_lines: tuple[int, ...]      # sorted tie-line indices
    num_steps: int
    theta_bar: np.ndarray           # (len(buses), T)
    lam: np.ndarray                 # (len(buses), T)
    flow_bar: np.ndarray            # (len(tie_lines), T)
    phi: np.ndarray                 # (len(tie_lines), T)
    p_bar: np.ndarray               # (T,)
    eta: np.ndarray                 # (T,)
    round: int = 0
    _bus_row: dict = field(default_factory=dict, repr=False)
    _tie_row: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._bus_row = {b: i for i, b in enumerate(self.buses)}
        self._tie_row = {l: i for i, l in enumerate(self.tie_lines)}
        self.validate()

    def validate(self) -> None:
        nb, nl, t = len(self.buses), len(self.tie_lines), self.num_steps
        for name, arr, shape in (("theta_bar", self.theta_bar, (nb, t)),
                                 ("lam", self.lam, (nb, t)),
                                 ("flow_bar", self.flow_bar, (nl, t)),
                                 ("phi", self.phi, (nl, t)),
                                 ("p_bar", self.p_bar, (t,)),
                                 ("eta", self.eta, (t,))):
            if arr.shape != shape:
                raise ConsensusError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ConsensusError(f"{name} contains non-finite entries")

    def tracks(self, bus: int) -> bool:
        return bus in self._bus_row

    def bus_row(self, bus: int) -> int:
        try:
            return self._bus_row[bus]
        except KeyError:
            raise ConsensusError(f"bus {bus} not tracked by region {self.region}") from None

    def tie_row(self, line: int) -> int:
        try:
            return self._tie_row[line]
        except KeyError:
            raise ConsensusError(f"line {line} not tracked by region {self.region}") from None

    def copy(self) -> "ConsensusState":
        return ConsensusState(
            region=self.region, buses=self.buses, tie_lines=self.tie_lines,
            num_steps=self.num_steps, theta_bar=self.theta_bar.copy(),
            lam=self.lam.copy(), flow_bar=self.flow_bar.copy(), phi=self.phi.copy(),
            p_bar=self.p_bar.copy(), eta=self.eta.copy(), round=self.round)


def init_consensus(region: RegionView, case: NetworkCase, grid: TimeGrid,
                   demand: np.ndarray) -> ConsensusState:
    """Fresh consensus state: zero angles, flows and multipliers.

    The production target starts at the region's own demand, which is
    locally computable and keeps the first-round production trust
    interval around a sensible operating point.
    """
    buses = tuple(sorted(region.coupled))
    ties = tuple(sorted(region.tie_lines))
    t = grid.num_steps
    bus_order = {b.id: i for i, b in enumerate(case.buses)}
    own_rows = [bus_order[b] for b in sorted(region.owned)]
    p0 = demand[own_rows].sum(axis=0) if own_rows else np.zeros(t)
    return ConsensusState(
        region=region.region, buses=buses, tie_lines=ties, num_steps=t,
        theta_bar=np.zeros((len(buses), t)), lam=np.zeros((len(buses), t)),
        flow_bar=np.zeros((len(ties), t)), phi=np.zeros((len(ties), t)),
        p_bar=np.asarray(p0, dtype=float).copy(), eta=np.zeros(t))


@dataclass(frozen=True)
class NeighborShare:
    """Payload exchanged between regions in one round.

    ``theta`` carries the sender's phase-angle estimates for exactly the
    buses it shares with the receiver: the sender's boundary buses the
    receiver sees as foreign, plus the receiver's boundary buses the
    sender sees as foreign.  ``violation`` and ``converged`` ride on the
    all-region payloads.
    """

    sender: int
    round: int
    theta: Mapping[int, np.ndarray] = field(default_factory=dict)
    violation: np.ndarray | None = None
    converged: bool | None = None

    def check_coverage(self, sender_view: RegionView, receiver_view: RegionView) -> None:
        expected = ((sender_view.boundary & receiver_view.foreign)
                    | (sender_view.foreign & receiver_view.boundary))
        got = set(self.theta)
        if got != expected:
            raise ConsensusError(
                f"share from {self.sender} covers {sorted(got)}, expected {sorted(expected)}")


# -- pure update operations ---------------------------------------------------

def intermediate_theta(local: float | np.ndarray,
                       estimates: Sequence[float | np.ndarray]):
    """Average of the local estimate and every neighbor estimate."""
    total = np.asarray(local, dtype=float).copy()
    for est in estimates:
        total = total + np.asarray(est, dtype=float)
    return total / (len(estimates) + 1)


def intermediate_flow(susceptance: float, local_pair, neighbor_pair):
    """Average of the two co-owners' flow estimates for one tie line."""
    lu, lv = local_pair
    nu, nv = neighbor_pair
    local_flow = susceptance * (np.asarray(lu, dtype=float) - np.asarray(lv, dtype=float))
    neighbor_flow = susceptance * (np.asarray(nu, dtype=float) - np.asarray(nv, dtype=float))
    return (local_flow + neighbor_flow) / 2.0


def update_lambda(lam, theta, theta_bar, rho_theta: float):
    """Multiplier ascent on the phase-angle deviation."""
    return np.asarray(lam, dtype=float) + rho_theta * (
        np.asarray(theta, dtype=float) - np.asarray(theta_bar, dtype=float))


def update_phi(phi, flow, flow_bar, rho_flow: float):
    """Multiplier ascent on the tie-line flow deviation."""
    return np.asarray(phi, dtype=float) + rho_flow * (
        np.asarray(flow, dtype=float) - np.asarray(flow_bar, dtype=float))


def local_violation(demand, psi, production):
    """Absolute gap between net effective demand and regional production, per step.

    ``demand`` and ``psi`` are (owned buses, T); ``production`` is (T,).
    """
    demand = np.atleast_2d(np.asarray(demand, dtype=float))
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    net = (demand - psi).sum(axis=0)
    return np.abs(net - np.asarray(production, dtype=float))


def production_target(production, violations):
    """Regional production target: own production plus the mean violation.

    ``violations`` must include every region's share, the caller's own
    included.
    """
    violations = [np.asarray(v, dtype=float) for v in violations]
    if not violations:
        raise ConsensusError("production target needs at least the local violation")
    return np.asarray(production, dtype=float) + sum(violations) / len(violations)


def update_eta(eta, p, p_bar, rho_production: float):
    """Multiplier ascent on the production-target deviation."""
    return np.asarray(eta, dtype=float) + rho_production * (
        np.asarray(p, dtype=float) - np.asarray(p_bar, dtype=float))


def check_local_convergence(flow, flow_bar, flow_bar_prev, eps: float) -> bool:
    """Max-norm test over tie-line flows: primal gap and target drift both below eps."""
    flow = np.asarray(flow, dtype=float)
    flow_bar = np.asarray(flow_bar, dtype=float)
    flow_bar_prev = np.asarray(flow_bar_prev, dtype=float)
    if flow.size == 0:
        return True
    primal = float(np.max(np.abs(flow - flow_bar)))
    drift = float(np.max(np.abs(flow_bar - flow_bar_prev)))
    return primal < eps and drift < eps
