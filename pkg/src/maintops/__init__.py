"""Decentralized joint condition-based maintenance and unit commitment."""

from .case import (NetworkCase, PartitionedCase, RegionView, TimeGrid,
                   expand_demand, parse_case, parse_partition,
                   single_region_partition)
from .consensus import ConsensusState, NeighborShare, init_consensus
from .degradation import (MaintenanceCostCurve, ResidualLife, argmin_epoch,
                          cost_curve, maintenance_cost, survival)
from .milp import (Basis, Limits, LinearModel, SolveResult, SolveStatus,
                   Tolerances, solve_lp, solve_milp)
from .report import RunReport
from .runtime import (AlgorithmOptions, RegionAgent, SubgradientState,
                      centralized_benchmark, run_algorithm, subgradient_step)
from .subproblem import (EpochSlice, ModelMode, PenaltyConfig, RegionProblem,
                         build_epoch_model, build_monolithic_model,
                         extract_solution)

__version__ = "0.1.0"
