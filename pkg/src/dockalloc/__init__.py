"""Bike-dock reallocation with multimodular costs: solver, oracle and proximity lab."""

from .costs import (CostModel, PiecewiseLinear, Quadratic, SeparableConvex, Table,
                    check_exchange_inequalities, diag_convexity, validate_multimodular)
from .errors import (CheckFailure, CostDomainError, DimensionError, DockAllocError, InfeasibleError,
                     OracleCapExceeded, PreconditionError)
from .model import Allocation, Instance, check_feasible_dr, l1_distance, linf_distance, objective
from .oracle import ProblemSpec, all_optima, brute_optimum, enumerate_feasible, min_distance_optimum
from .solver import SolveTrace, bike_optimize, gamma_sweep, solve_gamma_floor, solve_scaling
from .transform import DrPrime, derive_dr_prime, gamma_min, scale_view, shrink_window, solve_relaxed

__all__ = [
    "Allocation", "CheckFailure", "CostDomainError", "CostModel", "DimensionError", "DockAllocError",
    "DrPrime", "InfeasibleError", "Instance", "OracleCapExceeded", "PiecewiseLinear", "PreconditionError",
    "ProblemSpec", "Quadratic", "SeparableConvex", "SolveTrace", "Table", "all_optima", "bike_optimize",
    "brute_optimum", "check_exchange_inequalities", "check_feasible_dr", "derive_dr_prime",
    "diag_convexity", "enumerate_feasible", "gamma_min", "gamma_sweep", "l1_distance", "linf_distance",
    "min_distance_optimum", "objective", "scale_view", "shrink_window", "solve_gamma_floor",
    "solve_relaxed", "solve_scaling", "validate_multimodular",
]
