"""Second-order affine-scaling interior-point method for bound-constrained minimization."""

from .model import Bounds, BoxProblem, EvalCounters, OracleError, evaluate, is_strictly_interior
from .ohm import HomogenizedMatrix, OhmSolution, assemble_f, leftmost_eigenpair, verify_optimality
from .scaling import ScaledModel, build_scaled_model, compute_jv, compute_v, kkt_residual
from .solver import SolveReport, SolverParams, StepOutcome, alpha_max, backtrack, select_direction, solve, sosp_check

__all__ = [
    "Bounds", "BoxProblem", "EvalCounters", "OracleError", "evaluate", "is_strictly_interior",
    "HomogenizedMatrix", "OhmSolution", "assemble_f", "leftmost_eigenpair", "verify_optimality",
    "ScaledModel", "build_scaled_model", "compute_jv", "compute_v", "kkt_residual",
    "SolveReport", "SolverParams", "StepOutcome", "alpha_max", "backtrack", "select_direction", "solve", "sosp_check",
]
