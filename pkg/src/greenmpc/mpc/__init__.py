"""Receding-horizon lighting optimisation."""
from .problem import (FeasibilityReport, MpcError, MpcInfeasibleError, MpcProblem,
                      MpcWeights, assemble_problem, feasibility_check)
from .bnb import MpcSolution, brute_force_solve, objective_value, solve
from .receding import (CommitError, DayResult, Schedule, StepDiagnostics, commit, run_day,
                       write_diagnostics_csv)
from .verify import ConstraintViolation, verify_solution

__all__ = [
    "CommitError", "ConstraintViolation", "DayResult", "FeasibilityReport", "MpcError",
    "MpcInfeasibleError", "MpcProblem", "MpcSolution", "MpcWeights", "Schedule",
    "StepDiagnostics", "assemble_problem", "brute_force_solve", "commit", "feasibility_check",
    "objective_value", "run_day", "solve", "verify_solution", "write_diagnostics_csv",
]
