"""Embedded MILP facility: model builder, bounded simplex, branch-and-bound.

The simplex kernel is compiled with Cython when available; set
``LECFLEX_PURE_PYTHON=1`` to force the numpy implementation.
"""

from .bnb import Solution, SolveOptions, SolveStatus, solve, solve_highs, solve_lp
from .lpformat import to_lp_string, write_lp
from .model import (INF, Constraint, ForeignVariableError, InvalidBoundsError, LinExpr, Model,
                    ModelError, Var, as_expr, quicksum)
from .oracle import OracleLimitError, brute_force_solve
from .simplex import kernel_name, use_kernel

__all__ = [
    "INF", "Constraint", "ForeignVariableError", "InvalidBoundsError", "LinExpr", "Model",
    "ModelError", "OracleLimitError", "Solution", "SolveOptions", "SolveStatus", "Var", "as_expr",
    "brute_force_solve", "kernel_name", "quicksum", "solve", "solve_highs", "solve_lp",
    "to_lp_string", "use_kernel", "write_lp",
]
