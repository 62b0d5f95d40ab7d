"""AC power flow, congestion margins and the linear flow model used by the DSO."""

from .ac import (CongestionReport, DivergenceError, MissingExchangeError, PfInjections, PfSolution,
                 PowerFlowError, SingularJacobianError, admittance, assemble_injections, branch_alpha,
                 congestion_report, mismatch, powerflow_csv, solve_newton)
from .linear import POLYGON_SIDES, Linearization, polygon_cuts, sensitivities, tangent_cut

__all__ = [
    "CongestionReport", "DivergenceError", "Linearization", "MissingExchangeError", "POLYGON_SIDES",
    "PfInjections", "PfSolution", "PowerFlowError", "SingularJacobianError", "admittance",
    "assemble_injections", "branch_alpha", "congestion_report", "mismatch", "polygon_cuts", "powerflow_csv",
    "sensitivities", "solve_newton", "tangent_cut",
]
