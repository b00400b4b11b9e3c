from .certificates import alpha_from_lp, alpha_lp, alpha_lp_terminal, build_worst_case_lp, build_worst_case_lp_terminal
from .model import DenseLp, LpSolution, LpStatus
from .simplex import SimplexOptions, solve_lp

__all__ = [
    "DenseLp",
    "LpSolution",
    "LpStatus",
    "SimplexOptions",
    "solve_lp",
    "build_worst_case_lp",
    "build_worst_case_lp_terminal",
    "alpha_from_lp",
    "alpha_lp",
    "alpha_lp_terminal",
]
