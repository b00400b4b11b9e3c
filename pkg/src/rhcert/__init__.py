"""Stability and suboptimality certification for receding-horizon control.

Closed-form and LP-based suboptimality indices, constant estimation from
linear and nonlinear plant models, and closed-loop validation tooling.
"""

from .constants import (
    CertificationConstants,
    HorizonBound,
    HorizonFormula,
    Method,
    SigmaMode,
    SuboptimalityResult,
    TerminalConstants,
)

__all__ = [
    "CertificationConstants",
    "TerminalConstants",
    "SuboptimalityResult",
    "HorizonBound",
    "HorizonFormula",
    "Method",
    "SigmaMode",
]

__version__ = "0.1.0"
