"""Scalar constant records used by every certificate computation.

The central objects are :class:`CertificationConstants` (cost-controllability
sequence gamma_1..gamma_K together with the detectability constants) and
:class:`TerminalConstants` (approximate-CLF characterization of a terminal
cost).  Both are plain frozen dataclasses, validated on construction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

INF = float("inf")


class SigmaMode(enum.Enum):
    """How the state measure relates to the detectability storage.

    STAGE_COST: sigma = ell_min, W = 0 (gamma_o bounds 0, eps_o = 1).
    STORAGE:    sigma = W (gamma_o bounds 1, eps_o in (0,1)).
    GENERAL:    anything else admissible.
    """

    STAGE_COST = "stage_cost"
    STORAGE = "storage"
    GENERAL = "general"


class Method(enum.Enum):
    """Which bound family produced a suboptimality index.

    COARSE: Lyapunov-argument bound from the aggregate constants.
    TIGHT_*: analytic worst-case solutions (stage-cost or storage measure).
    LP*: worst-case linear program values.  *_TERMINAL variants account
    for a terminal cost.
    """

    COARSE = "coarse"
    TIGHT_STORAGE = "tight_storage"
    TIGHT_STAGE = "tight_stage"
    COARSE_TERMINAL = "coarse_terminal"
    TIGHT_STAGE_TERMINAL = "tight_stage_terminal"
    TIGHT_STORAGE_TERMINAL = "tight_storage_terminal"
    LP = "lp"
    LP_TERMINAL = "lp_terminal"


class HorizonFormula(enum.Enum):
    COARSE = "coarse"
    STORAGE_CONST = "storage_const"
    COARSE_TERMINAL = "coarse_terminal"
    STAGE_TERMINAL_CONST = "stage_terminal_const"
    STORAGE_TERMINAL_CONST = "storage_terminal_const"


@dataclass(frozen=True)
class CertificationConstants:
    """Constants of the cost controllability / detectability assumptions.

    gamma[k-1] bounds the k-step optimal cost against the state measure,
    V_k(x) <= gamma_k * sigma(x).  eps_o, gamma_o_lower, gamma_o_upper come
    from the dissipation sandwich of the storage function W.
    """

    gamma: tuple[float, ...]
    eps_o: float = 1.0
    gamma_o_lower: float = 0.0
    gamma_o_upper: float = 0.0
    gamma_bar: float | None = None
    sigma_mode: SigmaMode = SigmaMode.GENERAL

    def __post_init__(self) -> None:
        if len(self.gamma) == 0:
            raise ValueError("gamma sequence must be non-empty")
        if any(g < 0 or not math.isfinite(g) for g in self.gamma):
            raise ValueError("gamma_k must be finite and non-negative")
        gbar = max(self.gamma) if self.gamma_bar is None else self.gamma_bar
        object.__setattr__(self, "gamma_bar", float(gbar))
        if self.gamma_bar < max(self.gamma) - 1e-12:
            raise ValueError("gamma_bar must dominate every gamma_k")
        if not (0.0 < self.eps_o <= 1.0):
            raise ValueError("eps_o must lie in (0, 1]")
        if self.gamma_o_lower < 0 or self.gamma_o_upper < self.gamma_o_lower:
            raise ValueError("need 0 <= gamma_o_lower <= gamma_o_upper")
        if self.sigma_mode is SigmaMode.STAGE_COST:
            if self.gamma_o_lower != 0 or self.gamma_o_upper != 0 or self.eps_o != 1.0:
                raise ValueError("sigma=ell mode requires gamma_o=0, eps_o=1")
        if self.sigma_mode is SigmaMode.STORAGE:
            if self.gamma_o_lower != 1 or self.gamma_o_upper != 1:
                raise ValueError("sigma=W mode requires gamma_o_lower=gamma_o_upper=1")
            if not (0.0 < self.eps_o < 1.0):
                raise ValueError("sigma=W mode requires eps_o in (0,1)")

    @property
    def eta(self) -> float:
        """Decay rate 1 - eps_o of the exponential detectability condition."""
        return 1.0 - self.eps_o

    def gamma_k(self, k: int) -> float:
        if k < 1 or k > len(self.gamma):
            raise IndexError(f"gamma_{k} not available (have 1..{len(self.gamma)})")
        return self.gamma[k - 1]

    def truncated(self, K: int) -> "CertificationConstants":
        return replace(self, gamma=self.gamma[:K])

    @staticmethod
    def stage_cost_mode(gamma: Sequence[float], gamma_bar: float | None = None) -> "CertificationConstants":
        return CertificationConstants(
            gamma=tuple(float(g) for g in gamma),
            eps_o=1.0,
            gamma_o_lower=0.0,
            gamma_o_upper=0.0,
            gamma_bar=gamma_bar,
            sigma_mode=SigmaMode.STAGE_COST,
        )

    @staticmethod
    def storage_mode(gamma: Sequence[float], eps_o: float, gamma_bar: float | None = None) -> "CertificationConstants":
        return CertificationConstants(
            gamma=tuple(float(g) for g in gamma),
            eps_o=float(eps_o),
            gamma_o_lower=1.0,
            gamma_o_upper=1.0,
            gamma_bar=gamma_bar,
            sigma_mode=SigmaMode.STORAGE,
        )


@dataclass(frozen=True)
class TerminalConstants:
    """Approximate-CLF characterization of a terminal cost.

    eps_f = inf (math.inf) encodes "no CLF decrease available"; every result
    then reduces to its no-terminal counterpart.  With eps_f finite the
    sandwich c_f_lower <= gamma_f_1/(1+eps_f) <= c_f_upper is enforced, which
    keeps the analytic terminal bounds tight.
    """

    c_f_lower: float
    c_f_upper: float
    eps_f: float
    gamma_f: tuple[float, ...]
    gamma_f_bar: float | None = None

    def __post_init__(self) -> None:
        if len(self.gamma_f) == 0:
            raise ValueError("gamma_f sequence must be non-empty")
        if any(g < 0 or not math.isfinite(g) for g in self.gamma_f):
            raise ValueError("gamma_f_k must be finite and non-negative")
        gbar = max(self.gamma_f) if self.gamma_f_bar is None else self.gamma_f_bar
        object.__setattr__(self, "gamma_f_bar", float(gbar))
        if self.gamma_f_bar < max(self.gamma_f) - 1e-12:
            raise ValueError("gamma_f_bar must dominate every gamma_f_k")
        if self.c_f_lower < 0 or self.c_f_upper < self.c_f_lower:
            raise ValueError("need 0 <= c_f_lower <= c_f_upper")
        if self.eps_f <= 0:
            raise ValueError("eps_f must be positive (use math.inf for none)")
        if math.isfinite(self.eps_f) and self.c_f_upper > 0.0:
            # vanishing terminal costs (c_f_upper = 0) are exempt: the CLF
            # inequality is unusable there and the sandwich cannot hold
            ratio = self.gamma_f[0] / (1.0 + self.eps_f)
            if not (self.c_f_lower - 1e-9 <= ratio <= self.c_f_upper + 1e-9):
                raise ValueError(
                    "terminal sandwich violated: need c_f_lower <= gamma_f_1/(1+eps_f) <= c_f_upper"
                )

    @property
    def has_clf_decrease(self) -> bool:
        return math.isfinite(self.eps_f)

    def gamma_f_k(self, k: int) -> float:
        if k < 1 or k > len(self.gamma_f):
            raise IndexError(f"gamma_f_{k} not available (have 1..{len(self.gamma_f)})")
        return self.gamma_f[k - 1]

    @staticmethod
    def none(gamma: Sequence[float], gamma_bar: float | None = None) -> "TerminalConstants":
        """Vanishing terminal cost: c_f = 0, eps_f = inf, gamma_f = gamma."""
        return TerminalConstants(
            c_f_lower=0.0,
            c_f_upper=0.0,
            eps_f=INF,
            gamma_f=tuple(float(g) for g in gamma),
            gamma_f_bar=gamma_bar,
        )


@dataclass(frozen=True)
class SuboptimalityResult:
    """A suboptimality index alpha at a fixed horizon, alpha <= 1 always.

    alpha > 0 certifies asymptotic stability; alpha = -inf flags a vacuous
    bound (denominator lost positivity or the LP is unbounded below).
    """

    alpha: float
    horizon: int
    method: Method

    def __post_init__(self) -> None:
        if self.alpha > 1.0 + 1e-12:
            raise ValueError(f"alpha={self.alpha} exceeds 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def stabilizing(self) -> bool:
        return self.alpha > 0.0


@dataclass(frozen=True)
class HorizonBound:
    """Threshold n_min: every integer horizon N > n_min is certified."""

    n_min: float
    formula: HorizonFormula

    @property
    def smallest_integer_horizon(self) -> int:
        """Smallest integer N with N > n_min (at least 1)."""
        if math.isinf(self.n_min):
            raise ValueError("bound is vacuous (n_min = inf)")
        return max(1, math.floor(self.n_min) + 1)
