"""Dense LP container and plain-text dump."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class DenseLp:
    """min objective . x  s.t.  a_ub x <= b_ub,  a_eq x = b_eq,  x_j >= 0
    except where ``free`` marks the variable as unbounded below.
    """

    objective: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    free: np.ndarray
    names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=float)
        n = self.objective.size
        self.a_ub = np.asarray(self.a_ub, dtype=float).reshape(-1, n)
        self.b_ub = np.asarray(self.b_ub, dtype=float).reshape(-1)
        self.a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        self.free = np.asarray(self.free, dtype=bool).reshape(n)
        if self.a_ub.shape[0] != self.b_ub.size or self.a_eq.shape[0] != self.b_eq.size:
            raise ValueError("inconsistent row dimensions")
        for arr in (self.objective, self.a_ub, self.b_ub, self.a_eq, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")
        if not self.names:
            self.names = [f"x{j}" for j in range(n)]
        if len(self.names) != n:
            raise ValueError("one name per variable required")

    @property
    def n_vars(self) -> int:
        return self.objective.size

    def residuals(self, x: np.ndarray) -> tuple[float, float, float]:
        """(max ub violation, max |eq residual|, max lower-bound violation)."""
        ub = float(np.max(self.a_ub @ x - self.b_ub)) if self.b_ub.size else 0.0
        eq = float(np.max(np.abs(self.a_eq @ x - self.b_eq))) if self.b_eq.size else 0.0
        lb = float(np.max(np.where(self.free, 0.0, -x))) if x.size else 0.0
        return ub, eq, lb

    def dump(self, path: str | Path) -> None:
        """Write the instance in plain-text LP interchange format.

        Column order in every expression follows ``names`` declaration order.
        """
        lines = ["\\ rhcert dense LP", "Minimize", " obj: " + _expr(self.objective, self.names)]
        lines.append("Subject To")
        for i in range(self.b_ub.size):
            lines.append(f" c{i}: " + _expr(self.a_ub[i], self.names) + f" <= {self.b_ub[i]:.17g}")
        for i in range(self.b_eq.size):
            lines.append(f" e{i}: " + _expr(self.a_eq[i], self.names) + f" = {self.b_eq[i]:.17g}")
        lines.append("Bounds")
        for j, name in enumerate(self.names):
            lines.append(f" {name} free" if self.free[j] else f" 0 <= {name}")
        lines.append("End")
        Path(path).write_text("\n".join(lines) + "\n")


def _expr(coeffs: np.ndarray, names: list[str]) -> str:
    terms = []
    for cj, name in zip(coeffs, names):
        if cj == 0.0:
            continue
        sign = "-" if cj < 0 else ("+" if terms else "")
        terms.append(f"{sign} {abs(cj):.17g} {name}".strip())
    return " ".join(terms) if terms else "0 " + names[0]


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    objective: float
    x: np.ndarray
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL
