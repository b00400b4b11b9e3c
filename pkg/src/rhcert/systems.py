"""Plant-side data: linear/nonlinear models, stage costs, state measures,
and storage functions.

All costs and measures act in deviation coordinates (x - x_s, u - u_s); the
setpoint lives on the stage cost.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _check_pd(M: np.ndarray, name: str) -> None:
    try:
        np.linalg.cholesky(_sym(M))
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite") from None


@dataclass(frozen=True)
class LinearSystem:
    """Discrete-time x+ = A x + B u with output h(x) = C x and box inputs."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    u_lower: np.ndarray
    u_upper: np.ndarray

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
            raise ValueError("inconsistent system dimensions")
        lo = np.asarray(self.u_lower, dtype=float).reshape(-1)
        hi = np.asarray(self.u_upper, dtype=float).reshape(-1)
        if lo.size != B.shape[1] or hi.size != B.shape[1]:
            raise ValueError("input box must match input dimension")
        if np.any(lo > hi):
            raise ValueError("input box lower bound exceeds upper bound")
        object.__setattr__(self, "u_lower", lo)
        object.__setattr__(self, "u_upper", hi)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.A @ x + self.B @ u

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))


@dataclass(frozen=True)
class QuadraticStageCost:
    """ell(x,u) = ||C(x-x_s)||^2_Qy + q ||x-x_s||^2 + ||u-u_s||^2_R."""

    Q_y: np.ndarray
    q: float
    R: np.ndarray
    x_s: np.ndarray
    u_s: np.ndarray

    def __post_init__(self) -> None:
        Q_y = _sym(np.atleast_2d(np.asarray(self.Q_y, dtype=float)))
        R = _sym(np.atleast_2d(np.asarray(self.R, dtype=float)))
        _check_pd(Q_y, "Q_y")
        _check_pd(R, "R")
        if self.q < 0:
            raise ValueError("q must be non-negative")
        object.__setattr__(self, "Q_y", Q_y)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "x_s", np.asarray(self.x_s, dtype=float).reshape(-1))
        object.__setattr__(self, "u_s", np.asarray(self.u_s, dtype=float).reshape(-1))

    def state_weight(self, C: np.ndarray) -> np.ndarray:
        """Quadratic form of ell at u = u_s: Q_tilde = C' Q_y C + q I."""
        n = C.shape[1]
        return _sym(C.T @ self.Q_y @ C + self.q * np.eye(n))

    def ell(self, x: np.ndarray, u: np.ndarray, C: np.ndarray) -> float:
        dx = np.asarray(x, float) - self.x_s
        du = np.asarray(u, float) - self.u_s
        y = C @ dx
        return float(y @ self.Q_y @ y + self.q * dx @ dx + du @ self.R @ du)

    def ell_min(self, x: np.ndarray, C: np.ndarray) -> float:
        """min_u ell(x, u) assuming u_s is admissible (input term vanishes)."""
        dx = np.asarray(x, float) - self.x_s
        y = C @ dx
        return float(y @ self.Q_y @ y + self.q * dx @ dx)


class MeasureKind(enum.Enum):
    STAGE_COST_MIN = "stage_cost_min"
    QUADRATIC_FORM = "quadratic_form"


@dataclass(frozen=True)
class StateMeasure:
    """Positive definite surrogate for the distance to the target set."""

    kind: MeasureKind
    P_sigma: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind is MeasureKind.QUADRATIC_FORM:
            if self.P_sigma is None:
                raise ValueError("quadratic measure needs P_sigma")
            P = _sym(np.asarray(self.P_sigma, dtype=float))
            _check_pd(P, "P_sigma")
            object.__setattr__(self, "P_sigma", P)

    def matrix(self, cost: QuadraticStageCost, C: np.ndarray) -> np.ndarray:
        """Quadratic form of sigma in deviation coordinates."""
        if self.kind is MeasureKind.QUADRATIC_FORM:
            assert self.P_sigma is not None
            return self.P_sigma
        Qt = cost.state_weight(C)
        _check_pd(Qt, "sigma = ell_min (needs q > 0 or full-rank output)")
        return Qt

    def value(self, x: np.ndarray, cost: QuadraticStageCost, C: np.ndarray) -> float:
        dx = np.asarray(x, float) - cost.x_s
        return float(dx @ self.matrix(cost, C) @ dx)

    @staticmethod
    def stage_cost_min() -> "StateMeasure":
        return StateMeasure(kind=MeasureKind.STAGE_COST_MIN)

    @staticmethod
    def quadratic(P: np.ndarray) -> "StateMeasure":
        return StateMeasure(kind=MeasureKind.QUADRATIC_FORM, P_sigma=P)


class StorageKind(enum.Enum):
    ZERO = "zero"
    QUADRATIC_FORM = "quadratic_form"
    NARX_WEIGHTS = "narx_weights"


@dataclass(frozen=True)
class StorageFunction:
    """Detectability storage W.

    ZERO:            W = 0 (sigma = ell_min route, eps_o = 1).
    QUADRATIC_FORM:  W(x) = ||x - x_s||^2_{P_o}.
    NARX_WEIGHTS:    W(t) = sum_{k=1..nu} (nu+1-k)/nu * ell(t-k), evaluated
                     along trajectories; eps_o = 1/nu exactly.
    """

    kind: StorageKind
    eps_o: float
    P_o: np.ndarray | None = None
    nu: int | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.eps_o <= 1.0):
            raise ValueError("eps_o must lie in (0,1]")
        if self.kind is StorageKind.QUADRATIC_FORM:
            if self.P_o is None:
                raise ValueError("quadratic storage needs P_o")
            P = _sym(np.asarray(self.P_o, dtype=float))
            if np.min(np.linalg.eigvalsh(P)) < -1e-10:
                raise ValueError("P_o must be positive semi-definite")
            object.__setattr__(self, "P_o", P)
        if self.kind is StorageKind.NARX_WEIGHTS:
            if self.nu is None or self.nu < 1:
                raise ValueError("NARX storage needs lag nu >= 1")
            if abs(self.eps_o - 1.0 / self.nu) > 1e-15:
                raise ValueError("NARX storage requires eps_o = 1/nu exactly")

    def value(self, x: np.ndarray, cost: QuadraticStageCost) -> float:
        if self.kind is StorageKind.ZERO:
            return 0.0
        if self.kind is StorageKind.QUADRATIC_FORM:
            dx = np.asarray(x, float) - cost.x_s
            return float(dx @ self.P_o @ dx)
        raise ValueError("NARX storage is trajectory-based; use narx_value")

    def narx_weights(self) -> np.ndarray:
        """Weights on ell(t-1), ..., ell(t-nu)."""
        if self.kind is not StorageKind.NARX_WEIGHTS:
            raise ValueError("not a NARX storage")
        nu = int(self.nu)
        return np.array([(nu + 1 - k) / nu for k in range(1, nu + 1)])

    def narx_value(self, past_stage_costs: np.ndarray) -> float:
        """W at time t from ell(t-1), ..., ell(t-nu) (most recent first)."""
        w = self.narx_weights()
        past = np.asarray(past_stage_costs, float)
        if past.size != w.size:
            raise ValueError(f"need the last {w.size} stage costs")
        return float(w @ past)

    @staticmethod
    def zero() -> "StorageFunction":
        return StorageFunction(kind=StorageKind.ZERO, eps_o=1.0)

    @staticmethod
    def quadratic(P_o: np.ndarray, eps_o: float) -> "StorageFunction":
        return StorageFunction(kind=StorageKind.QUADRATIC_FORM, eps_o=eps_o, P_o=P_o)


@dataclass(frozen=True)
class NonlinearSystem:
    """Continuous-time model integrated with fixed-step RK4.

    f, jac_x, jac_u evaluate the vector field and its Jacobians; states may
    be clamped non-negative before evaluation (water levels).
    """

    name: str
    n: int
    m: int
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jac_x: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jac_u: Callable[[np.ndarray, np.ndarray], np.ndarray]
    T_s: float
    C: np.ndarray
    u_lower: np.ndarray
    u_upper: np.ndarray
    clamp_nonnegative: bool = False
    scheme: str = "rk4"
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.T_s <= 0:
            raise ValueError("T_s must be positive")
        object.__setattr__(self, "C", np.asarray(self.C, dtype=float))
        object.__setattr__(self, "u_lower", np.asarray(self.u_lower, dtype=float).reshape(-1))
        object.__setattr__(self, "u_upper", np.asarray(self.u_upper, dtype=float).reshape(-1))

    def step(self, x: np.ndarray, u: np.ndarray, substeps: int = 1) -> np.ndarray:
        """One sampling period of RK4 (optionally split into substeps).

        The vector field itself guards any square roots (clamps its argument
        at zero), so no state projection happens here and the discrete map is
        identical to the one differentiated in step_with_jacobians.
        """
        h = self.T_s / substeps
        z = np.asarray(x, float)
        for _ in range(substeps):
            k1 = self.f(z, u)
            k2 = self.f(z + 0.5 * h * k1, u)
            k3 = self.f(z + 0.5 * h * k2, u)
            k4 = self.f(z + h * k3, u)
            z = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return z

    def step_with_jacobians(
        self, x: np.ndarray, u: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x+, d x+/dx, d x+/du) through one RK4 step (no substepping)."""
        h = self.T_s
        x = np.asarray(x, float)
        I = np.eye(self.n)

        k1 = self.f(x, u)
        J1x, J1u = self.jac_x(x, u), self.jac_u(x, u)
        x2 = x + 0.5 * h * k1
        k2 = self.f(x2, u)
        A2, B2 = self.jac_x(x2, u), self.jac_u(x2, u)
        J2x = A2 @ (I + 0.5 * h * J1x)
        J2u = A2 @ (0.5 * h * J1u) + B2
        x3 = x + 0.5 * h * k2
        k3 = self.f(x3, u)
        A3, B3 = self.jac_x(x3, u), self.jac_u(x3, u)
        J3x = A3 @ (I + 0.5 * h * J2x)
        J3u = A3 @ (0.5 * h * J2u) + B3
        x4 = x + h * k3
        k4 = self.f(x4, u)
        A4, B4 = self.jac_x(x4, u), self.jac_u(x4, u)
        J4x = A4 @ (I + h * J3x)
        J4u = A4 @ (h * J3u) + B4

        x_next = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        Ax = I + h / 6.0 * (J1x + 2 * J2x + 2 * J3x + J4x)
        Bu = h / 6.0 * (J1u + 2 * J2u + 2 * J3u + J4u)
        return x_next, Ax, Bu
