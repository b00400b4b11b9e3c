"""Finite-horizon optimal control: Riccati tools and a single-shooting
projected-gradient solver with box input constraints."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .systems import LinearSystem, NonlinearSystem, QuadraticStageCost


class TerminalVariant(enum.Enum):
    NONE = "none"
    SCALED_MEASURE = "scaled_measure"
    FINITE_TAIL = "finite_tail"
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class TerminalCostSpec:
    """Terminal penalty attached to the optimal control problem.

    SCALED_MEASURE and QUADRATIC carry a quadratic form P_f (for the scaled
    variant P_f = omega_tilde * P_sigma); FINITE_TAIL simulates the fallback
    controller kappa = u_s for M steps from the predicted terminal state and
    sums the stage costs.
    """

    variant: TerminalVariant = TerminalVariant.NONE
    P_f: np.ndarray | None = None
    M: int = 0
    omega: float = 0.0

    def __post_init__(self) -> None:
        if self.variant in (TerminalVariant.SCALED_MEASURE, TerminalVariant.QUADRATIC):
            if self.P_f is None:
                raise ValueError(f"{self.variant.value} terminal needs P_f")
            object.__setattr__(self, "P_f", np.asarray(self.P_f, dtype=float))
        if self.variant is TerminalVariant.FINITE_TAIL and self.M < 1:
            raise ValueError("finite-tail terminal needs M >= 1")

    @staticmethod
    def none() -> "TerminalCostSpec":
        return TerminalCostSpec()

    @staticmethod
    def quadratic(P_f: np.ndarray) -> "TerminalCostSpec":
        return TerminalCostSpec(variant=TerminalVariant.QUADRATIC, P_f=P_f)

    @staticmethod
    def scaled_measure(omega_tilde: float, P_sigma: np.ndarray) -> "TerminalCostSpec":
        return TerminalCostSpec(
            variant=TerminalVariant.SCALED_MEASURE,
            P_f=omega_tilde * np.asarray(P_sigma, dtype=float),
            omega=omega_tilde,
        )

    @staticmethod
    def finite_tail(M: int) -> "TerminalCostSpec":
        return TerminalCostSpec(variant=TerminalVariant.FINITE_TAIL, M=M)


def finite_horizon_lqr(
    sys: LinearSystem,
    cost: QuadraticStageCost,
    P_f: np.ndarray | None,
    N: int,
) -> tuple[np.ndarray, float]:
    """Backward Riccati over N steps (input box ignored).

    Returns the time-0 feedback gain K (u = u_s - K (x - x_s)) and the
    spectral radius of A - B K.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    A, B = sys.A, sys.B
    Qt = cost.state_weight(sys.C)
    R = np.asarray(cost.R, float)
    P = np.zeros_like(A) if P_f is None else np.asarray(P_f, float).copy()
    K = np.zeros((sys.m, sys.n))
    for _ in range(N):
        S = R + B.T @ P @ B
        try:
            K = np.linalg.solve(S, B.T @ P @ A)
        except np.linalg.LinAlgError:
            raise ValueError("singular inner matrix in Riccati recursion") from None
        P = Qt + A.T @ P @ A - A.T @ P @ B @ K
        P = 0.5 * (P + P.T)
    rho = float(np.max(np.abs(np.linalg.eigvals(A - B @ K))))
    return K, rho


def stationary_riccati(
    sys: LinearSystem, cost: QuadraticStageCost, tol: float = 1e-12, max_iters: int = 100000
) -> np.ndarray:
    """Fixed point of the Riccati recursion (infinite-horizon value matrix)."""
    A, B = sys.A, sys.B
    Qt = cost.state_weight(sys.C)
    R = np.asarray(cost.R, float)
    P = np.zeros_like(A)
    for _ in range(max_iters):
        S = R + B.T @ P @ B
        K = np.linalg.solve(S, B.T @ P @ A)
        P_new = 0.5 * ((Qt + A.T @ P @ A - A.T @ P @ B @ K) + (Qt + A.T @ P @ A - A.T @ P @ B @ K).T)
        if np.max(np.abs(P_new - P)) <= tol * max(1.0, np.max(np.abs(P_new))):
            return P_new
        P = P_new
    return P


@dataclass
class OcpSolution:
    inputs: np.ndarray  # (N, m)
    states: np.ndarray  # (N+1, n)
    objective: float
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class SolverSettings:
    tol_linear: float = 1e-8
    tol_nonlinear: float = 1e-6
    max_iters: int = 3000
    backtrack: float = 0.5
    lipschitz_growth: float = 2.0


def _rollout(plant, cost, U, x0):
    """States, stage-Jacobian pairs, and stage costs along an input sequence."""
    N = U.shape[0]
    n = x0.size
    xs = np.empty((N + 1, n))
    xs[0] = x0
    As: list[np.ndarray] = []
    Bs: list[np.ndarray] = []
    linear = isinstance(plant, LinearSystem)
    for k in range(N):
        if linear:
            xs[k + 1] = plant.step(xs[k], U[k])
        else:
            x_next, Ak, Bk = plant.step_with_jacobians(xs[k], U[k])
            xs[k + 1] = x_next
            As.append(Ak)
            Bs.append(Bk)
    if linear:
        As = [plant.A] * N
        Bs = [plant.B] * N
    return xs, As, Bs


def _terminal_value_grad(plant, cost, terminal: TerminalCostSpec, x_N: np.ndarray):
    if terminal.variant is TerminalVariant.NONE:
        return 0.0, np.zeros_like(x_N)
    if terminal.variant in (TerminalVariant.QUADRATIC, TerminalVariant.SCALED_MEASURE):
        dx = x_N - cost.x_s
        return float(dx @ terminal.P_f @ dx), 2.0 * terminal.P_f @ dx
    # finite tail: simulate kappa = u_s for M steps, accumulate stage costs
    Qt2 = 2.0 * cost.state_weight(plant.C)
    val = 0.0
    z = x_N.copy()
    As: list[np.ndarray] = []
    grads: list[np.ndarray] = []
    linear = isinstance(plant, LinearSystem)
    for _ in range(terminal.M):
        val += cost.ell(z, cost.u_s, plant.C)
        grads.append(Qt2 @ (z - cost.x_s))
        if linear:
            As.append(plant.A)
            z = plant.step(z, cost.u_s)
        else:
            z, Ak, _ = plant.step_with_jacobians(z, cost.u_s)
            As.append(Ak)
    lam = np.zeros_like(x_N)
    for k in range(terminal.M - 1, -1, -1):
        lam = grads[k] + As[k].T @ lam
    return val, lam


def _objective_and_gradient(plant, cost, terminal, U, x0):
    xs, As, Bs = _rollout(plant, cost, U, x0)
    N = U.shape[0]
    C = plant.C
    Qt2 = 2.0 * cost.state_weight(C)
    R2 = 2.0 * np.asarray(cost.R, float)
    J = sum(cost.ell(xs[k], U[k], C) for k in range(N))
    vf, lam = _terminal_value_grad(plant, cost, terminal, xs[N])
    J += vf
    grad = np.empty_like(U)
    for k in range(N - 1, -1, -1):
        du = U[k] - cost.u_s
        grad[k] = R2 @ du + Bs[k].T @ lam
        lam = Qt2 @ (xs[k] - cost.x_s) + As[k].T @ lam
    return float(J), grad, xs


def _terminal_quadratic_form(plant: LinearSystem, cost, terminal: TerminalCostSpec) -> np.ndarray:
    """Quadratic matrix of the terminal cost for a linear plant.

    The finite-tail cost with kappa = u_s is itself quadratic there: the
    M-step open-loop cost Gramian of the stage weight.
    """
    n = plant.n
    if terminal.variant is TerminalVariant.NONE:
        return np.zeros((n, n))
    if terminal.variant in (TerminalVariant.QUADRATIC, TerminalVariant.SCALED_MEASURE):
        return np.asarray(terminal.P_f, float)
    Qt = cost.state_weight(plant.C)
    G = Qt.copy()
    for _ in range(terminal.M - 1):
        G = Qt + plant.A.T @ G @ plant.A
    return G


class _CondensedQp:
    """Dense condensed form of the linear-quadratic single-shooting problem.

    In deviation coordinates v = vec(U - u_s), the objective is
    v' H v / 2 + b' v + c with exact curvature, so the projected-gradient
    iterations reduce to one small matvec each and the Lipschitz constant is
    exact (no backtracking needed).
    """

    def __init__(self, plant: LinearSystem, cost, terminal: TerminalCostSpec, N: int):
        n, m = plant.n, plant.m
        A, B = plant.A, plant.B
        Qt = cost.state_weight(plant.C)
        P_f = _terminal_quadratic_form(plant, cost, terminal)
        R = np.asarray(cost.R, float)
        # X = Gam z0 + Phi v with X = [x_1; ...; x_N] (deviation coordinates)
        Gam = np.zeros((N * n, n))
        Phi = np.zeros((N * n, N * m))
        Ak = np.eye(n)
        for k in range(N):
            Ak = Ak @ A
            Gam[k * n : (k + 1) * n] = Ak
        for j in range(N):
            blk = B.copy()
            for k in range(j, N):
                Phi[k * n : (k + 1) * n, j * m : (j + 1) * m] = blk
                blk = A @ blk
        Qbar = np.zeros((N * n, N * n))
        for k in range(N - 1):
            Qbar[k * n : (k + 1) * n, k * n : (k + 1) * n] = Qt
        Qbar[(N - 1) * n :, (N - 1) * n :] = P_f
        Rbar = np.kron(np.eye(N), R)
        QPhi = Qbar @ Phi
        self.H = 2.0 * (Phi.T @ QPhi + Rbar)
        self.H = 0.5 * (self.H + self.H.T)
        self._PhiTQGam = 2.0 * QPhi.T @ Gam
        self._GamTQGam = Gam.T @ Qbar @ Gam
        self.Qt = Qt
        self.L = float(np.linalg.eigvalsh(self.H)[-1])
        self.N, self.m = N, m
        self.plant, self.cost = plant, cost

    def objective_and_gradient(self, v: np.ndarray, z0: np.ndarray) -> tuple[float, np.ndarray]:
        Hv = self.H @ v
        b = self._PhiTQGam @ z0
        J = 0.5 * float(v @ Hv) + float(b @ v) + float(z0 @ (self.Qt + self._GamTQGam) @ z0)
        return J, Hv + b


def _solve_condensed(
    qp: _CondensedQp, x0: np.ndarray, warm: np.ndarray | None, tol: float, max_iters: int
) -> tuple[np.ndarray, float, int, float]:
    plant, cost = qp.plant, qp.cost
    N, m = qp.N, qp.m
    lo = np.tile(plant.u_lower - cost.u_s, N)
    hi = np.tile(plant.u_upper - cost.u_s, N)
    z0 = np.asarray(x0, float) - cost.x_s
    v = np.clip((warm - cost.u_s).reshape(-1) if warm is not None else np.zeros(N * m), lo, hi)
    L = max(qp.L, 1e-12)
    J, g = qp.objective_and_gradient(v, z0)
    y = v.copy()
    t_acc = 1.0
    residual = np.inf
    iters = 0
    for iters in range(1, max_iters + 1):
        _, g_y = qp.objective_and_gradient(y, z0)
        v_new = np.clip(y - g_y / L, lo, hi)
        J_new, g_new = qp.objective_and_gradient(v_new, z0)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc**2))
        y = v_new + ((t_acc - 1.0) / t_next) * (v_new - v)
        if J_new > J:
            y = v_new.copy()
            t_next = 1.0
        v, t_acc, J = v_new, t_next, J_new
        residual = float(np.max(np.abs(v - np.clip(v - g_new, lo, hi))))
        if residual <= tol:
            break
    return v.reshape(N, m) + cost.u_s, J, iters, residual


def solve_ocp(
    plant: LinearSystem | NonlinearSystem,
    cost: QuadraticStageCost,
    terminal: TerminalCostSpec,
    N: int,
    x0: np.ndarray,
    warm_start: np.ndarray | None = None,
    settings: SolverSettings | None = None,
    multi_start: bool | None = None,
) -> OcpSolution:
    """Single-shooting accelerated projected gradient with box projection.

    Terminates on the projected-gradient residual ||U - proj(U - g)||_inf or
    the iteration cap (flagged, still returned).  Nonlinear plants run one
    extra cold start from u = u_s and keep the better objective.
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    if N < 1:
        raise ValueError("N must be >= 1")
    cfg = settings or SolverSettings()
    linear = isinstance(plant, LinearSystem)
    tol = cfg.tol_linear if linear else cfg.tol_nonlinear
    lo, hi = plant.u_lower, plant.u_upper
    if multi_start is None:
        multi_start = not linear

    if linear:
        # exact condensed quadratic: one matvec per iteration, exact Lipschitz
        qp = _CondensedQp(plant, cost, terminal, N)
        warm = None if warm_start is None else np.asarray(warm_start, float).reshape(N, plant.m)
        U, J, iters, residual = _solve_condensed(qp, x0, warm, tol, cfg.max_iters)
        xs = np.empty((N + 1, x0.size))
        xs[0] = x0
        for k in range(N):
            xs[k + 1] = plant.step(xs[k], U[k])
        return OcpSolution(
            inputs=U,
            states=xs,
            objective=J,
            iterations=iters,
            residual=residual,
            converged=residual <= tol,
        )

    def project(U):
        return np.clip(U, lo, hi)

    def run(U0):
        U = project(U0.copy())
        J, g, _ = _objective_and_gradient(plant, cost, terminal, U, x0)
        L = max(1.0, float(np.linalg.norm(g)) / max(1.0, float(np.linalg.norm(U - project(U - g)) + 1e-12)))
        Y = U.copy()
        t_acc = 1.0
        J_prev = J
        iters = 0
        residual = np.inf
        for iters in range(1, cfg.max_iters + 1):
            J_y, g_y, _ = _objective_and_gradient(plant, cost, terminal, Y, x0)
            # backtracking on the proximal step from Y
            while True:
                U_new = project(Y - g_y / L)
                d = U_new - Y
                J_new, _, _ = _objective_and_gradient(plant, cost, terminal, U_new, x0)
                if J_new <= J_y + float(np.sum(g_y * d)) + 0.5 * L * float(np.sum(d * d)) + 1e-12:
                    break
                L *= cfg.lipschitz_growth
                if L > 1e16:
                    break
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc**2))
            beta = (t_acc - 1.0) / t_next
            Y = U_new + beta * (U_new - U)
            if J_new > J_prev:  # restart acceleration on non-monotone step
                Y = U_new.copy()
                t_next = 1.0
            step_norm = float(np.max(np.abs(U_new - U)))
            U, t_acc, J_prev = U_new, t_next, J_new
            # the first-order residual needs an extra gradient; check it when
            # the iterate has nearly stopped moving or periodically
            if step_norm <= 10.0 * tol or iters % 10 == 0:
                _, g_u, _ = _objective_and_gradient(plant, cost, terminal, U, x0)
                residual = float(np.max(np.abs(U - project(U - g_u))))
                if residual <= tol:
                    break
        J_fin, _, xs = _objective_and_gradient(plant, cost, terminal, U, x0)
        return U, xs, J_fin, iters, residual

    starts = []
    if warm_start is not None:
        starts.append(np.asarray(warm_start, dtype=float).reshape(N, plant.m))
    else:
        starts.append(np.tile(cost.u_s, (N, 1)))
    if multi_start and warm_start is not None:
        starts.append(np.tile(cost.u_s, (N, 1)))

    best = None
    total_iters = 0
    for U0 in starts:
        U, xs, J, iters, residual = run(U0)
        total_iters += iters
        if best is None or J < best[2]:
            best = (U, xs, J, iters, residual)
    U, xs, J, _, residual = best
    return OcpSolution(
        inputs=U,
        states=xs,
        objective=J,
        iterations=total_iters,
        residual=residual,
        converged=residual <= tol,
    )


def v_infty_oracle(
    plant: LinearSystem | NonlinearSystem,
    cost: QuadraticStageCost,
    x0: np.ndarray,
    H: int = 500,
    settings: SolverSettings | None = None,
) -> tuple[float, float]:
    """Long-horizon proxy for the infinite-horizon optimal cost.

    Returns (V_H, V_H - V_{H//2}); the increment indicates convergence since
    V_H is nondecreasing in H and bounded by V_inf.
    """
    half = solve_ocp(plant, cost, TerminalCostSpec.none(), H // 2, x0, settings=settings)
    warm = np.vstack([half.inputs, np.tile(cost.u_s, (H - H // 2, 1))])
    full = solve_ocp(plant, cost, TerminalCostSpec.none(), H, x0, warm_start=warm, settings=settings)
    return full.objective, full.objective - half.objective
