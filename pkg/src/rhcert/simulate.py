"""Receding-horizon closed-loop simulation and certificate validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ocp import SolverSettings, TerminalCostSpec, solve_ocp
from .systems import (
    LinearSystem,
    NonlinearSystem,
    QuadraticStageCost,
    StateMeasure,
    StorageFunction,
    StorageKind,
)


@dataclass
class ClosedLoopTrace:
    """Time-indexed record of a receding-horizon run.

    states has T+1 rows; inputs, stage_costs, value_functions, converged and
    iterations have T rows.  The trace replays deterministically from the
    same configuration.
    """

    states: np.ndarray
    inputs: np.ndarray
    stage_costs: np.ndarray
    value_functions: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    horizon: int
    metadata: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return self.inputs.shape[0]

    def truncated_cost(self) -> float:
        return float(np.sum(self.stage_costs))

    def to_csv(self, path: str | Path, lyap_residuals: np.ndarray | None = None) -> None:
        """Columns: k, x_1..x_n, u_1..u_m, stage_cost, V_N, lyap_residual."""
        n = self.states.shape[1]
        m = self.inputs.shape[1]
        T = self.steps
        res = np.full(T, np.nan) if lyap_residuals is None else np.asarray(lyap_residuals, float)
        if res.size < T:
            res = np.concatenate([res, np.full(T - res.size, np.nan)])
        header = (
            ["k"]
            + [f"x_{i+1}" for i in range(n)]
            + [f"u_{i+1}" for i in range(m)]
            + ["stage_cost", "V_N", "lyap_residual"]
        )
        lines = [",".join(header)]
        for k in range(T):
            row = (
                [str(k)]
                + [f"{v:.12g}" for v in self.states[k]]
                + [f"{v:.12g}" for v in self.inputs[k]]
                + [f"{self.stage_costs[k]:.12g}", f"{self.value_functions[k]:.12g}", f"{res[k]:.12g}"]
            )
            lines.append(",".join(row))
        Path(path).write_text("\n".join(lines) + "\n")

    def write_metadata(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")


def closed_loop(
    plant: LinearSystem | NonlinearSystem,
    cost: QuadraticStageCost,
    terminal: TerminalCostSpec,
    N: int,
    x0: np.ndarray,
    T_steps: int,
    settings: SolverSettings | None = None,
) -> ClosedLoopTrace:
    """Receding-horizon loop with shifted warm starts.

    Non-convergent inner solves are recorded per step and the loop continues
    with the returned (best-so-far) input sequence.
    """
    x0 = np.asarray(x0, dtype=float)
    n, m = x0.size, plant.m
    states = np.empty((T_steps + 1, n))
    inputs = np.empty((T_steps, m))
    stage = np.empty(T_steps)
    values = np.empty(T_steps)
    conv = np.zeros(T_steps, dtype=bool)
    iters = np.zeros(T_steps, dtype=int)
    states[0] = x0
    warm = None
    for k in range(T_steps):
        sol = solve_ocp(plant, cost, terminal, N, states[k], warm_start=warm, settings=settings)
        u = sol.inputs[0]
        inputs[k] = u
        values[k] = sol.objective
        conv[k] = sol.converged
        iters[k] = sol.iterations
        stage[k] = cost.ell(states[k], u, plant.C)
        states[k + 1] = plant.step(states[k], u)
        warm = np.vstack([sol.inputs[1:], cost.u_s.reshape(1, -1)])
    meta = {
        "horizon": N,
        "steps": T_steps,
        "terminal": terminal.variant.value,
        "x0": [float(v) for v in x0],
        "nonconverged_steps": int(np.count_nonzero(~conv)),
    }
    return ClosedLoopTrace(states, inputs, stage, values, conv, iters, N, meta)


def lyapunov_residuals(
    trace: ClosedLoopTrace,
    storage: StorageFunction,
    sigma: StateMeasure,
    cost: QuadraticStageCost,
    C: np.ndarray,
    alpha: float,
    eps_o: float,
) -> np.ndarray:
    """r_k = Y_N(x_{k+1}) - Y_N(x_k) + eps_o alpha sigma(x_k), Y_N = V_N + W.

    A certificate alpha predicts r_k <= 0.  The last simulated step has no
    V_N sample for its successor, so T-1 residuals are returned; a NARX
    storage additionally needs nu steps of history, shifting the start.
    """
    T = trace.steps
    if T < 2:
        return np.empty(0)

    def W_at(k: int) -> float:
        if storage.kind is StorageKind.NARX_WEIGHTS:
            nu = int(storage.nu)
            if k < nu:
                return np.nan
            return storage.narx_value(trace.stage_costs[k - 1 :: -1][:nu])
        return storage.value(trace.states[k], cost)

    def sigma_at(k: int) -> float:
        if storage.kind is StorageKind.NARX_WEIGHTS:
            return W_at(k)  # sigma = W on the non-minimal state
        if storage.kind is StorageKind.QUADRATIC_FORM:
            return storage.value(trace.states[k], cost)
        return sigma.value(trace.states[k], cost, C)

    out = np.empty(T - 1)
    for k in range(T - 1):
        Y_now = trace.value_functions[k] + W_at(k)
        Y_next = trace.value_functions[k + 1] + W_at(k + 1)
        out[k] = Y_next - Y_now + eps_o * alpha * sigma_at(k)
    return out


@dataclass(frozen=True)
class PerformanceCheck:
    satisfied: bool
    conclusive: bool
    lhs: float
    rhs: float
    slack: float
    tail_stage_cost: float


def performance_ratio(
    trace: ClosedLoopTrace,
    storage: StorageFunction,
    cost: QuadraticStageCost,
    C: np.ndarray,
    x0: np.ndarray,
    v_inf: float,
    alpha: float,
    inflation: float = 1.0,
    tol: float = 1e-6,
    tail_threshold: float = 1e-8,
) -> PerformanceCheck:
    """Check alpha (J_T + W(x0)) <= inflation * (V_H + W(x0)) + tol.

    J_T is the truncated closed-loop cost; the check is conclusive only when
    the trailing stage cost has decayed below tail_threshold (otherwise the
    truncation may hide unbounded tail cost).  alpha <= 0 is vacuously
    satisfied.
    """
    if storage.kind is StorageKind.NARX_WEIGHTS:
        W0 = 0.0  # NARX storage of an at-rest history; conservative choice
    else:
        W0 = storage.value(np.asarray(x0, float), cost)
    J_T = trace.truncated_cost()
    tail = float(np.max(trace.stage_costs[-max(1, trace.steps // 20) :]))
    lhs = alpha * (J_T + W0)
    rhs = inflation * (v_inf + W0)
    satisfied = alpha <= 0.0 or lhs <= rhs + tol
    conclusive = alpha <= 0.0 or tail <= tail_threshold
    return PerformanceCheck(
        satisfied=satisfied,
        conclusive=conclusive,
        lhs=lhs,
        rhs=rhs,
        slack=rhs + tol - lhs,
        tail_stage_cost=tail,
    )


@dataclass(frozen=True)
class LimitCycleReport:
    detected: bool
    window_min_distance: float
    window_max_distance: float
    converged_to_setpoint: bool


def detect_limit_cycle(
    trace: ClosedLoopTrace,
    x_s: np.ndarray,
    threshold: float = 1e-2,
    window_fraction: float = 0.25,
    bound: float = 1e6,
    convergence_tol: float = 1e-4,
) -> LimitCycleReport:
    """Trailing-window test: bounded but persistently away from the setpoint.

    Over the last window_fraction of steps, a limit cycle is declared when
    the minimum distance to x_s exceeds threshold while the maximum stays
    below bound.
    """
    dist = np.linalg.norm(trace.states - np.asarray(x_s, float), axis=1)
    w = max(1, int(window_fraction * dist.size))
    window = dist[-w:]
    mn, mx = float(np.min(window)), float(np.max(window))
    return LimitCycleReport(
        detected=(mn > threshold) and (mx < bound),
        window_min_distance=mn,
        window_max_distance=mx,
        converged_to_setpoint=float(dist[-1]) <= convergence_tol,
    )
