"""Worst-case linear programs behind the tight suboptimality indices.

Variable layout (diagnostic names match):
  l_0..l_{N-1}   hypothetical stage costs along the optimal trajectory
  W_0..W_N       storage samples
  s_0..s_N       state-measure samples (s_0 normalized to 1)
  V              value function at the successor state (free sign)
  Vf             terminal-cost sample (terminal variant only)
"""

from __future__ import annotations

import numpy as np

from ..constants import CertificationConstants, Method, SuboptimalityResult, TerminalConstants
from .model import DenseLp, LpSolution, LpStatus
from .simplex import SimplexOptions, solve_lp


def build_worst_case_lp(c: CertificationConstants, N: int) -> DenseLp:
    """Worst-case LP whose minimum is eps_o (alpha_N - 1), no terminal cost."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if len(c.gamma) < N:
        raise ValueError(f"gamma sequence too short: need {N}, have {len(c.gamma)}")
    iL, iW, iS = 0, N, 2 * N + 1
    iV = 3 * N + 2
    n = 3 * N + 3
    names = (
        [f"l{k}" for k in range(N)]
        + [f"W{k}" for k in range(N + 1)]
        + [f"s{k}" for k in range(N + 1)]
        + ["V"]
    )
    rows, rhs = [], []

    def row() -> np.ndarray:
        return np.zeros(n)

    for k in range(N + 1):
        r = row()
        r[iS + k] = c.gamma_o_lower
        r[iW + k] = -1.0
        rows.append(r)
        rhs.append(0.0)
        r = row()
        r[iW + k] = 1.0
        r[iS + k] = -c.gamma_o_upper
        rows.append(r)
        rhs.append(0.0)
    for k in range(N):
        r = row()
        r[iW + k + 1] = 1.0
        r[iW + k] = -1.0
        r[iS + k] = c.eps_o
        r[iL + k] = -1.0
        rows.append(r)
        rhs.append(0.0)
    for k in range(N):
        r = row()
        r[iL + k : iL + N] = 1.0
        r[iS + k] = -c.gamma_k(N - k)
        rows.append(r)
        rhs.append(0.0)
    for k in range(1, N + 1):
        r = row()
        r[iV] = 1.0
        r[iL + 1 : iL + k] = -1.0
        r[iS + k] = -c.gamma_k(N - k + 1)
        rows.append(r)
        rhs.append(0.0)

    a_eq = np.zeros((1, n))
    a_eq[0, iS] = 1.0
    obj = np.zeros(n)
    obj[iL + 1 : iL + N] = 1.0
    obj[iV] = -1.0
    free = np.zeros(n, dtype=bool)
    free[iV] = True
    return DenseLp(obj, np.array(rows), np.array(rhs), a_eq, np.array([1.0]), free, names)


def build_worst_case_lp_terminal(c: CertificationConstants, t: TerminalConstants, N: int) -> DenseLp:
    """Worst-case LP with terminal cost; minimum is eps_o (alpha_{N,f} - 1).

    The relaxed-CLF row V <= sum l_j + (1+eps_f) Vf is omitted when the
    terminal cost vanishes identically (c_f_upper = 0) or eps_f is infinite:
    in both cases the decrease inequality carries no information and keeping
    it with Vf = 0 would spuriously cap V.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if len(t.gamma_f) < N:
        raise ValueError(f"gamma_f sequence too short: need {N}, have {len(t.gamma_f)}")
    iL, iW, iS = 0, N, 2 * N + 1
    iV, iVf = 3 * N + 2, 3 * N + 3
    n = 3 * N + 4
    names = (
        [f"l{k}" for k in range(N)]
        + [f"W{k}" for k in range(N + 1)]
        + [f"s{k}" for k in range(N + 1)]
        + ["V", "Vf"]
    )
    rows, rhs = [], []

    def row() -> np.ndarray:
        return np.zeros(n)

    for k in range(N + 1):
        r = row()
        r[iS + k] = c.gamma_o_lower
        r[iW + k] = -1.0
        rows.append(r)
        rhs.append(0.0)
        r = row()
        r[iW + k] = 1.0
        r[iS + k] = -c.gamma_o_upper
        rows.append(r)
        rhs.append(0.0)
    for k in range(N):
        r = row()
        r[iW + k + 1] = 1.0
        r[iW + k] = -1.0
        r[iS + k] = c.eps_o
        r[iL + k] = -1.0
        rows.append(r)
        rhs.append(0.0)
    for k in range(N):
        r = row()
        r[iL + k : iL + N] = 1.0
        r[iVf] = 1.0
        r[iS + k] = -t.gamma_f_k(N - k)
        rows.append(r)
        rhs.append(0.0)
    for k in range(1, N + 1):
        r = row()
        r[iV] = 1.0
        r[iL + 1 : iL + k] = -1.0
        r[iS + k] = -t.gamma_f_k(N - k + 1)
        rows.append(r)
        rhs.append(0.0)
    if t.has_clf_decrease and t.c_f_upper > 0.0:
        r = row()
        r[iV] = 1.0
        r[iL + 1 : iL + N] = -1.0
        r[iVf] = -(1.0 + t.eps_f)
        rows.append(r)
        rhs.append(0.0)
    r = row()
    r[iS + N] = t.c_f_lower
    r[iVf] = -1.0
    rows.append(r)
    rhs.append(0.0)
    r = row()
    r[iVf] = 1.0
    r[iS + N] = -t.c_f_upper
    rows.append(r)
    rhs.append(0.0)

    a_eq = np.zeros((1, n))
    a_eq[0, iS] = 1.0
    obj = np.zeros(n)
    obj[iL + 1 : iL + N] = 1.0
    obj[iVf] = 1.0
    obj[iV] = -1.0
    free = np.zeros(n, dtype=bool)
    free[iV] = True
    return DenseLp(obj, np.array(rows), np.array(rhs), a_eq, np.array([1.0]), free, names)


def alpha_from_lp(
    sol: LpSolution, eps_o: float, horizon: int, method: Method
) -> SuboptimalityResult:
    """alpha = 1 + objective/eps_o; an unbounded worst case maps to -inf."""
    if sol.status is LpStatus.UNBOUNDED:
        return SuboptimalityResult(alpha=float("-inf"), horizon=horizon, method=method)
    if sol.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"LP solve failed with status {sol.status.value}")
    return SuboptimalityResult(alpha=1.0 + sol.objective / eps_o, horizon=horizon, method=method)


def alpha_lp(
    c: CertificationConstants, N: int, options: SimplexOptions | None = None
) -> SuboptimalityResult:
    sol = solve_lp(build_worst_case_lp(c, N), options)
    return alpha_from_lp(sol, c.eps_o, N, Method.LP)


def alpha_lp_terminal(
    c: CertificationConstants,
    t: TerminalConstants,
    N: int,
    options: SimplexOptions | None = None,
) -> SuboptimalityResult:
    sol = solve_lp(build_worst_case_lp_terminal(c, t, N), options)
    return alpha_from_lp(sol, c.eps_o, N, Method.LP_TERMINAL)
