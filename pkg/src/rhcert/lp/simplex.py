"""Two-phase dense simplex with Bland's anti-cycling rule.

Pivoting uses Dantzig's most-negative-reduced-cost rule while the objective
makes progress and switches permanently to Bland's smallest-index rule once
a degenerate stall is detected, which keeps the anti-cycling guarantee
without Bland's typical slowness.  The tableau is refactorized against the
original data periodically and before reporting, so pivot roundoff cannot
leak into solutions; optimal solutions are re-verified and an infeasible
"optimal" is downgraded to ITERATION_LIMIT rather than returned silently.

Free variables are split into differences of non-negatives; inequality rows
get slacks; rows without a ready slack basis get artificials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DenseLp, LpSolution, LpStatus

_VERIFY_TOL = 1e-8
_STALL_LIMIT = 30
_REFACTOR_PERIOD = 120


@dataclass(frozen=True)
class SimplexOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    max_iters: int | None = None  # default 10 * (rows + cols)^2


def solve_lp(lp: DenseLp, options: SimplexOptions | None = None) -> LpSolution:
    opts = options or SimplexOptions()
    n = lp.n_vars
    n_free = int(np.count_nonzero(lp.free))
    m_ub, m_eq = lp.b_ub.size, lp.b_eq.size
    m = m_ub + m_eq

    # standard-form columns: [x (nonneg as-is), negatives of free vars, slacks]
    n_std = n + n_free + m_ub
    A = np.zeros((m, n_std))
    b = np.concatenate([lp.b_ub, lp.b_eq]) if m else np.zeros(0)
    A[:m_ub, :n] = lp.a_ub
    A[m_ub:, :n] = lp.a_eq
    free_idx = np.flatnonzero(lp.free)
    for k, j in enumerate(free_idx):
        A[:m_ub, n + k] = -lp.a_ub[:, j]
        A[m_ub:, n + k] = -lp.a_eq[:, j]
    for i in range(m_ub):
        A[i, n + n_free + i] = 1.0
    c = np.zeros(n_std)
    c[:n] = lp.objective
    c[n : n + n_free] = -lp.objective[free_idx]

    neg = b < 0
    A[neg] *= -1.0
    b = np.abs(b)
    # deterministic anti-degeneracy perturbation: pivoting happens against
    # b_work; the final solution is recomputed against the true b
    if m:
        pert = 1e-10 * np.maximum(1.0, b) * (1.0 + np.arange(m) / m)
    else:
        pert = np.zeros(0)
    b_work = b + pert

    basis = np.full(m, -1, dtype=int)
    need_artificial = []
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis[i] = n + n_free + i
        else:
            need_artificial.append(i)
    n_art = len(need_artificial)
    if n_art:
        art = np.zeros((m, n_art))
        for k, i in enumerate(need_artificial):
            art[i, k] = 1.0
            basis[i] = n_std + k
        A = np.hstack([A, art])

    total = A.shape[1]
    max_iters = opts.max_iters if opts.max_iters is not None else 10 * (m + total) ** 2
    iters = 0

    T = np.hstack([A, b_work.reshape(-1, 1)])
    live_rows = np.arange(m)

    def refactor() -> None:
        """Rebuild the tableau from the original data for the current basis."""
        nonlocal T
        ncols = T.shape[1] - 1
        B = A[np.ix_(live_rows, basis)]
        try:
            Binv_A = np.linalg.solve(B, A[live_rows][:, :ncols])
            Binv_b = np.linalg.solve(B, b_work[live_rows])
        except np.linalg.LinAlgError:
            return
        Binv_b = np.where(np.abs(Binv_b) < 1e-12, 0.0, Binv_b)
        if np.min(Binv_b) < -1e-9:
            return  # roundoff disagreement; keep the pivoted tableau
        T = np.hstack([Binv_A, Binv_b.reshape(-1, 1)])

    def pivot(row: int, col: int) -> None:
        T[row] /= T[row, col]
        colvals = T[:, col].copy()
        colvals[row] = 0.0
        T[:] -= np.outer(colvals, T[row])
        basis[row] = col

    def run_phase(cost: np.ndarray, allowed: int) -> str:
        nonlocal iters
        m_live = live_rows.size
        bland = False
        stall = 0
        last_obj = np.inf
        since_refactor = 0
        while True:
            if iters >= max_iters:
                return "iteration_limit"
            cb = cost[basis]
            reduced = cost[:allowed] - cb @ T[:, :allowed]
            if bland:
                candidates = np.flatnonzero(reduced < -opts.opt_tol)
                if candidates.size == 0:
                    return "optimal"
                j = int(candidates[0])
            else:
                j = int(np.argmin(reduced))
                if reduced[j] >= -opts.opt_tol:
                    return "optimal"
            col = T[:, j]
            positive = col > opts.feas_tol
            if not np.any(positive):
                return "unbounded"
            ratios = np.full(m_live, np.inf)
            ratios[positive] = T[positive, -1] / col[positive]
            best = np.min(ratios)
            # tie window far below the rhs perturbation, so perturbed ratios
            # genuinely break ties; Bland tie-break on exact leftovers
            window = best + 1e-13 * (1.0 + abs(best))
            tie_rows = np.flatnonzero(ratios <= window)
            row = int(tie_rows[np.argmin(basis[tie_rows])])
            pivot(row, j)
            iters += 1
            since_refactor += 1
            if since_refactor >= _REFACTOR_PERIOD:
                refactor()
                since_refactor = 0
            obj = float(cost[basis] @ T[:, -1])
            if not bland:
                if obj >= last_obj - 1e-12:
                    stall += 1
                    if stall >= _STALL_LIMIT:
                        bland = True  # degenerate stall: anti-cycling rule
                else:
                    stall = 0
            last_obj = obj

    # phase 1
    if n_art:
        cost1 = np.zeros(total)
        cost1[n_std:] = 1.0
        status = run_phase(cost1, total)
        if status == "iteration_limit":
            return LpSolution(LpStatus.ITERATION_LIMIT, np.nan, np.zeros(n), iters)
        phase1_obj = float(cost1[basis] @ T[:, -1])
        if phase1_obj > 1e-7 * max(1.0, float(np.max(b_work)) if b_work.size else 1.0):
            return LpSolution(LpStatus.INFEASIBLE, np.nan, np.zeros(n), iters)
        # drive remaining artificials out of the basis, largest pivot first
        for i in range(live_rows.size):
            if basis[i] >= n_std:
                row = T[i, :n_std]
                j_best = int(np.argmax(np.abs(row)))
                if abs(row[j_best]) > 1e-7:
                    pivot(i, j_best)
                    iters += 1
        keep = np.array([i for i in range(live_rows.size) if basis[i] < n_std], dtype=int)
        if keep.size < live_rows.size:
            T = T[keep]
            basis = basis[keep]
            live_rows = live_rows[keep]
        T = np.hstack([T[:, :n_std], T[:, -1:]])

    # phase 2
    cost2 = np.zeros(n_std)
    cost2[: c.size] = c
    status = run_phase(cost2, n_std)
    if status == "iteration_limit":
        return LpSolution(LpStatus.ITERATION_LIMIT, np.nan, np.zeros(n), iters)
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, float("-inf"), np.zeros(n), iters)

    # final solve against the original data (no accumulated pivot error)
    z = np.zeros(n_std + n_art)
    B_mat = A[np.ix_(live_rows, basis)]
    try:
        zb = np.linalg.solve(B_mat, b[live_rows])
        if np.min(zb) < -1e-7:
            zb = T[:, -1]
    except np.linalg.LinAlgError:
        zb = T[:, -1]
    z[basis] = zb
    x = z[:n].copy()
    x[free_idx] -= z[n : n + n_free]
    obj = float(lp.objective @ x)

    ub, eq, lb = lp.residuals(x)
    scale = 1.0 + float(np.max(np.abs(b))) if b.size else 1.0
    if max(ub, eq, lb) > _VERIFY_TOL * scale:
        return LpSolution(LpStatus.ITERATION_LIMIT, obj, x, iters)
    return LpSolution(LpStatus.OPTIMAL, obj, x, iters)
