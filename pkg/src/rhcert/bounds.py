"""Closed-form suboptimality indices and stabilizing-horizon thresholds.

Every formula is evaluated through products of ratios that live in (0, 1],
so arbitrarily long gamma sequences cannot overflow; a lost denominator is
reported as ``alpha = -inf`` (vacuous bound) instead of raising.

Conventions used throughout:

* ``gamma_o`` in the coarse bounds means the upper detectability constant
  ``gamma_o_upper`` (the safe choice when upper-bounding the Lyapunov
  function).
* ``eps_f = inf`` means the terminal cost carries no decrease property;
  all terminal results then reduce to their no-terminal counterparts.
* Thresholds are clamped at 0: every integer horizon N > n_min certifies.
"""

from __future__ import annotations

import math
from typing import Sequence

from .constants import (
    CertificationConstants,
    HorizonBound,
    HorizonFormula,
    Method,
    SuboptimalityResult,
    TerminalConstants,
)

_NEG_INF = float("-inf")


def _gamma_at(c: CertificationConstants, N: int) -> float:
    """gamma_N, falling back to gamma_bar past the computed sequence."""
    if N <= len(c.gamma):
        return c.gamma[N - 1]
    return float(c.gamma_bar)


def _gamma_f_at(t: TerminalConstants, N: int) -> float:
    if N <= len(t.gamma_f):
        return t.gamma_f[N - 1]
    return float(t.gamma_f_bar)


def _require_sequence(gamma: Sequence[float], N: int, what: str) -> None:
    if N > len(gamma):
        raise ValueError(f"{what} needs gamma_1..gamma_{N}, have {len(gamma)}")


# ---------------------------------------------------------------------------
# coarse bounds (no LP), no terminal cost


def alpha_coarse(c: CertificationConstants, N: int) -> SuboptimalityResult:
    """Conservative index alpha_N = 1 - gamma_N (gamma_N + gamma_o) / (eps_o^2 (N-1))."""
    if N <= 1:
        raise ValueError("coarse bound undefined for N<=1")
    g_N = _gamma_at(c, N)
    alpha = 1.0 - g_N * (g_N + c.gamma_o_upper) / (c.eps_o**2 * (N - 1))
    return SuboptimalityResult(alpha=alpha, horizon=N, method=Method.COARSE)


def n_min_coarse(c: CertificationConstants) -> HorizonBound:
    gbar = float(c.gamma_bar)
    n_min = 1.0 + (gbar + c.gamma_o_upper) * gbar / c.eps_o**2
    return HorizonBound(n_min=n_min, formula=HorizonFormula.COARSE)


# ---------------------------------------------------------------------------
# analytic LP solutions, no terminal cost


def alpha_tight_storage(c: CertificationConstants, N: int) -> SuboptimalityResult:
    """Tight index for sigma = W: eps_o (1-alpha) = (gamma_N + eta) r / (1 - r).

    r = gamma_1/(1+gamma_1) * prod_{i=2..N} (eta+gamma_i)/(1+gamma_i) < 1,
    which is the ratio form of the printed products and cannot overflow.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not (c.gamma_o_lower == c.gamma_o_upper == 1.0 and 0.0 < c.eps_o < 1.0):
        raise ValueError("storage-measure bound requires gamma_o = 1, eps_o in (0,1)")
    _require_sequence(c.gamma, N, "storage-measure bound")
    eta = c.eta
    g = c.gamma
    r = g[0] / (1.0 + g[0])
    for i in range(1, N):
        r *= (eta + g[i]) / (1.0 + g[i])
    if r == 0.0:
        return SuboptimalityResult(alpha=1.0, horizon=N, method=Method.TIGHT_STORAGE)
    gap = (g[N - 1] + eta) * r / (1.0 - r) / c.eps_o
    alpha = 1.0 - gap
    if not math.isfinite(alpha):
        alpha = _NEG_INF
    return SuboptimalityResult(alpha=alpha, horizon=N, method=Method.TIGHT_STORAGE)


def n_min_storage_const(gamma_bar: float, eps_o: float) -> HorizonBound:
    """Stabilizing horizon for constant gamma, sigma = W."""
    if not (0.0 < eps_o < 1.0):
        raise ValueError("eps_o must lie in (0,1)")
    if gamma_bar <= 0.0:
        return HorizonBound(n_min=0.0, formula=HorizonFormula.STORAGE_CONST)
    eta = 1.0 - eps_o
    n_min = 1.0 + (math.log(gamma_bar) - math.log(eps_o)) / (
        math.log(1.0 + gamma_bar) - math.log(gamma_bar + eta)
    )
    return HorizonBound(n_min=max(0.0, n_min), formula=HorizonFormula.STORAGE_CONST)


def alpha_tight_stage(c: CertificationConstants, N: int) -> SuboptimalityResult:
    """Tight index for sigma = ell_min: alpha = 1 - (gamma_N - 1) s / (1 - s).

    s = prod_{i=2..N} (gamma_i - 1)/gamma_i.  At N = 1 the worst case is
    unbounded (no row of the LP ties the post-decrease measure), reported as
    the -inf sentinel.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not (c.gamma_o_lower == c.gamma_o_upper == 0.0 and c.eps_o == 1.0):
        raise ValueError("stage-cost-measure bound requires gamma_o = 0, eps_o = 1")
    _require_sequence(c.gamma, N, "stage-cost-measure bound")
    for j, gj in enumerate(c.gamma[:N], start=1):
        if gj < 1.0 - 1e-12:
            raise ValueError(f"gamma_{j} = {gj} < 1 impossible under sigma = ell_min")
    if N == 1:
        return SuboptimalityResult(alpha=_NEG_INF, horizon=1, method=Method.TIGHT_STAGE)
    g = c.gamma
    s = 1.0
    for i in range(1, N):
        s *= (g[i] - 1.0) / g[i]
    num = (g[N - 1] - 1.0) * s
    if num == 0.0:
        return SuboptimalityResult(alpha=1.0, horizon=N, method=Method.TIGHT_STAGE)
    den = 1.0 - s
    if den <= 0.0:
        return SuboptimalityResult(alpha=_NEG_INF, horizon=N, method=Method.TIGHT_STAGE)
    alpha = 1.0 - num / den
    if not math.isfinite(alpha):
        alpha = _NEG_INF
    return SuboptimalityResult(alpha=alpha, horizon=N, method=Method.TIGHT_STAGE)


def check_submultiplicativity(c_seq: Sequence[float]) -> bool:
    """True iff c_{k+k2} <= c_k c_{k2} for every in-range pair k, k2 >= 1."""
    n = len(c_seq)
    if any(x < 0 for x in c_seq):
        raise ValueError("c sequence must be non-negative")
    for k in range(1, n):
        for k2 in range(1, n - k):
            if c_seq[k + k2] > c_seq[k] * c_seq[k2] + 1e-12:
                return False
    return True


# ---------------------------------------------------------------------------
# coarse bound with terminal cost


def alpha_coarse_terminal(c: CertificationConstants, t: TerminalConstants, N: int) -> SuboptimalityResult:
    """Conservative terminal-cost index; eps_f = inf reduces to alpha_coarse."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not t.has_clf_decrease:
        return alpha_coarse(c, N)
    g_Nf = _gamma_f_at(t, N)
    gbar_f = float(t.gamma_f_bar)
    den = c.eps_o * ((N - 1) * c.eps_o * (1.0 + t.eps_f) + gbar_f)
    if den <= 0.0:
        return SuboptimalityResult(alpha=_NEG_INF, horizon=N, method=Method.COARSE_TERMINAL)
    alpha = 1.0 - (g_Nf + c.gamma_o_upper) * t.eps_f * gbar_f / den
    return SuboptimalityResult(alpha=alpha, horizon=N, method=Method.COARSE_TERMINAL)


def n_min_coarse_terminal(c: CertificationConstants, t: TerminalConstants) -> HorizonBound:
    if not t.has_clf_decrease:
        return HorizonBound(n_min=n_min_coarse(c).n_min, formula=HorizonFormula.COARSE_TERMINAL)
    gbar_f = float(t.gamma_f_bar)
    ef = t.eps_f
    n_min = (
        1.0
        + ef / (1.0 + ef) * gbar_f * (gbar_f + c.gamma_o_upper) / c.eps_o**2
        - gbar_f / (c.eps_o * (1.0 + ef))
    )
    return HorizonBound(n_min=max(0.0, n_min), formula=HorizonFormula.COARSE_TERMINAL)


def performance_inflation_factor(c: CertificationConstants, t: TerminalConstants, N: int) -> float:
    """Inflation factor 1 + (c_f_upper/eps_o)(1 - eps_o/(gamma_f_bar+gamma_o))^N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if t.c_f_upper == 0.0:
        return 1.0
    denom = float(t.gamma_f_bar) + c.gamma_o_upper
    if denom <= 0.0:
        raise ValueError("gamma_f_bar + gamma_o must be positive for the inflation factor")
    base = 1.0 - c.eps_o / denom
    base = max(base, 0.0)
    return 1.0 + t.c_f_upper / c.eps_o * base**N


# ---------------------------------------------------------------------------
# analytic LP solutions with terminal cost


def alpha_tight_stage_terminal(t: TerminalConstants, N: int) -> SuboptimalityResult:
    """Tight terminal index for sigma = ell_min.

    alpha = 1 - eps_f (gamma_Nf - 1) s / ((1+eps_f) - eps_f s) with the same
    ratio product s as the no-terminal case, to which eps_f = inf delegates.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not t.has_clf_decrease:
        return alpha_tight_stage(CertificationConstants.stage_cost_mode(t.gamma_f, t.gamma_f_bar), N)
    _require_sequence(t.gamma_f, N, "terminal stage-cost-measure bound")
    for j, gj in enumerate(t.gamma_f[:N], start=1):
        if gj < 1.0 - 1e-12:
            raise ValueError(f"gamma_f_{j} = {gj} < 1 impossible under sigma = ell_min")
    g = t.gamma_f
    s = 1.0
    for i in range(1, N):
        s *= (g[i] - 1.0) / g[i]
    num = t.eps_f * (g[N - 1] - 1.0) * s
    if num == 0.0:
        return SuboptimalityResult(alpha=1.0, horizon=N, method=Method.TIGHT_STAGE_TERMINAL)
    den = (1.0 + t.eps_f) - t.eps_f * s
    if den <= 0.0:
        return SuboptimalityResult(alpha=_NEG_INF, horizon=N, method=Method.TIGHT_STAGE_TERMINAL)
    alpha = 1.0 - num / den
    if not math.isfinite(alpha):
        alpha = _NEG_INF
    return SuboptimalityResult(alpha=alpha, horizon=N, method=Method.TIGHT_STAGE_TERMINAL)


def check_terminal_decomposition(c_seq: Sequence[float], c_f_seq: Sequence[float], eps_f: float) -> bool:
    """Verify the tightness conditions of the terminal sigma=ell result.

    The caller supplies the decomposition gamma_{k,f} = sum_{j<k} c_j + c_{k,f}.
    Checks, over all in-range indices k, k2 >= 0:
      c_{k+k2} <= c_k c_{k2}; c_{k+k2,f} <= c_k c_{k2,f};
      c_k + c_{k+1,f} <= (1+eps_f) c_{k,f}.
    """
    n, m = len(c_seq), len(c_f_seq)
    tol = 1e-12
    for k in range(n):
        for k2 in range(n - k):
            if c_seq[k + k2] > c_seq[k] * c_seq[k2] + tol:
                return False
    for k in range(n):
        for k2 in range(m - k):
            if c_f_seq[k + k2] > c_seq[k] * c_f_seq[k2] + tol:
                return False
    for k in range(min(n, m - 1)):
        if c_seq[k] + c_f_seq[k + 1] > (1.0 + eps_f) * c_f_seq[k] + tol:
            return False
    return True


def n_min_stage_terminal_const(t: TerminalConstants) -> HorizonBound:
    """Stabilizing horizon for constant gamma_f, sigma = ell_min."""
    gbar = float(t.gamma_f_bar)
    if gbar <= 1.0:
        return HorizonBound(n_min=0.0, formula=HorizonFormula.STAGE_TERMINAL_CONST)
    if not t.has_clf_decrease:
        n_min = 1.0 + math.log(gbar) / (math.log(gbar) - math.log(gbar - 1.0))
    else:
        n_min = 1.0 + (math.log(gbar) - math.log(1.0 + 1.0 / t.eps_f)) / (
            math.log(gbar) - math.log(gbar - 1.0)
        )
    return HorizonBound(n_min=max(0.0, n_min), formula=HorizonFormula.STAGE_TERMINAL_CONST)


def alpha_tight_storage_terminal(c: CertificationConstants, t: TerminalConstants, N: int) -> SuboptimalityResult:
    """Tight terminal index for sigma = W.

    eps_o (1-alpha) = eps_f (gamma_Nf + eta) r / ((1+eps_f) - eps_f r) with the
    same ratio product r as the no-terminal case built from gamma_f, to which
    eps_f = inf delegates.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not (c.gamma_o_lower == c.gamma_o_upper == 1.0 and 0.0 < c.eps_o < 1.0):
        raise ValueError("terminal storage-measure bound requires gamma_o = 1, eps_o in (0,1)")
    if not t.has_clf_decrease:
        red = alpha_tight_storage(CertificationConstants.storage_mode(t.gamma_f, c.eps_o, t.gamma_f_bar), N)
        return red
    _require_sequence(t.gamma_f, N, "terminal storage-measure bound")
    eta = c.eta
    g = t.gamma_f
    r = g[0] / (1.0 + g[0])
    for i in range(1, N):
        r *= (eta + g[i]) / (1.0 + g[i])
    if r == 0.0:
        return SuboptimalityResult(alpha=1.0, horizon=N, method=Method.TIGHT_STORAGE_TERMINAL)
    den = (1.0 + t.eps_f) - t.eps_f * r
    if den <= 0.0:
        return SuboptimalityResult(alpha=_NEG_INF, horizon=N, method=Method.TIGHT_STORAGE_TERMINAL)
    gap = t.eps_f * (g[N - 1] + eta) * r / den / c.eps_o
    alpha = 1.0 - gap
    if not math.isfinite(alpha):
        alpha = _NEG_INF
    return SuboptimalityResult(alpha=alpha, horizon=N, method=Method.TIGHT_STORAGE_TERMINAL)


def n_min_storage_terminal_const(gamma_f_bar: float, eps_o: float, eps_f: float) -> HorizonBound:
    """Stabilizing horizon for constant gamma_f, sigma = W.

    Implemented as 1 + (log gbar - log eps_o - log(1+1/eps_f)) / (log(1+gbar)
    - log(gbar+eta)); the leading 1 is required for consistency with the sign
    change of the tight index (the source derivation, Part VIII), although the
    printed closed form omits it.
    """
    if not (0.0 < eps_o < 1.0):
        raise ValueError("eps_o must lie in (0,1)")
    if gamma_f_bar <= 0.0:
        return HorizonBound(n_min=0.0, formula=HorizonFormula.STORAGE_TERMINAL_CONST)
    eta = 1.0 - eps_o
    if math.isinf(eps_f):
        n_min = n_min_storage_const(gamma_f_bar, eps_o).n_min
        return HorizonBound(n_min=n_min, formula=HorizonFormula.STORAGE_TERMINAL_CONST)
    num = math.log(gamma_f_bar) - math.log(eps_o) - math.log(1.0 + 1.0 / eps_f)
    den = math.log(1.0 + gamma_f_bar) - math.log(gamma_f_bar + eta)
    return HorizonBound(n_min=max(0.0, 1.0 + num / den), formula=HorizonFormula.STORAGE_TERMINAL_CONST)


# ---------------------------------------------------------------------------
# terminal-cost constant constructions


_EPS_F_FLOOR = 1e-12


def _normalized_terminal(
    c_lo: float, c_up: float, eps_f: float, gamma_f: Sequence[float], gamma_f_bar: float | None
) -> TerminalConstants:
    """Apply the non-restrictive sandwich adjustments to (c_f, eps_f, gamma_f).

    If gamma_f_1/(1+eps_f) exceeds c_f_upper, gamma_f_1 is tightened to
    (1+eps_f) c_f_upper (valid via the CLF inequality).  If it falls below
    c_f_lower, eps_f is tightened to gamma_f_1/c_f_lower - 1; a non-positive
    result means the terminal cost is a CLF and is floored at a tiny value
    with the lower bound relaxed to match.
    """
    g = [float(x) for x in gamma_f]
    if not g:
        raise ValueError("gamma_f must be non-empty")
    if g[0] / (1.0 + eps_f) > c_up:
        g[0] = (1.0 + eps_f) * c_up
    if g[0] / (1.0 + eps_f) < c_lo:
        eps_f = g[0] / c_lo - 1.0
        if eps_f <= 0.0:
            eps_f = _EPS_F_FLOOR
            c_lo = g[0] / (1.0 + eps_f)
    return TerminalConstants(
        c_f_lower=c_lo,
        c_f_upper=c_up,
        eps_f=eps_f,
        gamma_f=tuple(g),
        gamma_f_bar=None if gamma_f_bar is None else max(gamma_f_bar, max(g)),
    )


def terminal_constants_scaled(
    omega: float, gamma_f: Sequence[float], gamma_f_bar: float | None = None
) -> TerminalConstants:
    """Terminal cost omega * sigma: c_f = omega, 1 + eps_f = gamma_f_1/omega.

    A non-positive eps_f means the scaled measure is already a CLF; it is
    floored at a tiny positive value, so every horizon N >= 1 certifies.
    """
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    if len(gamma_f) == 0:
        raise ValueError("gamma_f must be non-empty")
    eps_f = gamma_f[0] / omega - 1.0
    if eps_f <= 0.0:
        eps_f = _EPS_F_FLOOR
    return _normalized_terminal(omega, omega, eps_f, gamma_f, gamma_f_bar)


def terminal_constants_finite_tail(
    C_ell: float, rho: float, M: int, gamma_f: Sequence[float], gamma_f_bar: float | None = None
) -> TerminalConstants:
    """Finite-tail terminal cost constants.

    c_f_upper = C_ell (1-rho^M)/(1-rho), c_f_lower = 1,
    eps_f = C_ell (1-rho) / (rho^{-M} - 1).
    """
    if C_ell < 1.0:
        raise ValueError("C_ell must be >= 1")
    if not (0.0 <= rho < 1.0):
        raise ValueError("rho must lie in [0,1)")
    if M < 1:
        raise ValueError("M must be >= 1")
    c_up = C_ell * (1.0 - rho**M) / (1.0 - rho)
    if rho == 0.0:
        eps_f = _EPS_F_FLOOR
    else:
        eps_f = C_ell * (1.0 - rho) / (rho ** (-M) - 1.0)
    return _normalized_terminal(1.0, c_up, eps_f, gamma_f, gamma_f_bar)


# ---------------------------------------------------------------------------
# auxiliary identities (numerically validated)


def telescoping_identity_residuals(eta: float, delta: Sequence[float], k: int, N: int) -> tuple[float, float]:
    """Residuals |LHS-RHS| of the two telescoping product identities.

    delta is 1-indexed conceptually: delta[i-1] = delta_i, length >= N.
    Requires 1 <= k <= N-1 and 1 + delta_l != 0 on the touched range.
    """
    if not (1 <= k <= N - 1):
        raise ValueError("need 1 <= k <= N-1")
    if len(delta) < N:
        raise ValueError("delta must have length >= N")

    def d(i: int) -> float:
        return float(delta[i - 1])

    def ratio_prod(j: int) -> float:
        # prod_{l=0}^{j-2} (eta + d_{N-l}) / (1 + d_{N-l-1})
        p = 1.0
        for l in range(0, j - 1):
            den = 1.0 + d(N - l - 1)
            if den == 0.0:
                raise ZeroDivisionError("1 + delta_l vanished")
            p *= (eta + d(N - l)) / den
        return p

    lhs_a = 0.0
    lhs_b = 0.0
    for j in range(1, k):
        den = 1.0 + d(N - j)
        if den == 0.0:
            raise ZeroDivisionError("1 + delta_l vanished")
        term = (d(N - j + 1) - eta * d(N - j)) / den * ratio_prod(j)
        lhs_a += term
        lhs_b += eta ** (k - 1 - j) * term
    rhs_a = d(N) - d(N - k + 1) * ratio_prod(k)
    rhs_b = ratio_prod(k) - eta ** (k - 1)
    return abs(lhs_a - rhs_a), abs(lhs_b - rhs_b)


def worst_case_recursion_coefficients(eta: float, delta: Sequence[float], N: int) -> list[float]:
    """Coefficients a_1..a_{N-1} of the affine worst-case recursion.

    a_k = (d_{N-k+1} - eta d_{N-k})/(d_{N-k}+1) *
          prod_{j=0}^{k-2} (eta + d_{N-j})/(d_{N-j-1}+1).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if len(delta) < N:
        raise ValueError("delta must have length >= N")

    def d(i: int) -> float:
        return float(delta[i - 1])

    out: list[float] = []
    for k in range(1, N):
        den = d(N - k) + 1.0
        if den == 0.0:
            raise ZeroDivisionError("delta_l + 1 vanished")
        a = (d(N - k + 1) - eta * d(N - k)) / den
        for j in range(0, k - 1):
            den_j = d(N - j - 1) + 1.0
            if den_j == 0.0:
                raise ZeroDivisionError("delta_l + 1 vanished")
            a *= (eta + d(N - j)) / den_j
        out.append(a)
    return out
