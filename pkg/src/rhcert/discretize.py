"""Matrix exponential (scaling and squaring, fixed-order Pade) and exact
zero-order-hold discretization of continuous-time linear dynamics."""

from __future__ import annotations

import math

import numpy as np

_PADE_ORDER = 10
_THETA = 0.5  # scale until ||M||_1 <= theta

_PADE_COEFFS = tuple(
    math.factorial(2 * _PADE_ORDER - k)
    * math.factorial(_PADE_ORDER)
    / (
        math.factorial(2 * _PADE_ORDER)
        * math.factorial(k)
        * math.factorial(_PADE_ORDER - k)
    )
    for k in range(_PADE_ORDER + 1)
)


def expm(M: np.ndarray) -> np.ndarray:
    """Matrix exponential via scaling-and-squaring with a (10,10) Pade step."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expm needs a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("expm needs finite entries")
    norm = float(np.max(np.sum(np.abs(M), axis=0))) if M.size else 0.0
    s = max(0, int(math.ceil(math.log2(norm / _THETA))) if norm > _THETA else 0)
    A = M / (2.0**s)
    n = A.shape[0]
    num = np.zeros((n, n))
    den = np.zeros((n, n))
    power = np.eye(n)
    for k, ck in enumerate(_PADE_COEFFS):
        num += ck * power
        den += ck * (-1.0) ** k * power
        power = power @ A
    E = np.linalg.solve(den, num)
    for _ in range(s):
        E = E @ E
    return E


def exact_discretization(A_c: np.ndarray, B_c: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Zero-order-hold (A_d, B_d) from exp of the augmented block [[A,B],[0,0]] h."""
    if h <= 0:
        raise ValueError("sampling time must be positive")
    A_c = np.asarray(A_c, dtype=float)
    B_c = np.asarray(B_c, dtype=float)
    n, m = A_c.shape[0], B_c.shape[1]
    if A_c.shape != (n, n) or B_c.shape[0] != n:
        raise ValueError("inconsistent dimensions")
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A_c
    M[:n, n:] = B_c
    E = expm(M * h)
    A_d, B_d = E[:n, :n], E[:n, n:]
    if not (np.all(np.isfinite(A_d)) and np.all(np.isfinite(B_d))):
        raise ValueError("discretization produced non-finite entries")
    return A_d, B_d
