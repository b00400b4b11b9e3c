"""Built-in benchmark models: mass-spring-damper chain and four-tank plant."""

from __future__ import annotations

import numpy as np

from .discretize import exact_discretization
from .systems import LinearSystem, NonlinearSystem, QuadraticStageCost


def msd_chain_model(
    L: int = 6,
    m: float = 1.0,
    k: float = 10.0,
    d: float = 2.0,
    h: float = 1.0,
    u_limit: float = 1.0,
) -> LinearSystem:
    """Chain of L masses: wall - m_1 - ... - m_L, force input on the last mass.

    Each link is a parallel spring (k) and damper (d); state ordering
    x = [z_1, zdot_1, ..., z_L, zdot_L]; exact discretization at step h.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if min(m, k, d) <= 0 or h <= 0:
        raise ValueError("physical constants must be positive")
    n = 2 * L
    K = np.zeros((L, L))
    D = np.zeros((L, L))
    for i in range(L):
        K[i, i] += k
        D[i, i] += d
        if i > 0:
            K[i, i - 1] -= k
            D[i, i - 1] -= d
        if i < L - 1:
            K[i, i] += k
            D[i, i] += d
            K[i, i + 1] -= k
            D[i, i + 1] -= d
    A_c = np.zeros((n, n))
    B_c = np.zeros((n, 1))
    for i in range(L):
        A_c[2 * i, 2 * i + 1] = 1.0
        A_c[2 * i + 1, 0::2] = -K[i] / m
        A_c[2 * i + 1, 1::2] = -D[i] / m
    B_c[n - 1, 0] = 1.0 / m
    A_d, B_d = exact_discretization(A_c, B_c, h)
    C = np.zeros((1, n))
    C[0, 0] = 1.0  # position of the first mass
    return LinearSystem(A=A_d, B=B_d, C=C, u_lower=[-u_limit], u_upper=[u_limit])


def msd_chain_cost(sys: LinearSystem, q: float, r: float) -> QuadraticStageCost:
    """Stage cost z_1^2 + q ||x||^2 + r u^2 around the origin."""
    return QuadraticStageCost(
        Q_y=np.eye(sys.C.shape[0]),
        q=q,
        R=r * np.eye(sys.m),
        x_s=np.zeros(sys.n),
        u_s=np.zeros(sys.m),
    )


FOUR_TANK_DEFAULTS: dict[str, float] = {
    # Outflow, coupling, and input-gain coefficients.  The source study cites
    # these from an external reference without printing them; this set is a
    # documented placeholder producing a well-posed plant with the same
    # structure (levels in the single digits, minutes-scale dynamics).
    "c1": 0.08,
    "c2": 0.06,
    "c3": 0.07,
    "c4": 0.09,
    "c12": 0.04,
    "c34": 0.05,
    "c1u": 0.10,
    "c2u": 0.09,
    "c3u": 0.06,
    "c4u": 0.08,
    "x_s2": 2.0,
    "x_s4": 3.0,
    "u_max": 4.0,
    "T_s": 3.0,
}


def four_tank_setpoint(p: dict[str, float]) -> tuple[np.ndarray, np.ndarray]:
    """Equilibrium (x_s, u_s) consistent with the tank parameters.

    x_s2, x_s4 are free choices; the remaining levels and the two pump
    commands follow from the steady-state balance.
    """
    u1 = p["c4"] * np.sqrt(p["x_s4"]) / p["c4u"]
    u2 = p["c2"] * np.sqrt(p["x_s2"]) / p["c2u"]
    x1 = ((p["c12"] * np.sqrt(p["x_s2"]) + p["c1u"] * u1) / p["c1"]) ** 2
    x3 = ((p["c34"] * np.sqrt(p["x_s4"]) + p["c3u"] * u2) / p["c3"]) ** 2
    return np.array([x1, p["x_s2"], x3, p["x_s4"]]), np.array([u1, u2])


def four_tank_model(params: dict[str, float] | None = None) -> NonlinearSystem:
    """Four-tank vector field; outputs are the levels of tanks 1 and 3.

    Square roots are guarded at zero (non-negative water levels), which also
    keeps the RK4 map smooth wherever levels stay positive.
    """
    p = dict(FOUR_TANK_DEFAULTS)
    if params:
        unknown = set(params) - set(p)
        if unknown:
            raise ValueError(f"unknown four-tank parameters: {sorted(unknown)}")
        p.update(params)
    if any(v <= 0 for v in p.values()):
        raise ValueError("four-tank parameters must be positive")

    c1, c2, c3, c4 = p["c1"], p["c2"], p["c3"], p["c4"]
    c12, c34 = p["c12"], p["c34"]
    c1u, c2u, c3u, c4u = p["c1u"], p["c2u"], p["c3u"], p["c4u"]

    def sq(v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(v, 0.0))

    def f(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        s = sq(x)
        return np.array(
            [
                -c1 * s[0] + c12 * s[1] + c1u * u[0],
                -c2 * s[1] + c2u * u[1],
                -c3 * s[2] + c34 * s[3] + c3u * u[1],
                -c4 * s[3] + c4u * u[0],
            ]
        )

    def dsq(v: float) -> float:
        return 0.5 / np.sqrt(v) if v > 1e-12 else 0.0

    def jac_x(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        d0, d1, d2, d3 = (dsq(max(xi, 0.0)) for xi in x)
        return np.array(
            [
                [-c1 * d0, c12 * d1, 0.0, 0.0],
                [0.0, -c2 * d1, 0.0, 0.0],
                [0.0, 0.0, -c3 * d2, c34 * d3],
                [0.0, 0.0, 0.0, -c4 * d3],
            ]
        )

    def jac_u(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.array([[c1u, 0.0], [0.0, c2u], [0.0, c3u], [c4u, 0.0]])

    C = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    return NonlinearSystem(
        name="four_tank",
        n=4,
        m=2,
        f=f,
        jac_x=jac_x,
        jac_u=jac_u,
        T_s=p["T_s"],
        C=C,
        u_lower=np.zeros(2),
        u_upper=np.full(2, p["u_max"]),
        clamp_nonnegative=True,
        params=p,
    )


def four_tank_cost(model: NonlinearSystem, q: float, r: float = 1e-2) -> QuadraticStageCost:
    """||y||^2 + r ||u - u_s||^2 + q ||x - x_s||^2 at the built-in setpoint."""
    x_s, u_s = four_tank_setpoint(model.params)
    return QuadraticStageCost(
        Q_y=np.eye(2), q=q, R=r * np.eye(2), x_s=x_s, u_s=u_s
    )
