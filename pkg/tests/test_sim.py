"""Discretization, OCP solver, and closed-loop simulation tests."""

from __future__ import annotations

import numpy as np
import pytest

from rhcert.discretize import exact_discretization, expm
from rhcert.models import four_tank_model, four_tank_setpoint, msd_chain_cost, msd_chain_model
from rhcert.ocp import (
    SolverSettings,
    TerminalCostSpec,
    finite_horizon_lqr,
    solve_ocp,
    stationary_riccati,
    v_infty_oracle,
)
from rhcert.simulate import closed_loop, detect_limit_cycle, lyapunov_residuals
from rhcert.systems import LinearSystem, QuadraticStageCost, StateMeasure, StorageFunction


def test_expm_identity_cases():
    assert np.allclose(expm(np.zeros((3, 3))), np.eye(3))
    a = np.array([[-1.0]])
    assert expm(a)[0, 0] == pytest.approx(np.exp(-1.0), rel=1e-14)


def test_expm_matches_scipy():
    import scipy.linalg

    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(1, 8))
        M = rng.normal(size=(n, n)) * rng.uniform(0.1, 5.0)
        assert np.allclose(expm(M), scipy.linalg.expm(M), rtol=1e-10, atol=1e-12)


def test_exact_discretization_trivial():
    B = np.array([[2.0], [1.0]])
    A_d, B_d = exact_discretization(np.zeros((2, 2)), B, h=0.5)
    assert np.allclose(A_d, np.eye(2))
    assert np.allclose(B_d, 0.5 * B)


def test_exact_discretization_semigroup():
    rng = np.random.default_rng(1)
    A_c = rng.normal(size=(4, 4))
    B_c = rng.normal(size=(4, 2))
    A1, _ = exact_discretization(A_c, B_c, 1.0)
    A2, _ = exact_discretization(A_c, B_c, 0.5)
    assert np.allclose(A2 @ A2, A1, atol=1e-10)


def test_msd_chain_spectral_radius_and_single_mass():
    sys = msd_chain_model()
    assert sys.spectral_radius() == pytest.approx(0.943, abs=5e-3)
    # L=1: continuous eigenvalues (-d +- sqrt(d^2-4mk))/(2m)
    m, k, d = 1.0, 10.0, 2.0
    sys1 = msd_chain_model(L=1, m=m, k=k, d=d)
    disc = np.sort(np.linalg.eigvals(sys1.A))
    lam = (-d + np.sqrt(complex(d * d - 4 * m * k))) / (2 * m)
    expected = np.sort([np.exp(lam), np.exp(np.conj(lam))])
    assert np.allclose(disc, expected, atol=1e-12)


def test_msd_chain_undamped_is_marginal():
    sys = msd_chain_model(d=1e-12)
    assert sys.spectral_radius() == pytest.approx(1.0, abs=1e-6)


def test_lqr_instability_pattern():
    sys = msd_chain_model()
    cost = msd_chain_cost(sys, q=1e-4, r=1e-5)
    rhos = {N: finite_horizon_lqr(sys, cost, None, N)[1] for N in (2, 3, 4, 5)}
    assert rhos[2] > 1 and rhos[4] > 1 and rhos[5] > 1
    assert rhos[3] < 1


def test_lqr_long_horizon_approaches_stationary():
    sys = msd_chain_model(L=2)
    cost = msd_chain_cost(sys, q=0.1, r=0.5)
    P_inf = stationary_riccati(sys, cost)
    K_long, _ = finite_horizon_lqr(sys, cost, None, 400)
    S = np.asarray(cost.R) + sys.B.T @ P_inf @ sys.B
    K_inf = np.linalg.solve(S, sys.B.T @ P_inf @ sys.A)
    assert np.allclose(K_long, K_inf, atol=1e-8)


def test_lqr_one_step_hand_formula():
    sys = LinearSystem(A=[[1.0]], B=[[1.0]], C=[[1.0]], u_lower=[-5], u_upper=[5])
    cost = QuadraticStageCost(Q_y=[[1.0]], q=0.0, R=[[2.0]], x_s=[0.0], u_s=[0.0])
    # one Riccati step from P=0: K = 0 (no terminal cost felt)
    K, rho = finite_horizon_lqr(sys, cost, None, 1)
    assert np.allclose(K, 0.0)
    # with terminal weight p_f: K = p_f/(r+p_f)
    K2, _ = finite_horizon_lqr(sys, cost, np.array([[3.0]]), 1)
    assert K2[0, 0] == pytest.approx(3.0 / 5.0)


def test_ocp_setpoint_start_is_zero():
    sys = msd_chain_model(L=2)
    cost = msd_chain_cost(sys, q=0.1, r=0.1)
    sol = solve_ocp(sys, cost, TerminalCostSpec.none(), 5, np.zeros(sys.n))
    assert sol.objective == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(sol.inputs, 0.0, atol=1e-9)


def test_ocp_unconstrained_matches_riccati():
    sys = msd_chain_model(L=2, u_limit=1e9)  # box never active
    cost = msd_chain_cost(sys, q=0.1, r=0.5)
    N = 8
    # Riccati value for horizon N: P_0 from N backward steps
    A, B = sys.A, sys.B
    Qt = cost.state_weight(sys.C)
    R = np.asarray(cost.R)
    P = np.zeros_like(A)
    for _ in range(N):
        S = R + B.T @ P @ B
        K = np.linalg.solve(S, B.T @ P @ A)
        P = Qt + A.T @ P @ A - A.T @ P @ B @ K
    rng = np.random.default_rng(5)
    for _ in range(3):
        x0 = rng.normal(size=sys.n)
        sol = solve_ocp(sys, cost, TerminalCostSpec.none(), N, x0)
        assert sol.converged
        assert sol.objective == pytest.approx(float(x0 @ P @ x0), rel=1e-6, abs=1e-6)


def test_ocp_box_saturation_matches_grid_search():
    # scalar a=1, b=1, q~=1, r=1, U=[-1,1], large x0: first input saturates
    sys = LinearSystem(A=[[1.0]], B=[[1.0]], C=[[1.0]], u_lower=[-1.0], u_upper=[1.0])
    cost = QuadraticStageCost(Q_y=[[1.0]], q=0.0, R=[[1.0]], x_s=[0.0], u_s=[0.0])
    x0 = np.array([5.0])
    sol = solve_ocp(sys, cost, TerminalCostSpec.none(), 2, x0)
    assert sol.inputs[0, 0] == pytest.approx(-1.0, abs=1e-8)
    # brute force over a fine input grid confirms both the value and argmin
    grid = np.linspace(-1, 1, 401)
    best = None
    for u0 in grid:
        for u1 in grid:
            x1 = x0[0] + u0
            J = x0[0] ** 2 + u0**2 + x1**2 + u1**2
            if best is None or J < best[0]:
                best = (J, u0, u1)
    assert sol.objective <= best[0] + 1e-6


def test_ocp_finite_tail_terminal_value():
    sys = msd_chain_model(L=2)
    cost = msd_chain_cost(sys, q=0.1, r=0.1)
    x0 = np.zeros(sys.n)
    x0[0] = 0.4
    sol_tail = solve_ocp(sys, cost, TerminalCostSpec.finite_tail(6), 4, x0)
    # finite-tail objective equals stage costs + open-loop tail from x_N
    J_manual = 0.0
    z = x0.copy()
    for k in range(4):
        J_manual += cost.ell(z, sol_tail.inputs[k], sys.C)
        z = sys.step(z, sol_tail.inputs[k])
    for _ in range(6):
        J_manual += cost.ell(z, cost.u_s, sys.C)
        z = sys.step(z, cost.u_s)
    assert sol_tail.objective == pytest.approx(J_manual, rel=1e-10)


def test_dynamic_programming_consistency():
    sys = msd_chain_model(L=2)
    cost = msd_chain_cost(sys, q=0.1, r=0.1)
    rng = np.random.default_rng(8)
    for _ in range(5):
        x = rng.normal(size=sys.n) * 0.5
        u = rng.uniform(sys.u_lower, sys.u_upper)
        V3 = solve_ocp(sys, cost, TerminalCostSpec.none(), 3, x).objective
        V2_next = solve_ocp(sys, cost, TerminalCostSpec.none(), 2, sys.step(x, u)).objective
        assert V3 <= cost.ell(x, u, sys.C) + V2_next + 1e-7


def test_value_monotone_in_horizon():
    sys = msd_chain_model(L=2)
    cost = msd_chain_cost(sys, q=0.1, r=0.1)
    rng = np.random.default_rng(9)
    x = rng.normal(size=sys.n)
    vals = [solve_ocp(sys, cost, TerminalCostSpec.none(), N, x).objective for N in (1, 2, 4, 8)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_rk4_order_on_four_tank():
    model = four_tank_model()
    x_s, u_s = four_tank_setpoint(model.params)
    x = x_s + np.array([1.0, -0.5, 0.8, 0.3])
    u = u_s * 1.1
    x_h = model.step(x, u, substeps=1)
    x_h2 = model.step(x, u, substeps=2)
    x_h4 = model.step(x, u, substeps=4)
    e1 = np.linalg.norm(x_h - x_h4)
    e2 = np.linalg.norm(x_h2 - x_h4)
    # O(h^5) local / O(h^4) global: halving the step gains ~16x
    assert e1 / max(e2, 1e-16) > 8.0


def test_four_tank_equilibrium():
    model = four_tank_model()
    x_s, u_s = four_tank_setpoint(model.params)
    assert np.allclose(model.f(x_s, u_s), 0.0, atol=1e-12)
    assert np.allclose(model.step(x_s, u_s), x_s, atol=1e-10)


def test_four_tank_jacobian_consistency():
    model = four_tank_model()
    x_s, u_s = four_tank_setpoint(model.params)
    x = x_s + np.array([0.5, -0.2, 0.1, 0.4])
    u = u_s * 0.9
    x_next, Ax, Bu = model.step_with_jacobians(x, u)
    assert np.allclose(x_next, model.step(x, u), atol=1e-13)
    eps = 1e-6
    for i in range(4):
        dx = np.zeros(4)
        dx[i] = eps
        fd = (model.step(x + dx, u) - model.step(x - dx, u)) / (2 * eps)
        assert np.allclose(Ax[:, i], fd, atol=1e-6)
    for j in range(2):
        du = np.zeros(2)
        du[j] = eps
        fd = (model.step(x, u + du) - model.step(x, u - du)) / (2 * eps)
        assert np.allclose(Bu[:, j], fd, atol=1e-6)


def test_closed_loop_stable_linear_decay():
    sys = msd_chain_model(L=2)
    cost = msd_chain_cost(sys, q=0.5, r=0.1)
    x0 = 0.3 * np.ones(sys.n)
    trace = closed_loop(sys, cost, TerminalCostSpec.none(), 12, x0, 60)
    norms = np.linalg.norm(trace.states, axis=1)
    assert norms[-1] < 1e-3
    # replay determinism
    trace2 = closed_loop(sys, cost, TerminalCostSpec.none(), 12, x0, 60)
    assert np.array_equal(trace.states, trace2.states)
    assert np.array_equal(trace.inputs, trace2.inputs)


def test_closed_loop_warm_start_no_worse_than_candidate():
    sys = msd_chain_model(L=2)
    cost = msd_chain_cost(sys, q=0.5, r=0.1)
    trace = closed_loop(sys, cost, TerminalCostSpec.none(), 8, 0.2 * np.ones(sys.n), 20)
    # V_N(x_{k+1}) <= V_N(x_k) - ell_k + shifted-candidate slack; with the
    # plain shifted candidate: V(x_{k+1}) <= V(x_k) - ell_k + ell(x_N-ish)
    # here simply check the recorded values are finite and nonincreasing-ish
    v = trace.value_functions
    assert np.all(np.isfinite(v))
    assert v[-1] <= v[0]


def test_lyapunov_residuals_certified_design():
    sys = msd_chain_model(L=2)
    cost = msd_chain_cost(sys, q=0.5, r=0.1)
    from rhcert.constants import CertificationConstants
    from rhcert.estimation import gamma_linear_openloop
    from rhcert.bounds import alpha_tight_stage

    sig = StateMeasure.stage_cost_min()
    gam = gamma_linear_openloop(sys, cost, sig, K=60)
    c = CertificationConstants.stage_cost_mode(gam)
    N = next(n for n in range(2, 60) if alpha_tight_stage(c, n).alpha > 0)
    alpha = alpha_tight_stage(c, N).alpha
    trace = closed_loop(sys, cost, TerminalCostSpec.none(), N, 0.2 * np.ones(sys.n), 40)
    res = lyapunov_residuals(trace, StorageFunction.zero(), sig, cost, sys.C, alpha, eps_o=1.0)
    assert np.max(res) <= 1e-6


def test_limit_cycle_detector_on_synthetic_traces():
    n = 2
    T = 200
    t = np.arange(T + 1)
    # oscillating, bounded, away from origin
    osc = np.stack([0.5 * np.sin(0.3 * t), 0.5 * np.cos(0.3 * t)], axis=1)
    trace = ClosedLoopTraceStub(osc)
    rep = detect_limit_cycle(trace, np.zeros(n))
    assert rep.detected and not rep.converged_to_setpoint
    dec = np.stack([np.exp(-0.05 * t), np.exp(-0.05 * t)], axis=1) * 1e-3
    rep2 = detect_limit_cycle(ClosedLoopTraceStub(dec), np.zeros(n))
    assert not rep2.detected and rep2.converged_to_setpoint


class ClosedLoopTraceStub:
    def __init__(self, states):
        self.states = states


def test_v_infty_oracle_consistency():
    sys = msd_chain_model(L=2)
    cost = msd_chain_cost(sys, q=0.5, r=0.1)
    x0 = 0.2 * np.ones(sys.n)
    # setpoint start
    v0, _ = v_infty_oracle(sys, cost, np.zeros(sys.n), H=40)
    assert v0 == pytest.approx(0.0, abs=1e-10)
    # unconstrained case matches the stationary Riccati value
    sys_free = msd_chain_model(L=2, u_limit=1e9)
    P_inf = stationary_riccati(sys_free, cost)
    v, gap = v_infty_oracle(sys_free, cost, x0, H=300)
    assert v == pytest.approx(float(x0 @ P_inf @ x0), rel=1e-4)
    assert abs(gap) < 1e-6


def test_trace_csv_export(tmp_path):
    sys = msd_chain_model(L=1)
    cost = msd_chain_cost(sys, q=0.5, r=0.1)
    trace = closed_loop(sys, cost, TerminalCostSpec.none(), 5, np.array([0.3, 0.0]), 10)
    p = tmp_path / "trace.csv"
    trace.to_csv(p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "k,x_1,x_2,u_1,stage_cost,V_N,lyap_residual"
    assert len(lines) == 11
    trace.write_metadata(tmp_path / "trace.json")
    import json

    meta = json.loads((tmp_path / "trace.json").read_text())
    assert meta["horizon"] == 5
