"""Command-line surface: constants / bounds / certify / simulate / sweep.

One JSON config file drives everything; flags override the essentials.
Environment overrides use the RHCERT_ prefix (RHCERT_THREADS, RHCERT_SEED,
RHCERT_OUT).
"""

from __future__ import annotations

import argparse
import json
import os
import sys as _sys
from pathlib import Path

import numpy as np

from . import bounds
from .constants import CertificationConstants, TerminalConstants
from .estimation import GridSpec, gamma_linear_openloop, gamma_nonlinear_grid, narx_storage, synthesize_storage_linear
from .lp import build_worst_case_lp, build_worst_case_lp_terminal
from .models import four_tank_cost, four_tank_model, msd_chain_cost, msd_chain_model
from .ocp import SolverSettings, TerminalCostSpec
from .pipeline import ScenarioConfig, emit_reports, run_certification, _atomic_write
from .simulate import closed_loop, detect_limit_cycle
from .systems import StateMeasure


def _load_config(args) -> ScenarioConfig:
    if args.config:
        cfg = ScenarioConfig.from_file(args.config)
    else:
        cfg = ScenarioConfig({})
    if args.seed is not None:
        cfg.resolved["seed"] = args.seed
    elif "RHCERT_SEED" in os.environ:
        cfg.resolved["seed"] = int(os.environ["RHCERT_SEED"])
    if args.out:
        cfg.resolved["output"]["dir"] = args.out
    elif "RHCERT_OUT" in os.environ:
        cfg.resolved["output"]["dir"] = os.environ["RHCERT_OUT"]
    if args.threads is not None:
        os.environ["RHCERT_THREADS"] = str(args.threads)
    return cfg


def _build_plant(cfg: ScenarioConfig):
    conf = cfg.resolved
    q, r = float(conf["cost"]["q"]), float(conf["cost"]["r"])
    if conf["model"]["builtin"] == "msd_chain":
        sys = msd_chain_model(**conf["model"]["params"])
        return sys, msd_chain_cost(sys, q=q, r=r)
    model = four_tank_model(conf["model"]["params"] or None)
    return model, four_tank_cost(model, q=q, r=r)


def cmd_constants(args) -> int:
    cfg = _load_config(args)
    conf = cfg.resolved
    plant, cost = _build_plant(cfg)
    K = int(conf["analysis"]["K"])
    out: dict = {"config": conf}
    if conf["model"]["builtin"] == "msd_chain":
        if cost.q > 0:
            gam = gamma_linear_openloop(plant, cost, StateMeasure.stage_cost_min(), K)
            out["gamma_sigma_ell"] = [float(g) for g in gam]
        synth = synthesize_storage_linear(plant, cost, K=K, sweeps=int(conf["analysis"]["synthesis_sweeps"]))
        out["storage"] = {
            "eps_o": synth.eps_o,
            "gamma_bar": synth.gamma_bar,
            "n_min_storage_const": synth.n_min_storage_const,
            "gamma": [float(g) for g in synth.constants.gamma],
            "per_eps": synth.per_eps,
        }
    else:
        grid_cfg = conf["analysis"]["grid"] or {"lower": [-2.0] * 4, "upper": [2.0] * 4, "points": [5] * 4}
        grid = GridSpec(np.asarray(grid_cfg["lower"], float), np.asarray(grid_cfg["upper"], float), tuple(grid_cfg["points"]))
        st = narx_storage(2, np.eye(2), np.asarray(cost.R, float))
        res = gamma_nonlinear_grid(plant, cost, st, grid, K)
        out["gamma_sigma_W"] = [float(g) for g in res.gamma]
        out["provenance"] = "sampled"
        if cost.q > 0:
            res_l = gamma_nonlinear_grid(plant, cost, StateMeasure.stage_cost_min(), grid, K)
            out["gamma_sigma_ell"] = [float(g) for g in res_l.gamma]
    out_dir = Path(conf["output"]["dir"])
    _atomic_write(out_dir / "constants.json", json.dumps(out, indent=2, sort_keys=True) + "\n")
    # CSV export of the gamma sequences (columns: k, gamma_k, mode, provenance)
    lines = ["k,gamma_k,mode,provenance"]
    for key, mode, prov in (
        ("gamma_sigma_ell", "ell", "exact" if conf["model"]["builtin"] == "msd_chain" else "sampled"),
        ("gamma_sigma_W", "W", "sampled"),
    ):
        if key in out:
            for k, g in enumerate(out[key], start=1):
                lines.append(f"{k},{g:.12g},{mode},{prov}")
    if "storage" in out:
        for k, g in enumerate(out["storage"]["gamma"], start=1):
            lines.append(f"{k},{g:.12g},W,exact")
    _atomic_write(out_dir / "constants.csv", "\n".join(lines) + "\n")
    print(f"wrote {out_dir/'constants.json'} and {out_dir/'constants.csv'}")
    return 0


def cmd_bounds(args) -> int:
    data = json.loads(Path(args.constants).read_text())
    gam = data["gamma"]
    eps_o = float(data.get("eps_o", 1.0))
    mode = data.get("sigma", "ell")
    if mode == "ell":
        c = CertificationConstants.stage_cost_mode(gam)
    else:
        c = CertificationConstants.storage_mode(gam, eps_o)
    rows = []
    for N in range(1, len(gam) + 1):
        if mode == "ell":
            a = bounds.alpha_tight_stage(c, N).alpha
        else:
            a = bounds.alpha_tight_storage(c, N).alpha
        rows.append((N, a))
        if a > 0 and not args.full:
            break
    for N, a in rows:
        print(f"N={N}: alpha={a:.6g}")
    certified = [N for N, a in rows if a > 0]
    if certified:
        print(f"smallest certified horizon: {certified[0]}")
        return 0
    print("no certified horizon within the supplied sequence")
    return 1


def cmd_certify(args) -> int:
    cfg = _load_config(args)
    report = run_certification(cfg)
    paths = emit_reports(report, cfg.resolved["output"]["dir"], cfg.resolved["output"]["prefix"])
    if args.lp_dump:
        _dump_lps(cfg, Path(cfg.resolved["output"]["dir"]))
    print(f"wrote {paths['csv']} ({len(report.rows)} rows)")
    for failure in report.failures:
        print(f"failure: {failure}", file=_sys.stderr)
    return 1 if report.failures else 0


def cmd_sweep(args) -> int:
    return cmd_certify(args)


def _dump_lps(cfg: ScenarioConfig, out_dir: Path) -> None:
    """Debug dump of representative LP instances in interchange format."""
    conf = cfg.resolved
    gam = [2.0] * 8
    c = CertificationConstants.storage_mode(gam, 0.5)
    t = TerminalConstants(c_f_lower=1.0, c_f_upper=1.0, eps_f=1.0, gamma_f=tuple(gam))
    build_worst_case_lp(c, 5).dump(out_dir / "worst_case_example.lp")
    build_worst_case_lp_terminal(c, t, 5).dump(out_dir / "worst_case_terminal_example.lp")


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    conf = cfg.resolved
    plant, cost = _build_plant(cfg)
    sim = conf["simulation"]
    n = plant.n
    x0_off = sim["x0_offset"]
    if x0_off is None:
        x0_off = [1.0] * n
    x0 = cost.x_s + np.asarray(x0_off, float)
    variant = sim["terminal"]
    if variant == "none":
        terminal = TerminalCostSpec.none()
    elif variant == "scaled":
        sig = StateMeasure.stage_cost_min()
        P_sigma = sig.matrix(cost, plant.C)
        terminal = TerminalCostSpec.scaled_measure(float(conf["terminal"]["omega"]), P_sigma)
    elif variant == "finite_tail":
        terminal = TerminalCostSpec.finite_tail(int(conf["terminal"]["M"]))
    else:
        raise ValueError(f"unknown simulation terminal '{variant}'")
    settings = SolverSettings(max_iters=int(sim["max_iters"]))
    trace = closed_loop(plant, cost, terminal, int(sim["N"]), x0, int(sim["T_steps"]), settings)
    report = detect_limit_cycle(trace, cost.x_s, threshold=float(sim["cycle_threshold"]))
    out_dir = Path(conf["output"]["dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out_dir / "trace.csv")
    trace.metadata.update(
        {
            "limit_cycle": report.detected,
            "converged_to_setpoint": report.converged_to_setpoint,
            "window_min_distance": report.window_min_distance,
            "window_max_distance": report.window_max_distance,
            "config": conf,
        }
    )
    trace.write_metadata(out_dir / "trace.json")
    print(
        f"wrote {out_dir/'trace.csv'}; limit_cycle={report.detected} "
        f"converged={report.converged_to_setpoint}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="rhcert", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None, help="JSON scenario config")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--lp-dump", action="store_true", dest="lp_dump")

    p_const = sub.add_parser("constants", help="estimate gamma_k and storage")
    common(p_const)
    p_bounds = sub.add_parser("bounds", help="alpha / n_min from a constants JSON")
    p_bounds.add_argument("constants", type=str, help="JSON with gamma (list), eps_o, sigma")
    p_bounds.add_argument("--full", action="store_true", help="print every horizon")
    p_cert = sub.add_parser("certify", help="full certification pipeline")
    common(p_cert)
    p_sweep = sub.add_parser("sweep", help="parameter sweep (alias of certify)")
    common(p_sweep)
    p_sim = sub.add_parser("simulate", help="closed-loop simulation")
    common(p_sim)

    args = parser.parse_args(argv)
    dispatch = {
        "constants": cmd_constants,
        "bounds": cmd_bounds,
        "certify": cmd_certify,
        "sweep": cmd_sweep,
        "simulate": cmd_simulate,
    }
    return dispatch[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
