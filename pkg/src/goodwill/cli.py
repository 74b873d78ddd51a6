"""Command-line front end for the goodwill experiments.

Subcommands build scenarios from a JSON config merged over the shipped
defaults file and emit CSV (or JSON) results. Every CSV starts with a
comment line carrying a hash of the fully merged config, so outputs are
traceable and re-runs are byte-identical.

    goodwill fig1 --out fig1.csv
    goodwill fig2 --axis a1_amplitude --out fig2a.csv
    goodwill sensitivity --out sens.csv
    goodwill feedback-check --a0 -1 --a1 -2 --variant cot
    goodwill costate --out costate.csv
    goodwill evaluate --out value.json
    goodwill approx --out table.csv

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from importlib import resources

import numpy as np

from . import approximation, lq, sdde, state_delay
from .hilbert import ExponentialKernel, SegmentGrid, ZeroKernel
from .lifting import lift_M
from .sdde import BlowupError, ConfigurationError, HistoryPair, ModelParams

KNOWN_KEYS = {
    "a0", "b0", "sigma", "beta", "gamma", "T", "r",
    "delta_a", "delta_b", "a1_amp", "b1_amp",
    "u_min", "u_max", "x0", "x1_decay",
    "dt", "n_paths", "seed", "n_nodes",
    "amplitudes", "r_grid", "t_eval", "eps1_list", "eps2_list",
}


def load_defaults() -> dict:
    with resources.files("goodwill").joinpath("defaults.json").open() as fh:
        return json.load(fh)


def merged_config(config_path: str | None, overrides: dict) -> dict:
    cfg = load_defaults()
    if config_path:
        with open(config_path) as fh:
            user = json.load(fh)
        unknown = set(user) - KNOWN_KEYS
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(user)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode("utf-8")
    ).hexdigest()[:16]


def _kernel(amp: float, delta: float):
    return ZeroKernel() if amp == 0.0 else ExponentialKernel(amp, delta)


def build_params(cfg: dict, a1_amp=None, b1_amp=None) -> ModelParams:
    a1_amp = cfg["a1_amp"] if a1_amp is None else a1_amp
    b1_amp = cfg["b1_amp"] if b1_amp is None else b1_amp
    return ModelParams(
        a0=cfg["a0"],
        a1=_kernel(a1_amp, cfg["delta_a"]),
        b0=cfg["b0"],
        b1=_kernel(b1_amp, cfg["delta_b"]),
        sigma=cfg["sigma"],
        r=cfg["r"],
        T=cfg["T"],
        u_min=cfg["u_min"],
        u_max=cfg["u_max"],
    )


def build_history(cfg: dict, grid: SegmentGrid) -> HistoryPair:
    x1 = cfg["x0"] * np.exp(-np.abs(grid.nodes) / cfg["x1_decay"])
    return HistoryPair(grid=grid, x0=cfg["x0"], x1=x1, delta=np.zeros(grid.n_nodes))


def build_objective(cfg: dict) -> sdde.ObjectiveSpec:
    return sdde.ObjectiveSpec(
        phi0=sdde.LinearReward(cfg["gamma"]),
        h0=sdde.QuadraticCost(cfg["beta"]),
        growth_K=abs(cfg["gamma"]) + 1.0,
        growth_m=1.0,
    )


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _csv(cfg: dict, header: str, rows: list[str]) -> str:
    return "\n".join([f"# config_hash={config_hash(cfg)}", header] + rows) + "\n"


# --- subcommands ------------------------------------------------------------


def run_fig1(cfg: dict) -> str:
    """Optimal policy trajectories in the four churn settings."""
    settings = [
        ("z_no_churn", 0.0, 0.0),
        ("z_goodwill_churn", cfg["a1_amp"], 0.0),
        ("z_advertising_churn", 0.0, cfg["b1_amp"]),
        ("z_both", cfg["a1_amp"], cfg["b1_amp"]),
    ]
    cols = []
    t = None
    for _, a_amp, b_amp in settings:
        params = build_params(cfg, a1_amp=a_amp, b1_amp=b_amp)
        cs = lq.solve_costate(params, cfg["gamma"], cfg["beta"], cfg["dt"])
        zs = np.maximum(cs.bw, 0.0) / (2.0 * cfg["beta"])
        cols.append(zs)
        t = cs.t
    rows = [
        ",".join([f"{t[k]:.10g}"] + [f"{col[k]:.10g}" for col in cols])
        for k in range(len(t))
    ]
    header = "t," + ",".join(name for name, _, _ in settings)
    return _csv(cfg, header, rows)


def run_fig2(cfg: dict, axis: str) -> str:
    """Relative performance gap of the memoryless policy vs churn amplitude."""
    if axis not in ("a1_amplitude", "b1_amplitude"):
        raise ConfigurationError(f"unknown axis {axis!r}")
    amplitudes = cfg.get("amplitudes")
    if amplitudes is None:
        amplitudes = (
            [0.0, -1.0, -2.0, -3.0, -4.0, -5.0]
            if axis == "a1_amplitude"
            else [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
        )
    grid = SegmentGrid(cfg["r"], cfg["n_nodes"])
    history = build_history(cfg, grid)
    obj = build_objective(cfg)
    rows = []
    for amp in amplitudes:
        if axis == "a1_amplitude":
            params = build_params(cfg, a1_amp=amp, b1_amp=0.0)
        else:
            params = build_params(cfg, a1_amp=0.0, b1_amp=amp)
        cs = lq.solve_costate(params, cfg["gamma"], cfg["beta"], cfg["dt"])
        zstar = lq.optimal_policy_lq(cs, params)
        zmem = lq.memoryless_policy(params, cfg["gamma"], cfg["beta"])
        v_opt = sdde.evaluate_policy(
            params, history, zstar, obj, cfg["dt"], cfg["n_paths"], cfg["seed"]
        )
        v_mem = sdde.evaluate_policy(
            params, history, zmem, obj, cfg["dt"], cfg["n_paths"], cfg["seed"]
        )
        gap = sdde.relative_gap(v_opt, v_mem)
        rows.append(
            f"{amp:.10g},{v_opt.mean:.10g},{v_mem.mean:.10g},"
            f"{gap.gap:.10g},{gap.stderr:.10g}"
        )
    return _csv(cfg, "amplitude,V_hat,V0_hat,gap,gap_stderr", rows)


def run_sensitivity(cfg: dict) -> str:
    """Delay-sensitivity formula vs central finite difference over r.

    Runs with a1 = 0 regardless of the configured amplitude: that is the
    regime where the sensitivity formula is exact (the costate w0 is then
    independent of r), so the finite-difference check is meaningful.
    """
    cfg = dict(cfg, a1_amp=0.0)
    r_grid = cfg.get("r_grid")
    if r_grid is None:
        r_grid = [round(0.25 + 0.05 * i, 10) for i in range(10)]
    rows = []
    for r in r_grid:
        h = r / 50.0
        t_eval = cfg.get("t_eval", 0.0)
        formula = _sensitivity_at(cfg, r, t_eval)
        v_plus = _value_at(cfg, r + h, t_eval)
        v_minus = _value_at(cfg, r - h, t_eval)
        fd = (v_plus - v_minus) / (2.0 * h)
        rows.append(
            f"{r:.10g},{formula:.10g},{fd:.10g},{abs(formula - fd):.10g}"
        )
    return _csv(cfg, "r,dV_dr_formula,dV_dr_finite_difference,abs_diff", rows)


def _params_with_r(cfg: dict, r: float) -> ModelParams:
    sub = dict(cfg)
    sub["r"] = r
    return build_params(sub)


def _state_profile(cfg: dict, grid: SegmentGrid):
    from .hilbert import ProfileX

    x1 = cfg["x0"] * np.exp(-np.abs(grid.nodes) / cfg["x1_decay"])
    return ProfileX(cfg["x0"], x1)


def _sensitivity_at(cfg: dict, r: float, t_eval: float) -> float:
    params = _params_with_r(cfg, r)
    grid = SegmentGrid(r, cfg["n_nodes"])
    x = _state_profile(cfg, grid)
    return lq.sensitivity_dV_dr(
        t_eval, x, params, cfg["gamma"], cfg["beta"], cfg["dt"]
    )


def _value_at(cfg: dict, r: float, t_eval: float) -> float:
    params = _params_with_r(cfg, r)
    grid = SegmentGrid(r, cfg["n_nodes"])
    cs = lq.solve_costate(params, cfg["gamma"], cfg["beta"], cfg["dt"])
    return lq.value_lq(t_eval, _state_profile(cfg, grid), cs, grid)


def run_feedback_check(a0: float, a1: float, variant: str) -> str:
    report = state_delay.invariant_measure_condition(a0, a1, variant)
    return json.dumps(
        {
            "variant": variant,
            "holds": report.holds,
            "gamma_root": report.gamma_root,
            "upper_bound": report.upper_bound,
            "diagnostic": report.diagnostic,
        }
    ) + "\n"


def run_costate(cfg: dict) -> str:
    params = build_params(cfg)
    cs = lq.solve_costate(params, cfg["gamma"], cfg["beta"], cfg["dt"])
    body = cs.to_csv().splitlines()
    return _csv(cfg, body[0], body[1:])


def run_evaluate(cfg: dict) -> str:
    params = build_params(cfg)
    grid = SegmentGrid(cfg["r"], cfg["n_nodes"])
    history = build_history(cfg, grid)
    cs = lq.solve_costate(params, cfg["gamma"], cfg["beta"], cfg["dt"])
    policy = lq.optimal_policy_lq(cs, params)
    est = sdde.evaluate_policy(
        params, history, policy, build_objective(cfg),
        cfg["dt"], cfg["n_paths"], cfg["seed"],
    )
    xbar = lift_M(history.x0, history.x1, history.delta, params, grid)
    analytic = lq.value_lq(0.0, xbar, cs, grid)
    return json.dumps(
        {
            "config_hash": config_hash(cfg),
            "mc": json.loads(est.to_json()),
            "analytic_value": analytic,
        }
    ) + "\n"


def run_approx(cfg: dict) -> str:
    params = build_params(cfg)
    grid = SegmentGrid(cfg["r"], cfg["n_nodes"])
    history = build_history(cfg, grid)
    cs = lq.solve_costate(params, cfg["gamma"], cfg["beta"], cfg["dt"])
    policy = lq.optimal_policy_lq(cs, params)
    xbar = lift_M(history.x0, history.x1, history.delta, params, grid)
    baseline = lq.value_lq(0.0, xbar, cs, grid)
    dt = min(cfg["dt"], grid.spacing)
    steps = max(1, round(params.T / dt))
    dt = params.T / steps
    rows = approximation.convergence_study(
        params, xbar, policy, cfg["gamma"], cfg["beta"], baseline,
        cfg.get("eps1_list", [0.0, 0.1]),
        cfg.get("eps2_list", [0.4, 0.2, 0.1, 0.05]),
        grid, dt, cfg["n_paths"], cfg["seed"],
    )
    body = approximation.convergence_rows_to_csv(rows).splitlines()
    return _csv(cfg, body[0], body[1:])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="goodwill", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--paths", type=int, default=None)
        sp.add_argument("--dt", type=float, default=None)
        sp.add_argument("--out", default="-", help="output path ('-' = stdout)")

    common(sub.add_parser("fig1", help="optimal policies in four churn settings"))
    fig2 = sub.add_parser("fig2", help="memoryless-policy performance gap")
    common(fig2)
    fig2.add_argument(
        "--axis", choices=["a1_amplitude", "b1_amplitude"], default="a1_amplitude"
    )
    common(sub.add_parser("sensitivity", help="delay-sensitivity table"))
    common(sub.add_parser("costate", help="export the costate solution"))
    common(sub.add_parser("evaluate", help="MC value of the optimal policy"))
    common(sub.add_parser("approx", help="regularization convergence table"))
    fc = sub.add_parser("feedback-check", help="invariant-measure condition")
    fc.add_argument("--a0", type=float, required=True)
    fc.add_argument("--a1", type=float, required=True)
    fc.add_argument("--variant", choices=["cot", "coth"], default="cot")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "feedback-check":
            sys.stdout.write(run_feedback_check(args.a0, args.a1, args.variant))
            return 0
        cfg = merged_config(
            args.config,
            {"seed": args.seed, "n_paths": args.paths, "dt": args.dt},
        )
        if args.command == "fig1":
            out = run_fig1(cfg)
        elif args.command == "fig2":
            out = run_fig2(cfg, args.axis)
        elif args.command == "sensitivity":
            out = run_sensitivity(cfg)
        elif args.command == "costate":
            out = run_costate(cfg)
        elif args.command == "evaluate":
            out = run_evaluate(cfg)
        elif args.command == "approx":
            out = run_approx(cfg)
        else:  # pragma: no cover
            raise ConfigurationError(f"unknown command {args.command}")
        _write(args.out, out)
        return 0
    except (ConfigurationError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BlowupError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
