"""Command-line interface: config parsing, run orchestration, reproduction.

Configuration is sectioned key-value text ([kernel], [rate], [pulse],
[evans], [sim]); every key has a reference-example default, command-line
flags override file values, and unknown keys are rejected with line-number
diagnostics.  All numeric CSV output uses 17 significant digits and JSON is
emitted with sorted keys, so identical inputs give byte-identical outputs.

Exit codes: 0 success, 1 numerical failure (structured error JSON on
stdout), 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernel as kmod
from .direct_sim import (SimConfig, measure_speed, profile_on_grid, run as sim_run,
                         stability_probe)
from .errors import NFWavesError
from .evans import EvansContext, scan
from .firing_rate import (RateSpec, discretize, find_fixed_points, tau_zero)
from .front_solver import (check_H1, continue_in_tau, eval_front,
                           eval_front_deriv, front_at_tau)
from .pulse_solver import (PulseParams, build_singular_orbit, eval_pulse,
                           solve_pulse)

PUBLISHED = {
    "sigma1": 0.6497,
    "sigma2_at_0": 1.9754,
    "sigma3_at_1": 1.9754,
    "tau0": 0.8,
    "tau_star": 0.52,
}


class ConfigError(NFWavesError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass
class RunConfig:
    """Validated parameters for every subcommand (defaults: the reference example)."""

    A: float = 5.0
    a: float = 0.5
    B: float = 4.0
    b: float = 0.4211
    normalize: bool = True
    norm_tol: float = kmod.DEFAULT_NORM_TOL
    theta: float = 0.1
    tau: float = 0.52
    r: float = 0.01
    N: int = 20
    epsilon: float = 0.005
    gamma: float = 0.001
    re_min: float = 0.0
    re_max: float = 5.0
    im_max: float = 20.0
    resolution: int = 256
    L: float = 60.0
    n: int = 4096
    dt: float = 0.2
    T: float = 50.0
    boundary: str = "clamped-limits"
    smooth_rate: bool = True
    amplitude: float = 0.02
    tau_max: float = 0.79
    step: float = 0.01
    output_dir: str = "."
    seed_policy: str = "continuation"
    seed_file: str = ""
    ic_file: str = ""

    def kernel(self) -> kmod.KernelParams:
        return kmod.make_kernel(self.A, self.a, self.B, self.b,
                                normalize=self.normalize,
                                norm_tol=self.norm_tol)

    def rate(self, tau: float | None = None) -> RateSpec:
        return RateSpec(theta=self.theta,
                        tau=self.tau if tau is None else tau, r=self.r)


_SCHEMA = {
    "kernel": {"A": float, "a": float, "B": float, "b": float,
               "normalize": bool, "norm_tol": float},
    "rate": {"theta": float, "tau": float, "r": float, "N": int},
    "pulse": {"epsilon": float, "gamma": float},
    "evans": {"re_min": float, "re_max": float, "im_max": float,
              "resolution": int},
    "sim": {"L": float, "n": int, "dt": float, "T": float, "boundary": str,
            "smooth_rate": bool, "amplitude": float},
    "run": {"tau_max": float, "step": float, "output_dir": str,
            "seed_policy": str, "seed_file": str, "ic_file": str},
}

_VALIDATORS = [
    ("theta", lambda c: 0.0 < c.theta < 0.5, "theta must lie in (0, 1/2)"),
    ("tau", lambda c: c.tau >= 0.0, "tau must be nonnegative"),
    ("r", lambda c: c.r > 0.0, "r must be positive"),
    ("N", lambda c: c.N >= 1, "N must be >= 1"),
    ("epsilon", lambda c: c.epsilon > 0.0, "epsilon must be positive"),
    ("gamma", lambda c: c.gamma > 0.0, "gamma must be positive"),
    ("resolution", lambda c: c.resolution >= 32, "resolution must be >= 32"),
    ("dt", lambda c: 0.0 < c.dt <= 0.25, "dt must lie in (0, 0.25]"),
    ("boundary", lambda c: c.boundary in ("clamped-limits", "periodic"),
     "boundary must be clamped-limits or periodic"),
    ("seed_policy", lambda c: c.seed_policy in ("heaviside", "continuation",
                                                "file"),
     "seed_policy must be heaviside, continuation, or file"),
]


def _parse_value(raw: str, typ):
    if typ is bool:
        low = raw.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if typ is int:
        return int(raw.strip())
    if typ is float:
        return float(raw.strip())
    return raw.strip()


def parse_config(text: str) -> RunConfig:
    """Sectioned key-value text -> RunConfig with aggregated diagnostics."""
    cfg = RunConfig()
    errors = []
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in _SCHEMA:
                errors.append(f"line {lineno}: unknown section [{section}]")
                section = None
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected key = value")
            continue
        if section is None:
            errors.append(f"line {lineno}: key outside any section")
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _SCHEMA[section]:
            errors.append(f"line {lineno}: unknown key {key!r} in [{section}]")
            continue
        try:
            setattr(cfg, key, _parse_value(raw, _SCHEMA[section][key]))
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}: {exc}")
    for key, check, message in _VALIDATORS:
        if not check(cfg):
            errors.append(f"{key}: {message}")
    if errors:
        raise ConfigError(errors)
    return cfg


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return f"{float(v):.17g}"


def write_csv(path: Path, header: list, columns: list) -> None:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_kernel(cfg: RunConfig, out: Path) -> dict:
    k = cfg.kernel()
    sig = kmod.compute_sigmas(k, cfg.theta, min(cfg.theta + cfg.tau, 1.0))
    mus = np.geomspace(0.01, 100.0, 200)
    write_csv(out / "phi_table.csv", ["mu", "phi", "dphi"],
              [mus, kmod.speed_index(k, mus), kmod.speed_index_deriv(k, mus)])
    payload = {
        "M": sig.M, "sigma1": sig.sigma1, "sigma2": sig.sigma2,
        "sigma3": sig.sigma3, "sigma_min": sig.sigma_min,
        "total_mass": k.total_mass,
        "A": k.A, "a": k.a, "B": k.B, "b": k.b,
    }
    write_json(out / "kernel_constants.json", _jsonable(payload))
    return payload


def _cmd_fixed_points(cfg: RunConfig, out: Path) -> dict:
    fp = find_fixed_points(cfg.rate())
    us = np.linspace(-cfg.tau, 2.0 * cfg.tau, 601) if cfg.tau > 0 else \
        np.linspace(-0.5, 0.5, 601)
    from .firing_rate import eval_rate
    write_csv(out / "rate_table.csv", ["u", "S"],
              [us, eval_rate(cfg.rate(), us)])
    payload = {"low": fp.low, "mid": fp.mid, "high": fp.high}
    write_json(out / "fixed_points.json", _jsonable(payload))
    return payload


def _solve_front(cfg: RunConfig):
    k = cfg.kernel()
    if cfg.seed_policy == "heaviside" and cfg.tau > 0.0:
        from .front_solver import initial_guess_from_heaviside, solve_front
        disc = discretize(cfg.rate(), cfg.N)
        return solve_front(k, disc, cfg.theta,
                           initial_guess_from_heaviside(k, disc, cfg.theta))
    return front_at_tau(k, cfg.theta, cfg.tau, cfg.N, step=cfg.step, r=cfg.r)


def _cmd_front(cfg: RunConfig, out: Path) -> dict:
    k = cfg.kernel()
    sol = _solve_front(cfg)
    sig = kmod.compute_sigmas(k, cfg.theta, min(cfg.theta + cfg.tau, 1.0))
    rep = check_H1(sol, sig)
    zmax = max(30.0, 5.0 * sig.M)
    zs = np.linspace(-zmax, zmax, 2001)
    write_csv(out / "front_profile.csv", ["z", "U", "dU"],
              [zs, eval_front(sol, zs), eval_front_deriv(sol, zs)])
    payload = {
        "mu": sol.mu, "crossings": list(sol.crossings),
        "residual_norm": sol.residual_norm, "tau": cfg.tau,
        "h1": {"holds": rep.holds, "z_span": rep.z_span,
               "sigma_min": rep.sigma_min, "monotone_ok": rep.monotone_ok,
               "single_crossing_ok": rep.single_crossing_ok},
    }
    write_json(out / "front.json", _jsonable(payload))
    return payload


def _cmd_continue(cfg: RunConfig, out: Path) -> dict:
    k = cfg.kernel()
    trace = continue_in_tau(k, cfg.theta, cfg.N, tau_max=cfg.tau_max,
                            step=cfg.step, r=cfg.r)
    taus = np.array(trace.taus)
    mus = np.array([s.mu for s in trace.solutions])
    zn = np.array([s.crossings[-1] for s in trace.solutions])
    smin = np.array([r.sigma_min for r in trace.reports])
    holds = np.array([1.0 if r.holds else 0.0 for r in trace.reports])
    write_csv(out / "continuation.csv", ["tau", "mu", "z_N", "sigma_min",
                                         "holds"], [taus, mus, zn, smin, holds])
    payload = {"tau_star": trace.tau_star,
               "tau_star_bracket": list(trace.tau_star_bracket)
               if trace.tau_star_bracket else None,
               "cells": len(trace.taus)}
    write_json(out / "continuation.json", _jsonable(payload))
    return payload


def _cmd_pulse(cfg: RunConfig, out: Path) -> dict:
    k = cfg.kernel()
    front = front_at_tau(k, cfg.theta, cfg.tau, cfg.N, step=cfg.step, r=cfg.r)
    orbit = build_singular_orbit(front, cfg.theta, cfg.tau, rate=cfg.rate())
    params = PulseParams(epsilon=cfg.epsilon, gamma=cfg.gamma)
    sol = solve_pulse(k, front.disc, cfg.theta, params, orbit)
    from .pulse_solver import omega
    zmax = float(sol.kappas[-1]) + 6.0 * sol.mu / omega(params)[1]
    zs = np.concatenate([
        np.linspace(-30.0, float(sol.kappas[-1]) + 10.0, 2000),
        np.linspace(float(sol.kappas[-1]) + 10.0, zmax, 1000)[1:],
    ])
    u, q = eval_pulse(sol, zs)
    write_csv(out / "pulse_profile.csv", ["z", "U", "Q"], [zs, u, q])
    write_csv(out / "pulse_phase.csv", ["U", "Q"], [u, q])
    curve = orbit.curve()
    write_csv(out / "singular_orbit.csv", ["U", "Q"],
              [curve[:, 0], curve[:, 1]])
    payload = {"mu": sol.mu, "mu_front": front.mu,
               "residual_norm": sol.residual_norm,
               "etas": list(sol.etas), "kappas": list(sol.kappas),
               "epsilon": cfg.epsilon, "gamma": cfg.gamma,
               "Q_takeoff": orbit.Q_takeoff,
               "back_residual": orbit.back_residual}
    write_json(out / "pulse.json", _jsonable(payload))
    return payload


def _cmd_evans(cfg: RunConfig, out: Path) -> dict:
    k = cfg.kernel()
    sol = _solve_front(cfg)
    ctx = EvansContext(front=sol)
    sc = scan(ctx, re_max=cfg.re_max, im_max=cfg.im_max,
              resolution=cfg.resolution, re_min=cfg.re_min)
    re_flat = np.repeat(sc.re_grid[None, :], len(sc.im_grid), axis=0).ravel()
    im_flat = np.repeat(sc.im_grid[:, None], len(sc.re_grid), axis=1).ravel()
    vals = sc.values.ravel()
    write_csv(out / "evans_grid.csv", ["re", "im", "abs_E", "re_E", "im_E"],
              [re_flat, im_flat, np.abs(vals), vals.real, vals.imag])
    payload = {
        "zeros": [{"re": z.real, "im": z.imag} for z in sc.zeros],
        "origin_simple": sc.origin_simple,
        "origin_abs": abs(sc.origin_value),
        "essential_re": sc.essential_line,
        "verdict": sc.verdict,
    }
    write_json(out / "evans_report.json", _jsonable(payload))
    return payload


def _sim_config(cfg: RunConfig, front_disc) -> SimConfig:
    rate = cfg.rate() if cfg.smooth_rate else front_disc
    return SimConfig(kernel=cfg.kernel(), rate=rate, theta=cfg.theta,
                     L=cfg.L, n=cfg.n, dt=cfg.dt, T=cfg.T,
                     boundary=cfg.boundary, epsilon=0.0, gamma=0.0)


def _cmd_simulate(cfg: RunConfig, out: Path, ic: str = "solver-front") -> dict:
    k = cfg.kernel()
    payload: dict = {"initial_condition": ic}
    if ic == "solver-pulse":
        front = front_at_tau(k, cfg.theta, cfg.tau, cfg.N, step=cfg.step,
                             r=cfg.r)
        orbit = build_singular_orbit(front, cfg.theta, cfg.tau,
                                     rate=cfg.rate())
        params = PulseParams(epsilon=cfg.epsilon, gamma=cfg.gamma)
        base = solve_pulse(k, front.disc, cfg.theta, params, orbit)
        sim = dataclasses.replace(
            _sim_config(cfg, front.disc), epsilon=cfg.epsilon, gamma=cfg.gamma)
        solver_mu = base.mu
    elif ic in ("solver-front", "step-function"):
        base = front_at_tau(k, cfg.theta, cfg.tau, cfg.N, step=cfg.step,
                            r=cfg.r)
        sim = _sim_config(cfg, base.disc)
        solver_mu = base.mu
    else:
        raise NFWavesError(f"unknown initial condition {ic!r}")

    if ic == "step-function":
        u0 = np.where(sim.x > 0.0, 1.0, 0.0)
        q0 = np.zeros(sim.n)
    else:
        u0, q0 = profile_on_grid(sim, base)
    result = sim_run(sim, u0, q0, snapshot_every=max(1, int(round(
        sim.T / sim.dt)) // 10))
    for t, u, q in result.snapshots:
        write_csv(out / f"snapshot_t{t:08.2f}.csv", ["x", "u", "q"],
                  [sim.x, u, q])
    est = measure_speed(result.times, result.positions)
    stable = stability_probe(sim, base, cfg.amplitude) \
        if ic != "step-function" else None
    payload.update({
        "speed": est.speed, "abs_speed": abs(est.speed),
        "r_squared": est.r_squared, "window": list(est.window),
        "solver_mu": solver_mu,
        "rel_error": abs(abs(est.speed) - solver_mu) / solver_mu,
        "stable": stable,
    })
    write_json(out / "sim_report.json", _jsonable(payload))
    return payload


def _cmd_reproduce(cfg: RunConfig, out: Path) -> dict:
    k = cfg.kernel()
    sig = kmod.compute_sigmas(k, 0.0, 1.0)
    t0 = tau_zero(RateSpec(theta=cfg.theta, tau=0.0, r=cfg.r))
    trace = continue_in_tau(k, cfg.theta, cfg.N, tau_max=cfg.tau_max,
                            step=cfg.step, r=cfg.r)
    front = trace.last_holding()
    ctx = EvansContext(front=front)
    sc = scan(ctx, re_max=cfg.re_max, im_max=cfg.im_max,
              resolution=cfg.resolution)
    pfront = front_at_tau(k, cfg.theta, cfg.tau, cfg.N, step=cfg.step, r=cfg.r)
    orbit = build_singular_orbit(pfront, cfg.theta, cfg.tau, rate=cfg.rate())
    pulse = solve_pulse(k, pfront.disc, cfg.theta,
                        PulseParams(epsilon=cfg.epsilon, gamma=cfg.gamma),
                        orbit)
    payload = {
        "sigma1": {"computed": sig.sigma1, "published": PUBLISHED["sigma1"],
                   "abs_err": abs(sig.sigma1 - PUBLISHED["sigma1"])},
        "sigma2_at_0": {"computed": sig.sigma2,
                        "published": PUBLISHED["sigma2_at_0"],
                        "abs_err": abs(sig.sigma2 - PUBLISHED["sigma2_at_0"])},
        "sigma3_at_1": {"computed": sig.sigma3,
                        "published": PUBLISHED["sigma3_at_1"],
                        "abs_err": abs(sig.sigma3 - PUBLISHED["sigma3_at_1"])},
        "tau0": {"computed": t0, "published": PUBLISHED["tau0"],
                 "abs_err": abs(t0 - PUBLISHED["tau0"])},
        "tau_star": {"computed": trace.tau_star,
                     "published": PUBLISHED["tau_star"],
                     "abs_err": abs(trace.tau_star - PUBLISHED["tau_star"])},
        "evans_verdict": sc.verdict,
        "evans_zero_count_off_origin": len(sc.instability_zeros),
        "mu_front_at_tau_star": front.mu,
        "mu_pulse": pulse.mu,
        "pulse_residual": pulse.residual_norm,
        "back_residual": orbit.back_residual,
    }
    write_json(out / "reproduce_summary.json", _jsonable(payload))
    return payload


_COMMANDS = {
    "kernel": _cmd_kernel,
    "fixed-points": _cmd_fixed_points,
    "front": _cmd_front,
    "continue": _cmd_continue,
    "pulse": _cmd_pulse,
    "evans": _cmd_evans,
    "simulate": _cmd_simulate,
    "reproduce-paper": _cmd_reproduce,
}


def run(subcommand: str, cfg: RunConfig, **kwargs) -> int:
    """Dispatch a subcommand; returns the process exit code."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        payload = _COMMANDS[subcommand](cfg, out, **kwargs)
    except NFWavesError as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__,
                          "subcommand": subcommand}, sort_keys=True))
        return 1
    print(json.dumps(_jsonable(payload), sort_keys=True))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfwaves",
        description="Traveling fronts/pulses of lateral-inhibition neural "
                    "field equations")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="sectioned key-value config file")
    common.add_argument("--output-dir", type=str, default=None,
                        dest="output_dir")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    overrides = {
        "theta": float, "tau": float, "r": float, "N": int,
        "epsilon": float, "gamma": float, "A": float, "a": float,
        "B": float, "b": float, "re-min": float, "re-max": float,
        "im-max": float, "resolution": int, "L": float, "n": int,
        "dt": float, "T": float, "tau-max": float, "step": float,
        "amplitude": float,
    }
    for name in _COMMANDS:
        p = sub.add_parser(name, parents=[common])
        for flag, typ in overrides.items():
            p.add_argument(f"--{flag}", type=typ, default=None,
                           dest=flag.replace("-", "_"))
        p.add_argument("--boundary", type=str, default=None)
        p.add_argument("--seed-policy", type=str, default=None,
                       dest="seed_policy")
        p.add_argument("--no-normalize", action="store_true")
        if name == "simulate":
            p.add_argument("--initial-condition", type=str,
                           default="solver-front",
                           choices=["solver-front", "solver-pulse",
                                    "step-function"])
            p.add_argument("--discrete-rate", action="store_true",
                           help="integrate the threshold-sum rate instead "
                                "of the smooth one")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            cfg = parse_config(Path(args.config).read_text())
        else:
            cfg = RunConfig()
    except (ConfigError, OSError) as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__},
                         sort_keys=True))
        return 2
    for fname in ("theta", "tau", "r", "N", "epsilon", "gamma", "A", "a",
                  "B", "b", "re_min", "re_max", "im_max", "resolution", "L",
                  "n", "dt", "T", "tau_max", "step", "amplitude", "boundary",
                  "seed_policy"):
        value = getattr(args, fname, None)
        if value is not None:
            setattr(cfg, fname, value)
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if getattr(args, "no_normalize", False):
        cfg.normalize = False
    if getattr(args, "discrete_rate", False):
        cfg.smooth_rate = False
    kwargs = {}
    if args.subcommand == "simulate":
        kwargs["ic"] = args.initial_condition
    for key, check, message in _VALIDATORS:
        if not check(cfg):
            print(json.dumps({"error": f"{key}: {message}",
                              "type": "ConfigError"}, sort_keys=True))
            return 2
    return run(args.subcommand, cfg, **kwargs)


if __name__ == "__main__":
    sys.exit(main())
