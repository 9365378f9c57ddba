"""Traveling fronts of the scalar field equation with threshold-sum rates.

With the rate replaced by sum_k alpha_k H(u - theta - delta_k) and a profile
that rises through each threshold once (at z_k, z_0 = 0), the traveling
equation mu U' + U = sum_k alpha_k Psi(z - z_k) is linear and solved exactly:

    U(z)  = sum_k alpha_k [ Psi(z - z_k) - Js(z - z_k, 1/mu) ],
    U'(z) = (1/mu) sum_k alpha_k Js(z - z_k, 1/mu).

The N + 1 threshold conditions U(z_k) = theta + delta_k determine the N + 1
unknowns (mu, z_1..z_N); a damped Newton on log-gap variables with the
analytic Jacobian does the solve.  Continuation in the smoothing width tau
monitors the band-shape hypothesis (monotone rise, single crossings, span
bounded by the kernel sigma constants) and brackets the width tau* where it
first fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import kernel as kmod
from ._newton import damped_newton, gap_chain_matrix, pack, unpack
from .errors import LostMonotonicityError, NFWavesError
from .firing_rate import (Discretization, RateSpec, discretize,
                          heaviside_discretization)
from .kernel import KernelParams, SigmaConstants

SOLVER_TOL = 1e-12


@dataclass(frozen=True)
class FrontSolution:
    """Converged front: wave speed plus ordered threshold crossings."""

    mu: float
    crossings: np.ndarray
    kernel: KernelParams
    disc: Discretization
    theta: float
    residual_norm: float

    def __post_init__(self):
        object.__setattr__(self, "crossings",
                           np.asarray(self.crossings, dtype=float))

    @property
    def z_span(self) -> float:
        return float(self.crossings[-1] - self.crossings[0])


def heaviside_front(k: KernelParams, theta: float, z, mu0: float | None = None):
    """Closed-form sharp-threshold front U0(z) = Psi(z) - Js(z, 1/mu0)."""
    if mu0 is None:
        mu0 = kmod.solve_heaviside_speed(k, theta)
    z = np.asarray(z, dtype=float)
    out = kmod.antiderivative(k, z) - kmod.exp_weighted(k, z, 1.0 / mu0)
    return out if out.ndim else float(out)


def heaviside_front_solution(k: KernelParams, theta: float) -> FrontSolution:
    """The sharp-threshold front packaged as the degenerate band solution."""
    mu0 = kmod.solve_heaviside_speed(k, theta)
    residual = abs(float(heaviside_front(k, theta, 0.0, mu0)) - theta)
    return FrontSolution(mu=mu0, crossings=np.array([0.0]), kernel=k,
                         disc=heaviside_discretization(), theta=theta,
                         residual_norm=residual)


def eval_front(sol: FrontSolution, z):
    """U(z) from the closed form, vectorized."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    v = z[:, None] - sol.crossings[None, :]
    s = 1.0 / sol.mu
    vals = sol.disc.alphas[None, :] * (kmod.antiderivative(sol.kernel, v)
                                       - kmod.exp_weighted(sol.kernel, v, s))
    out = vals.sum(axis=1)
    return float(out[0]) if scalar else out


def eval_front_deriv(sol: FrontSolution, z):
    """U'(z) from the closed form, vectorized."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    v = z[:, None] - sol.crossings[None, :]
    s = 1.0 / sol.mu
    out = s * (sol.disc.alphas[None, :]
               * kmod.exp_weighted(sol.kernel, v, s)).sum(axis=1)
    return float(out[0]) if scalar else out


def _front_system(k: KernelParams, disc: Discretization, theta: float):
    """Residual/Jacobian closure over (mu, log-gap) unknowns."""
    alphas = disc.alphas
    target = theta + disc.deltas
    n = disc.N + 1

    def fn(x):
        mu = x[0]
        if mu <= 0.0 or not np.all(np.isfinite(x)):
            return np.full(n, np.inf), np.eye(n)
        zk = np.concatenate([[0.0], unpack(x)[1]])
        s = 1.0 / mu
        v = zk[:, None] - zk[None, :]
        js = kmod.exp_weighted(k, v, s)
        u = (alphas[None, :] * (kmod.antiderivative(k, v) - js)).sum(axis=1)
        res = u - target
        uprime = s * (alphas[None, :] * js).sum(axis=1)
        # dR_j/d mu = s^2 sum_k alpha_k dJs/ds(z_j - z_k)
        dmu = (s * s) * (alphas[None, :]
                         * kmod.exp_weighted_ds(k, v, s)).sum(axis=1)
        # dR_j/d z_m = delta_{jm} U'(z_j) - alpha_m s Js(z_j - z_m)
        dz = -alphas[None, :] * s * js
        dz[np.diag_indices(n)] += uprime
        jac = np.empty((n, n))
        jac[:, 0] = dmu
        jac[:, 1:] = dz[:, 1:] @ gap_chain_matrix(x)
        return res, jac

    return fn


def solve_front(k: KernelParams, disc: Discretization, theta: float,
                guess: FrontSolution) -> FrontSolution:
    """Damped Newton on the threshold conditions from a seed solution.

    Raises BadGuessError / MaxIterationsError from the iteration and
    LostMonotonicityError when the converged profile has U'(z_k) <= 0 at a
    crossing (the continuation breakdown signal).
    """
    if disc.N == 0:
        sol = heaviside_front_solution(k, theta)
        if abs(guess.mu - sol.mu) > 0.5 * sol.mu:
            raise NFWavesError("degenerate band guess far from the unique speed")
        return sol
    fn = _front_system(k, disc, theta)
    x0 = pack(guess.mu, np.asarray(guess.crossings, dtype=float)[1:])
    x, norm, _ = damped_newton(fn, x0, tol=SOLVER_TOL)
    mu, rest = unpack(x)
    crossings = np.concatenate([[0.0], rest])
    sol = FrontSolution(mu=mu, crossings=crossings, kernel=k, disc=disc,
                        theta=theta, residual_norm=norm)
    derivs = eval_front_deriv(sol, crossings)
    if np.any(derivs <= 0.0):
        raise LostMonotonicityError(
            f"U'(z_k) <= 0 at a crossing (min {derivs.min():.3e})")
    return sol


def initial_guess_from_heaviside(k: KernelParams, disc: Discretization,
                                 theta: float) -> FrontSolution:
    """Seed crossings by inverting the sharp-threshold front profile."""
    mu0 = kmod.solve_heaviside_speed(k, theta)
    zmax = 1.0
    while float(heaviside_front(k, theta, zmax, mu0)) < theta + disc.tau:
        zmax *= 2.0
        if zmax > 1e6:
            raise NFWavesError("cannot bracket seed crossings")
    crossings = np.empty(disc.N + 1)
    crossings[0] = 0.0
    for i, d in enumerate(disc.deltas[1:], start=1):
        crossings[i] = brentq(
            lambda z: float(heaviside_front(k, theta, z, mu0)) - (theta + d),
            crossings[i - 1], zmax, xtol=1e-14)
    return FrontSolution(mu=mu0, crossings=crossings, kernel=k, disc=disc,
                         theta=theta, residual_norm=math.inf)


def reseed_crossings(old: FrontSolution, disc: Discretization) -> FrontSolution:
    """Map crossings to a new band grid by piecewise-linear threshold rescale.

    Thresholds above the old band extrapolate the last segment linearly.
    """
    do, zo = old.disc.deltas, old.crossings
    if old.disc.N == 0:
        raise NFWavesError("cannot rescale from the degenerate band")
    z = np.interp(disc.deltas, do, zo)
    slope = (zo[-1] - zo[-2]) / (do[-1] - do[-2])
    above = disc.deltas > do[-1]
    z[above] = zo[-1] + slope * (disc.deltas[above] - do[-1])
    z[0] = 0.0
    return FrontSolution(mu=old.mu, crossings=z, kernel=old.kernel, disc=disc,
                         theta=old.theta, residual_norm=math.inf)


# ---------------------------------------------------------------------------
# band-shape hypothesis monitor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class H1Report:
    """Shape checks for a converged front.

    holds = monotone rise between the outer crossings, single crossing of
    every threshold on the sampled line, and band span z_N - z_0 within the
    kernel's sigma_min bound.
    """

    z_span: float
    sigma_min: float
    monotone_ok: bool
    single_crossing_ok: bool
    holds: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "holds",
            bool(self.monotone_ok and self.single_crossing_ok
                 and self.z_span <= self.sigma_min))


def check_H1(sol: FrontSolution, sig: SigmaConstants,
             samples: int = 10_000) -> H1Report:
    """Evaluate the band-shape hypothesis on a converged front."""
    span = sol.z_span
    if sol.disc.N == 0:
        monotone = bool(float(eval_front_deriv(sol, 0.0)) > 0.0)
    else:
        zb = np.linspace(sol.crossings[0], sol.crossings[-1], samples)
        monotone = bool(np.all(eval_front_deriv(sol, zb) > 0.0))
    big_l = max(float(sol.crossings[-1]), 4.0 * sig.M)
    zs = np.linspace(-5.0 * big_l, 5.0 * big_l, samples)
    u = eval_front(sol, zs)
    single = True
    for d in np.atleast_1d(sol.disc.deltas):
        signs = np.sign(u - (sol.theta + d))
        signs = signs[signs != 0.0]
        if int(np.sum(np.abs(np.diff(signs)) > 0)) != 1:
            single = False
            break
    return H1Report(z_span=span, sigma_min=sig.sigma_min,
                    monotone_ok=monotone, single_crossing_ok=single)


# ---------------------------------------------------------------------------
# continuation in the smoothing width
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContinuationTrace:
    """Accepted (tau, solution, report) cells plus the breakdown bracket."""

    taus: list
    solutions: list
    reports: list
    tau_star: Optional[float]
    tau_star_bracket: Optional[tuple]

    def last_holding(self) -> FrontSolution:
        for sol, rep in zip(reversed(self.solutions), reversed(self.reports)):
            if rep.holds:
                return sol
        raise NFWavesError("no recorded solution satisfies the shape hypothesis")


def _sigmas_at(k: KernelParams, theta: float, tau: float) -> SigmaConstants:
    return kmod.compute_sigmas(k, theta, theta_plus_tau=min(theta + tau, 1.0))


def continue_in_tau(k: KernelParams, theta: float, N: int, tau_max: float,
                    step: float = 0.01, r: float = 0.01) -> ContinuationTrace:
    """March the front from the sharp-threshold seed up in tau.

    Each cell re-discretizes the rate, reseeds from the previous crossings,
    solves, and records the shape report.  On the first failure the last
    interval is bisected until its width is below step/16; tau_star is the
    midpoint of the final bracket.
    """
    if step <= 0.0:
        raise NFWavesError("step must be positive")
    from .firing_rate import tau_zero as _tau_zero
    t0 = _tau_zero(RateSpec(theta=theta, tau=0.0, r=r))
    if tau_max > t0 + 1e-12:
        raise NFWavesError(
            f"tau_max={tau_max} exceeds the zero-speed width {t0:.6f}")

    seed = heaviside_front_solution(k, theta)
    taus = [0.0]
    sols = [seed]
    reports = [check_H1(seed, _sigmas_at(k, theta, 0.0))]

    def solve_at(tau, prev):
        disc = discretize(RateSpec(theta=theta, tau=tau, r=r), N)
        if prev.disc.N == 0:
            guess = initial_guess_from_heaviside(k, disc, theta)
            guess = FrontSolution(mu=prev.mu, crossings=guess.crossings,
                                  kernel=k, disc=disc, theta=theta,
                                  residual_norm=math.inf)
        else:
            guess = reseed_crossings(prev, disc)
        sol = solve_front(k, disc, theta, guess)
        return sol, check_H1(sol, _sigmas_at(k, theta, tau))

    grid = np.arange(step, tau_max + 0.5 * step, step)
    grid = grid[grid <= tau_max + 1e-12]
    failing = None
    for tau in grid:
        try:
            sol, rep = solve_at(float(tau), sols[-1])
        except LostMonotonicityError:
            failing = (float(tau), None, None)
            break
        if not rep.holds:
            failing = (float(tau), sol, rep)
            break
        taus.append(float(tau))
        sols.append(sol)
        reports.append(rep)

    if failing is None:
        return ContinuationTrace(taus, sols, reports, None, None)

    # bisect [last good, first bad] down to step / 16, recording good cells
    lo, hi = taus[-1], failing[0]
    while hi - lo > step / 16.0:
        mid = 0.5 * (lo + hi)
        try:
            sol_m, rep_m = solve_at(mid, sols[-1])
        except LostMonotonicityError:
            hi = mid
            continue
        if rep_m.holds:
            lo = mid
            taus.append(mid)
            sols.append(sol_m)
            reports.append(rep_m)
        else:
            hi = mid
            failing = (mid, sol_m, rep_m)
    if failing[1] is not None:
        taus.append(failing[0])
        sols.append(failing[1])
        reports.append(failing[2])
    return ContinuationTrace(taus, sols, reports,
                             tau_star=0.5 * (lo + hi),
                             tau_star_bracket=(lo, hi))


def front_at_tau(k: KernelParams, theta: float, tau: float, N: int,
                 step: float = 0.01, r: float = 0.01) -> FrontSolution:
    """Convenience: continue from the sharp-threshold seed up to a target tau."""
    if tau <= 0.0:
        return heaviside_front_solution(k, theta)
    sol = heaviside_front_solution(k, theta)
    n_steps = max(1, int(math.ceil(tau / step)))
    for t in np.linspace(tau / n_steps, tau, n_steps):
        disc = discretize(RateSpec(theta=theta, tau=float(t), r=r), N)
        if sol.disc.N == 0:
            guess = initial_guess_from_heaviside(k, disc, theta)
        else:
            guess = reseed_crossings(sol, disc)
        sol = solve_front(k, disc, theta, guess)
    return sol
