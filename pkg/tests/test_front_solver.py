"""Front closed forms, the threshold solve, shape checks, continuation."""

import numpy as np
import pytest

import nfwaves as nf
from nfwaves._newton import damped_newton
from nfwaves.errors import BadGuessError, MaxIterationsError, NFWavesError
from nfwaves.firing_rate import RateSpec, discretize, heaviside_discretization
from nfwaves.front_solver import (FrontSolution, check_H1,
                                  initial_guess_from_heaviside,
                                  reseed_crossings)

from conftest import N_BAND, R_SHARP, THETA, quad_rate_convolution


# ---------------------------------------------------------------------------
# sharp-threshold closed form
# ---------------------------------------------------------------------------

def test_heaviside_front_threshold_and_limits(k5):
    assert nf.heaviside_front(k5, THETA, 0.0) == pytest.approx(THETA,
                                                               abs=1e-13)
    assert abs(nf.heaviside_front(k5, THETA, -40.0)) < 1e-6
    assert nf.heaviside_front(k5, THETA, 40.0) == pytest.approx(1.0, abs=1e-6)


def test_heaviside_front_satisfies_reduced_equation(k5):
    """mu0 U0' + U0 = Psi(z) once the profile crosses theta only at 0."""
    mu0 = nf.solve_heaviside_speed(k5, THETA)
    sol = nf.heaviside_front_solution(k5, THETA)
    zs = np.linspace(-30.0, 30.0, 100)
    lhs = mu0 * nf.eval_front_deriv(sol, zs) + nf.eval_front(sol, zs)
    assert np.max(np.abs(lhs - nf.antiderivative(k5, zs))) < 1e-10


def test_single_step_band_collapses_to_heaviside(k5, rate30):
    disc = discretize(rate30, 1)
    sol = nf.solve_front(k5, disc, THETA,
                         initial_guess_from_heaviside(k5, disc, THETA))
    zs = np.linspace(-30.0, 30.0, 501)
    assert np.max(np.abs(nf.eval_front(sol, zs)
                         - nf.heaviside_front(k5, THETA, zs))) < 1e-12
    assert sol.mu == pytest.approx(nf.solve_heaviside_speed(k5, THETA),
                                   abs=1e-12)


def test_eval_front_tail_limits(front30):
    assert nf.eval_front(front30, 60.0) == pytest.approx(1.0, abs=1e-8)
    assert abs(nf.eval_front(front30, -60.0)) < 1e-8


def test_eval_front_deriv_matches_finite_difference(front30):
    zs = np.linspace(-10.0, 10.0, 101)
    h = 1e-6
    fd = (nf.eval_front(front30, zs + h)
          - nf.eval_front(front30, zs - h)) / (2 * h)
    assert np.max(np.abs(nf.eval_front_deriv(front30, zs) - fd)) < 1e-6


# ---------------------------------------------------------------------------
# the solve
# ---------------------------------------------------------------------------

def test_solver_degenerate_band_matches_speed_root(k5):
    seed = nf.heaviside_front_solution(k5, THETA)
    sol = nf.solve_front(k5, heaviside_discretization(), THETA, seed)
    assert sol.mu == pytest.approx(nf.solve_heaviside_speed(k5, THETA),
                                   abs=1e-10)


def test_solver_reference_band(front30, k5):
    assert front30.residual_norm < 1e-10
    rep = check_H1(front30, nf.compute_sigmas(k5, THETA, THETA + 0.3))
    assert rep.holds
    # threshold conditions hold pointwise
    u = nf.eval_front(front30, front30.crossings)
    assert np.max(np.abs(u - (THETA + front30.disc.deltas))) < 1e-10


def test_solver_near_breakdown_hits_sigma1(front52, k5):
    sig = nf.compute_sigmas(k5, THETA, THETA + 0.52)
    assert front52.crossings[-1] == pytest.approx(sig.sigma1, abs=0.02)


def test_crossing_positions_strictly_increasing(front52):
    assert np.all(np.diff(front52.crossings) > 0.0)


def test_wavesimp_residual_identity(front52):
    """mu U' + U - sum_k alpha_k Psi(z - z_k) vanishes identically."""
    zs = np.linspace(-20.0, 20.0, 200)
    forcing = (front52.disc.alphas[None, :] * nf.antiderivative(
        front52.kernel, zs[:, None] - front52.crossings[None, :])).sum(axis=1)
    lhs = (front52.mu * nf.eval_front_deriv(front52, zs)
           + nf.eval_front(front52, zs))
    assert np.max(np.abs(lhs - forcing)) < 1e-9


def test_full_equation_residual_by_quadrature(front30):
    """The closed form satisfies the nonlocal equation with the step rate."""
    sol = front30
    disc = sol.disc

    def rate_of_profile(y):
        return float(disc.eval_step(float(nf.eval_front(sol, y)) - THETA))

    zs = np.linspace(-8.0, 8.0, 9)
    for z in zs:
        rhs = quad_rate_convolution(sol.kernel, rate_of_profile,
                                    list(sol.crossings), float(z))
        lhs = (sol.mu * float(nf.eval_front_deriv(sol, z))
               + float(nf.eval_front(sol, z)))
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_bad_guess_raises(k5, rate30):
    disc = discretize(rate30, 5)
    guess = FrontSolution(mu=np.nan, crossings=np.linspace(0, 0.4, 6),
                          kernel=k5, disc=disc, theta=THETA,
                          residual_norm=np.inf)
    with pytest.raises(BadGuessError):
        nf.solve_front(k5, disc, THETA, guess)


def test_newton_budget_exhaustion():
    def fn(x):
        return np.array([1.0 + x[0] ** 2]), np.array([[2.0 * x[0]]])
    with pytest.raises(MaxIterationsError):
        damped_newton(fn, np.array([1.0]), tol=1e-12, max_iter=8)


# ---------------------------------------------------------------------------
# shape hypothesis
# ---------------------------------------------------------------------------

def test_h1_degenerate_band(k5):
    sol = nf.heaviside_front_solution(k5, THETA)
    rep = check_H1(sol, nf.compute_sigmas(k5, THETA, THETA))
    assert rep.holds and rep.z_span == 0.0


def test_h1_fails_past_breakdown(k5):
    sol = nf.front_at_tau(k5, THETA, 0.53, N_BAND)
    sig = nf.compute_sigmas(k5, THETA, THETA + 0.53)
    rep = check_H1(sol, sig)
    assert not rep.holds
    assert rep.z_span > sig.sigma1
    assert rep.monotone_ok  # breakdown is via the span bound, not the slope


# ---------------------------------------------------------------------------
# continuation
# ---------------------------------------------------------------------------

def test_continuation_trace_invariants(trace):
    taus = np.array(trace.taus)
    assert np.all(np.diff(taus) > 0.0)
    for rep in trace.reports[:-1]:
        assert rep.holds
    assert trace.tau_star is not None
    lo, hi = trace.tau_star_bracket
    assert hi - lo <= 0.01 / 16.0 + 1e-12
    assert lo <= trace.tau_star <= hi


def test_continuation_reference_breakdown(trace, k5):
    assert 0.50 <= trace.tau_star <= 0.54
    sig1 = nf.compute_sigmas(k5, 0.0, 1.0).sigma1
    good = trace.last_holding()
    bad = trace.solutions[-1]
    assert good.crossings[-1] <= sig1 <= bad.crossings[-1]


def test_continuation_speeds_positive_below_zero_width(trace):
    assert all(sol.mu > 0.0 for sol in trace.solutions)


def test_continuation_speed_decreases_with_band_width(trace):
    mus = [sol.mu for sol in trace.solutions]
    assert np.all(np.diff(mus) < 0.0)


def test_continuation_empty_below_first_step(k5):
    tr = nf.continue_in_tau(k5, THETA, N_BAND, tau_max=0.004, step=0.01)
    assert len(tr.taus) == 1 and tr.taus[0] == 0.0
    assert tr.tau_star is None


def test_continuation_rejects_tau_max_beyond_zero_speed(k5):
    with pytest.raises(NFWavesError):
        nf.continue_in_tau(k5, THETA, N_BAND, tau_max=0.85, step=0.01)


def test_speed_continuity_under_step_refinement(k5):
    jumps = []
    for step in (0.02, 0.01, 0.005):
        tr = nf.continue_in_tau(k5, THETA, N_BAND, tau_max=0.2, step=step)
        mus = np.array([s.mu for s in tr.solutions])
        jumps.append(np.max(np.abs(np.diff(mus))))
    assert jumps[0] > jumps[1] > jumps[2]


def test_band_refinement_speed_converges(k5):
    mus = {n: nf.front_at_tau(k5, THETA, 0.3, n).mu for n in (5, 10, 20, 40)}
    gaps = [abs(mus[10] - mus[5]), abs(mus[20] - mus[10]),
            abs(mus[40] - mus[20])]
    assert gaps[0] > gaps[1] > gaps[2]


def test_reseed_extrapolates_new_thresholds(front30, rate52):
    disc = discretize(rate52, N_BAND)
    guess = reseed_crossings(front30, disc)
    assert guess.crossings[0] == 0.0
    assert np.all(np.diff(guess.crossings) > 0.0)
    assert guess.crossings[-1] > front30.crossings[-1]
