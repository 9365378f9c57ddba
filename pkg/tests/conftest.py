"""Shared fixtures and independent quadrature oracles.

Everything the closed forms claim is re-derivable by adaptive quadrature of
the raw integrands; the helpers here are the reference implementations the
solver modules are checked against.  Expensive solver artifacts (reference
continuation, Evans scan, pulse sweep) are session-scoped so the unit tests
and the acceptance suite share one computation.
"""

import numpy as np
import pytest
from scipy.integrate import quad

import nfwaves as nf
from nfwaves.firing_rate import RateSpec, discretize
from nfwaves.pulse_solver import PulseParams, build_singular_orbit, solve_pulse

THETA = 0.1
R_SHARP = 0.01
N_BAND = 20
TAU_PULSE = 0.52


# ---------------------------------------------------------------------------
# quadrature oracles
# ---------------------------------------------------------------------------

def quad_antiderivative(p, z, tol=1e-13):
    """int_{-inf}^z K by adaptive quadrature, split at the kink."""
    f = lambda x: float(nf.eval_kernel(p, x))
    if z <= 0.0:
        val, _ = quad(f, -np.inf, z, epsabs=tol, limit=300)
        return val
    lo, _ = quad(f, -np.inf, 0.0, epsabs=tol, limit=300)
    hi, _ = quad(f, 0.0, z, epsabs=tol, limit=300)
    return lo + hi


def quad_exp_weighted(p, v, s, tol=1e-12):
    """int_{-inf}^v e^{s(w-v)} K(w) dw for real or complex s."""

    def piece(lo, hi, part):
        g = lambda w: part(np.exp(s * (w - v)) * float(nf.eval_kernel(p, w)))
        val, _ = quad(g, lo, hi, epsabs=tol, limit=500)
        return val

    def integrate(part):
        if v <= 0.0:
            return piece(-np.inf, v, part)
        return piece(-np.inf, 0.0, part) + piece(0.0, v, part)

    if isinstance(s, complex):
        return integrate(np.real) + 1j * integrate(np.imag)
    return integrate(float)


def quad_rate_convolution(p, rate_fn, breakpoints, z, tol=1e-12):
    """int K(z - y) rate_fn(y) dy with discontinuities at the breakpoints."""
    pts = sorted(set(list(breakpoints) + [z]))
    lo = pts[0] - 200.0
    hi = pts[-1] + 200.0
    f = lambda y: float(nf.eval_kernel(p, z - y)) * rate_fn(y)
    total = 0.0
    edges = [lo] + pts + [hi]
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(f, a, b, epsabs=tol, limit=300)
        total += val
    # exponential tails beyond the window
    tail_lo, _ = quad(f, -np.inf, lo, epsabs=tol, limit=300)
    tail_hi, _ = quad(f, hi, np.inf, epsabs=tol, limit=300)
    return total + tail_lo + tail_hi


# ---------------------------------------------------------------------------
# session fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def k5():
    """Reference kernel, rescaled to unit mass."""
    return nf.section5_kernel()


@pytest.fixture(scope="session")
def k5_raw():
    """Reference kernel with the printed (rounded) parameters."""
    return nf.section5_kernel(normalize=False)


@pytest.fixture(scope="session")
def rate52():
    return RateSpec(theta=THETA, tau=TAU_PULSE, r=R_SHARP)


@pytest.fixture(scope="session")
def rate30():
    return RateSpec(theta=THETA, tau=0.3, r=R_SHARP)


@pytest.fixture(scope="session")
def front30(k5):
    return nf.front_at_tau(k5, THETA, 0.3, N_BAND)


@pytest.fixture(scope="session")
def front52(k5):
    return nf.front_at_tau(k5, THETA, TAU_PULSE, N_BAND)


@pytest.fixture(scope="session")
def trace(k5):
    """Full reference continuation: N=20, step 0.01, up to the zero-speed width."""
    return nf.continue_in_tau(k5, THETA, N_BAND, tau_max=0.79, step=0.01)


@pytest.fixture(scope="session")
def front_star(trace):
    return trace.last_holding()


@pytest.fixture(scope="session")
def orbit52(front52, rate52):
    return build_singular_orbit(front52, THETA, TAU_PULSE, rate=rate52)


@pytest.fixture(scope="session")
def pulse_sweep(k5, front52, orbit52):
    """Pulses at the reference gamma across the epsilon sweep."""
    out = {}
    for eps in (0.02, 0.01, 0.005, 0.0025):
        params = PulseParams(epsilon=eps, gamma=0.001)
        out[eps] = solve_pulse(k5, front52.disc, THETA, params, orbit52)
    return out


@pytest.fixture(scope="session")
def evans_scan_star(front_star):
    from nfwaves.evans import EvansContext, scan
    return scan(EvansContext(front=front_star), re_max=5.0, im_max=20.0,
                resolution=256)
