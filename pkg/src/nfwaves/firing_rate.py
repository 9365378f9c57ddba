"""Smoothed-Heaviside firing rates, their threshold-sum approximation, and
the wave-speed sign functional.

The rate family is

    S_tau(u) = 0 for u <= 0,  1 for u >= tau,
    S_tau(u) = A(tau) * int_0^u exp(r / (x (x - tau))) dx   on (0, tau),

an exponential bump integral that vanishes to all orders at both endpoints
and is odd-symmetric about (tau/2, 1/2).  tau = 0 degenerates to the unit
step (0 at the origin, 1 above it).

Evaluation uses a high-resolution cumulative table (per-panel Gauss-Legendre
on a symmetric uniform grid) wrapped in a monotone PCHIP interpolant; the
symmetric construction preserves the odd symmetry to round-off.  The
normalizer itself is defined through adaptive quadrature so the defining
identity A(tau) * int bump = 1 can be checked against an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect

from .errors import NFWavesError

_TABLE_PANELS = 1 << 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _bump(x, tau: float, r: float, scaled: bool = False):
    """exp(r / (x (x - tau))) on (0, tau), extended by 0 outside.

    scaled=True divides by the peak value exp(-4r/tau^2): the scaled bump
    never underflows, and the scale cancels in normalized cumulatives and
    moment ratios.
    """
    x = np.asarray(x, dtype=float)
    prod = x * (x - tau)
    inside = (x > 0.0) & (x < tau)
    expo = np.where(inside, r / np.where(inside, prod, -1.0), -np.inf)
    if scaled:
        expo = expo + 4.0 * r / tau ** 2
    return np.exp(expo)


def _bump_quad(tau: float, r: float, weight=None,
               scaled: bool = False) -> tuple[float, float]:
    """Adaptive quadrature of the bump (optionally times a weight) on [0, tau].

    Breakpoints at the peak and its width flanks keep the adaptive rule from
    subdividing exactly on the maximum (where the open rule would sample the
    flat tails only).
    """
    if weight is None:
        f = lambda x: float(_bump(x, tau, r, scaled))
    else:
        f = lambda x: weight(x) * float(_bump(x, tau, r, scaled))
    kappa = max(4.0 * r / tau ** 2, 1.0)
    if kappa > 50.0:
        # narrow peak: pin its location so adaptive splitting cannot land
        # the subdivision point exactly on the maximum
        half = 0.5 * tau * min(0.99, 20.0 / math.sqrt(kappa))
        pts = [0.5 * tau - half, 0.5 * tau, 0.5 * tau + half]
    else:
        pts = None
    val, err = quad(f, 0.0, tau, epsabs=1e-15, epsrel=1e-13, limit=200,
                    points=pts)
    return val, err


@dataclass(frozen=True)
class RateSpec:
    """Firing-rate parameters: threshold, smoothing width, bump sharpness."""

    theta: float
    tau: float
    r: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.theta < 0.5:
            raise NFWavesError(f"theta must lie in (0, 1/2), got {self.theta}")
        if self.tau < 0.0:
            raise NFWavesError(f"tau must be nonnegative, got {self.tau}")
        if self.r <= 0.0:
            raise NFWavesError(f"r must be positive, got {self.r}")

    @cached_property
    def normalizer(self) -> float:
        return compute_normalizer(self)

    @cached_property
    def _cumulative(self) -> PchipInterpolator:
        # Symmetric uniform panels, 8-point Gauss-Legendre per panel.  The
        # mirror symmetry of nodes and weights makes the table satisfy
        # C(tau) - C(tau - x) = C(x) to round-off, which carries the odd
        # symmetry of the rate through interpolation.
        tau = self.tau
        edges = np.linspace(0.0, tau, _TABLE_PANELS + 1)
        h = tau / _TABLE_PANELS
        mid = 0.5 * (edges[:-1] + edges[1:])
        pts = mid[:, None] + (0.5 * h) * _GL_NODES[None, :]
        vals = _bump(pts, tau, self.r, scaled=True)
        inc = (0.5 * h) * vals @ _GL_WEIGHTS
        cum = np.concatenate([[0.0], np.cumsum(inc)])
        cum /= cum[-1]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            # flat stretches of the cumulative trip harmless inf/0 warnings
            # inside PCHIP's harmonic-mean slope formula
            return PchipInterpolator(edges, cum, extrapolate=False)


def compute_normalizer(s: RateSpec) -> float:
    """A(tau) with A(tau) * int_0^tau bump = 1, by adaptive quadrature.

    The quadrature runs on the peak-scaled bump (values O(1), so the 1e-12
    relative convergence requirement is meaningful) and the peak factor is
    restored analytically.
    """
    if s.tau <= 0.0:
        raise NFWavesError("normalizer undefined for tau = 0 (unit step)")
    kappa = 4.0 * s.r / s.tau ** 2
    if kappa > 690.0:
        raise NFWavesError(
            f"normalizer overflows double precision for tau={s.tau}, r={s.r}")
    total, err = _bump_quad(s.tau, s.r, scaled=True)
    if not (total > 0.0 and err <= 1e-12 * total):
        raise NFWavesError(
            f"bump quadrature did not converge: value={total:g}, err={err:g}")
    return math.exp(kappa) / total


def eval_rate(s: RateSpec, u):
    """S_tau(u): 0 below 0, 1 above tau, normalized bump integral between."""
    u = np.asarray(u, dtype=float)
    if s.tau == 0.0:
        out = np.where(u > 0.0, 1.0, 0.0)
        return out if out.ndim else float(out)
    out = np.empty(u.shape, dtype=float)
    lo = u <= 0.0
    hi = u >= s.tau
    midmask = ~(lo | hi)
    out[lo] = 0.0
    out[hi] = 1.0
    if np.any(midmask):
        out[midmask] = s._cumulative(u[midmask])
    return out if out.ndim else float(out)


def eval_rate_deriv(s: RateSpec, u):
    """S_tau'(u) = A(tau) * bump(u), the analytic density."""
    if s.tau == 0.0:
        raise NFWavesError("derivative of the unit step is not a function")
    return s.normalizer * _bump(u, s.tau, s.r)


def symmetry_defect(s: RateSpec, n: int = 2001) -> float:
    """max |S(tau/2 + v) + S(tau/2 - v) - 1| over a symmetric grid."""
    if s.tau == 0.0:
        return 0.0
    v = np.linspace(0.0, 0.5 * s.tau, n)
    return float(np.max(np.abs(eval_rate(s, 0.5 * s.tau + v)
                               + eval_rate(s, 0.5 * s.tau - v) - 1.0)))


# ---------------------------------------------------------------------------
# wave-speed sign functional
# ---------------------------------------------------------------------------

def _lambda_value(theta: float, tau: float, r: float) -> float:
    """Lambda(tau, theta) = 1/2 - (theta + tau) + int_0^tau S_tau.

    Integrating by parts, int_0^tau S = tau - int_0^tau u S'(u) du, so a
    single quadrature of the first bump moment suffices (no nested rate
    evaluations).
    """
    if tau <= 0.0:
        return 0.5 - theta
    total, _ = _bump_quad(tau, r, scaled=True)
    moment, _ = _bump_quad(tau, r, weight=lambda x: x, scaled=True)
    return 0.5 - theta - moment / total


def lambda_speed_sign(s: RateSpec) -> float:
    """Sign functional of the front speed; positive speed while > 0."""
    if not 0.0 < s.tau < 1.0 - s.theta:
        raise NFWavesError(
            f"tau must lie in (0, 1 - theta), got tau={s.tau}, theta={s.theta}")
    return _lambda_value(s.theta, s.tau, s.r)


def tau_zero(s: RateSpec, grid: int = 32) -> float:
    """Smallest zero of Lambda(., theta) in (0, 1 - theta); 1 - theta if none."""
    return _tau_zero_from_lambda(
        lambda tau: _lambda_value(s.theta, tau, s.r), s.theta, grid=grid)


def _tau_zero_from_lambda(lambda_fn, theta: float, grid: int = 32) -> float:
    """Bracket the first sign change of a Lambda function and bisect it."""
    if not 0.0 < theta < 0.5:
        raise NFWavesError(f"theta must lie in (0, 1/2), got {theta}")
    hi = 1.0 - theta
    taus = np.linspace(hi / grid, hi * (1.0 - 1e-12), grid)
    prev_t, prev_v = 0.0, 0.5 - theta
    for t in taus:
        v = lambda_fn(t)
        if v == 0.0:
            return float(t)
        if prev_v > 0.0 > v:
            return float(bisect(lambda_fn, prev_t if prev_t > 0 else t / grid,
                                t, xtol=1e-12))
        prev_t, prev_v = t, v
    return hi


def wave_formula_identity(s: RateSpec) -> float:
    """Difference between the speed-formula numerator and Lambda (self-test).

    Computes int_theta^{theta+tau} (-u + S(u - theta)) S'(u - theta) du by
    quadrature and subtracts Lambda(tau, theta); the two agree identically,
    so the return value is pure numerical error.
    """
    if s.tau <= 0.0:
        raise NFWavesError("identity requires tau > 0")
    amp = s.normalizer

    def integrand(w):
        return ((-(w + s.theta) + float(eval_rate(s, w)))
                * amp * float(_bump(w, s.tau, s.r)))

    val, _ = quad(integrand, 0.0, s.tau, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val - _lambda_value(s.theta, s.tau, s.r)


# ---------------------------------------------------------------------------
# threshold-sum approximation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Discretization:
    """S approximated by a sum of unit steps: sum_k alpha_k H(u - delta_k)."""

    N: int
    deltas: np.ndarray
    alphas: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "deltas", np.asarray(self.deltas, dtype=float))
        object.__setattr__(self, "alphas", np.asarray(self.alphas, dtype=float))
        if self.deltas.shape != (self.N + 1,) or self.alphas.shape != (self.N + 1,):
            raise NFWavesError("deltas/alphas must have length N + 1")
        if np.any(np.diff(self.deltas) <= 0.0) and self.N > 0:
            raise NFWavesError("deltas must be strictly increasing")
        if np.any(self.alphas < 0.0):
            raise NFWavesError("alphas must be nonnegative")

    @property
    def tau(self) -> float:
        return float(self.deltas[-1])

    @cached_property
    def _partial(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.alphas)])

    def eval_step(self, w):
        """Step-sum value at w (steps open on the left: H(0) = 0)."""
        idx = np.searchsorted(self.deltas, np.asarray(w, dtype=float),
                              side="left")
        out = self._partial[idx]
        return out if out.ndim else float(out)

    def reflected(self) -> "Discretization":
        """Weights mirrored across the band midpoint (alpha_k -> alpha_{N-k}).

        The mirrored step sum is the odd-symmetric reflection of this one:
        S_refl(tau/2 + v) = 1 - S(tau/2 - v).
        """
        return Discretization(self.N, self.deltas, self.alphas[::-1].copy())


def heaviside_discretization() -> Discretization:
    """Degenerate band: the single unit step at the threshold (tau = 0)."""
    return Discretization(0, np.array([0.0]), np.array([1.0]))


def discretize(s: RateSpec, N: int) -> Discretization:
    """Partition [0, tau] uniformly; weights by the right-endpoint rule.

    alpha_k = S(delta_{k+1}) - S(delta_k) for k < N and alpha_N = 0; the
    last nonzero weight absorbs the floating-point defect so the weights sum
    to 1 exactly.
    """
    if s.tau <= 0.0:
        raise NFWavesError("discretize requires tau > 0; "
                           "use heaviside_discretization() for tau = 0")
    if N < 1:
        raise NFWavesError(f"N must be >= 1, got {N}")
    deltas = np.linspace(0.0, s.tau, N + 1)
    svals = eval_rate(s, deltas)
    alphas = np.zeros(N + 1)
    alphas[:-1] = np.diff(svals)
    alphas[N - 1] += 1.0 - alphas.sum()
    return Discretization(N, deltas, alphas)


# ---------------------------------------------------------------------------
# model fixed points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedPoints:
    """The three spatially uniform states of the scalar model."""

    low: float
    mid: float
    high: float


def find_fixed_points(s: RateSpec) -> FixedPoints:
    """Roots of u = S(u - theta): 0, beta in (theta, theta + tau), and 1."""
    if s.theta + s.tau >= 1.0:
        raise NFWavesError(
            "not bistable: theta + tau >= 1 so u = 1 is not a fixed point "
            f"(theta={s.theta}, tau={s.tau})")

    def g(u):
        return u - float(eval_rate(s, u - s.theta))

    lo, hi = s.theta, s.theta + s.tau
    if s.tau == 0.0:
        mid = s.theta  # the step case: every value in (0, 1) collapses here
    else:
        if not g(lo) > 0.0 > g(hi):
            raise NFWavesError(
                "not bistable: u - S(u - theta) has no sign change on "
                f"({lo}, {hi})")
        mid = bisect(g, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return FixedPoints(low=0.0, mid=float(mid), high=1.0)
