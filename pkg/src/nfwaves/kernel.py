"""Difference-of-exponentials lateral-inhibition kernels and their closed-form integrals.

The coupling K(x) = A e^{-a|x|} - B e^{-b|x|} (A > B > 0, a > b > 0, A/a > B/b)
is positive on (-M, M) and negative outside, with M = ln(A/B)/(a-b).  Every
integral the solvers need reduces to piecewise exponentials split at the |x|
kink, so residuals and Jacobians are exact; adaptive quadrature appears only
as an independent oracle in the test suite.

The central primitive is the exponentially weighted integral

    Js(v, s) = int_{-inf}^{v} e^{s(w - v)} K(w) dw,     Re(s) > 0,

which also accepts complex s (the Evans-function rates (lambda+1)/mu).  For
Re(s) <= 0 the closed form is the meromorphic continuation of the integral,
with poles at s = -a and s = -b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import NFWavesError

# |int K - 1| accepted without rescaling.  The reference parameter set
# (A=5, a=0.5, B=4, b=0.4211) integrates to ~1.00214 because b is a rounded
# value, so the default must sit above 2.2e-3.
DEFAULT_NORM_TOL = 2.5e-3


@dataclass(frozen=True)
class KernelParams:
    """Validated kernel parameters with derived constants.

    decay_rate is min(a, b): the rate rho of the exponential bound
    |K(x)| <= C e^{-rho |x|} (the constant C itself is never needed).
    """

    A: float
    a: float
    B: float
    b: float
    decay_rate: float = field(init=False)

    def __post_init__(self):
        if not (self.A > self.B > 0.0):
            raise NFWavesError(f"need A > B > 0, got A={self.A}, B={self.B}")
        if not (self.a > self.b > 0.0):
            raise NFWavesError(f"need a > b > 0, got a={self.a}, b={self.b}")
        if not self.A / self.a > self.B / self.b:
            raise NFWavesError("need A/a > B/b so that the kernel has positive mass")
        object.__setattr__(self, "decay_rate", min(self.a, self.b))

    @property
    def total_mass(self) -> float:
        """int_R K = 2A/a - 2B/b."""
        return 2.0 * (self.A / self.a - self.B / self.b)

    @property
    def half_mass(self) -> float:
        """int_{-inf}^0 K = int_0^inf K (symmetry)."""
        return self.A / self.a - self.B / self.b

    @property
    def l1_norm(self) -> float:
        """int |K|, closed form using the sign change at +-M."""
        m = compute_M(self)
        tail = antiderivative(self, -m)  # negative
        return self.total_mass - 4.0 * tail

    def normalized(self) -> "KernelParams":
        """Rescale A and B so that int K = 1 exactly."""
        c = 1.0 / self.total_mass
        return KernelParams(self.A * c, self.a, self.B * c, self.b)


def make_kernel(A: float, a: float, B: float, b: float,
                normalize: bool = False,
                norm_tol: float = DEFAULT_NORM_TOL) -> KernelParams:
    """Build kernel parameters, enforcing |int K - 1| <= norm_tol.

    With normalize=True the amplitudes are rescaled so int K = 1 exactly
    (useful when a, b are rounded values).
    """
    p = KernelParams(A, a, B, b)
    if normalize:
        return p.normalized()
    if abs(p.total_mass - 1.0) > norm_tol:
        raise NFWavesError(
            f"kernel mass {p.total_mass:.6f} deviates from 1 by more than "
            f"{norm_tol:g}; pass normalize=True or adjust parameters")
    return p


def section5_kernel(normalize: bool = True) -> KernelParams:
    """The reference lateral-inhibition kernel (A=5, a=0.5, B=4, b=0.4211)."""
    return make_kernel(5.0, 0.5, 4.0, 0.4211, normalize=normalize)


# ---------------------------------------------------------------------------
# pointwise evaluation and antiderivative
# ---------------------------------------------------------------------------

def eval_kernel(p: KernelParams, x):
    """K(x) = A e^{-a|x|} - B e^{-b|x|}; even in x.  Vectorized."""
    ax = np.abs(np.asarray(x, dtype=float))
    return p.A * np.exp(-p.a * ax) - p.B * np.exp(-p.b * ax)


def antiderivative(p: KernelParams, z):
    """Psi(z) = int_{-inf}^z K, split at the kink x = 0.  Vectorized."""
    z = np.asarray(z, dtype=float)
    zn = np.minimum(z, 0.0)
    zp = np.maximum(z, 0.0)
    left = p.A / p.a * np.exp(p.a * zn) - p.B / p.b * np.exp(p.b * zn)
    right = (p.total_mass - p.A / p.a * np.exp(-p.a * zp)
             + p.B / p.b * np.exp(-p.b * zp))
    out = np.where(z <= 0.0, left, right)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# exponentially weighted integrals (real or complex rate)
# ---------------------------------------------------------------------------

def _decayed_diff(vp, s, c):
    """(e^{-c v} - e^{-s v}) / (s - c) for v >= 0, stable as s -> c.

    Every exponent has non-positive real part, so the direct difference never
    overflows; the series branch handles the cancellation at |(s-c)v| << 1.
    """
    d = s - c
    x = d * vp
    small = np.abs(x) < 1e-4
    d_safe = np.where(small, 1.0, d)
    direct = (np.exp(-c * vp) - np.exp(-s * vp)) / d_safe
    # e^{-cv} v (1 - x/2 + x^2/6 - x^3/24 + x^4/120)
    series = np.exp(-c * vp) * vp * (
        1.0 + x * (-0.5 + x * (1.0 / 6.0 + x * (-1.0 / 24.0 + x / 120.0))))
    return np.where(small, series, direct)


def _decayed_diff_ds(vp, s, c):
    """d/ds of _decayed_diff at fixed v >= 0."""
    d = s - c
    x = d * vp
    small = np.abs(x) < 1e-3
    d_safe = np.where(small, 1.0, d)
    direct = (vp * np.exp(-s * vp) * d_safe
              - (np.exp(-c * vp) - np.exp(-s * vp))) / (d_safe * d_safe)
    # e^{-cv} v^2 (-1/2 + x/3 - x^2/8 + x^3/30 - x^4/144)
    series = np.exp(-c * vp) * vp * vp * (
        -0.5 + x * (1.0 / 3.0 + x * (-0.125 + x * (1.0 / 30.0 - x / 144.0))))
    return np.where(small, series, direct)


def weighted_tail(p: KernelParams, s):
    """Js(0, s) = int_{-inf}^0 e^{s w} K(w) dw = A/(a+s) - B/(b+s)."""
    return p.A / (p.a + s) - p.B / (p.b + s)


def weighted_tail_ds(p: KernelParams, s):
    return -p.A / (p.a + s) ** 2 + p.B / (p.b + s) ** 2


def exp_weighted(p: KernelParams, v, s):
    """Js(v, s) = int_{-inf}^v e^{s(w-v)} K(w) dw, vectorized in v.

    s may be real or complex; pieces split at the kernel kink w = 0.
    """
    v = np.asarray(v, dtype=float)
    vn = np.minimum(v, 0.0)
    vp = np.maximum(v, 0.0)
    neg = (p.A * np.exp(p.a * vn) / (p.a + s)
           - p.B * np.exp(p.b * vn) / (p.b + s))
    pos = (np.exp(-s * vp) * weighted_tail(p, s)
           + p.A * _decayed_diff(vp, s, p.a)
           - p.B * _decayed_diff(vp, s, p.b))
    out = np.where(v <= 0.0, neg, pos)
    return out if out.ndim else out[()]


def exp_weighted_ds(p: KernelParams, v, s):
    """d/ds of exp_weighted at fixed v."""
    v = np.asarray(v, dtype=float)
    vn = np.minimum(v, 0.0)
    vp = np.maximum(v, 0.0)
    neg = (-p.A * np.exp(p.a * vn) / (p.a + s) ** 2
           + p.B * np.exp(p.b * vn) / (p.b + s) ** 2)
    pos = (np.exp(-s * vp) * (weighted_tail_ds(p, s) - vp * weighted_tail(p, s))
           + p.A * _decayed_diff_ds(vp, s, p.a)
           - p.B * _decayed_diff_ds(vp, s, p.b))
    out = np.where(v <= 0.0, neg, pos)
    return out if out.ndim else out[()]


def exp_weighted_integral(p: KernelParams, z, mu: float, shift: float = 0.0):
    """int_{-inf}^z e^{(x-z)/mu} K(x - shift) dx for mu > 0.

    Equals Js(z - shift, 1/mu); the kink at x = shift is handled exactly.
    """
    if mu <= 0.0:
        raise NFWavesError(f"mu must be positive, got {mu}")
    return exp_weighted(p, np.asarray(z, dtype=float) - shift, 1.0 / mu)


# ---------------------------------------------------------------------------
# kernel constants
# ---------------------------------------------------------------------------

def compute_M(p: KernelParams) -> float:
    """Excitation radius: the unique positive zero crossing of K."""
    return math.log(p.A / p.B) / (p.a - p.b)


@dataclass(frozen=True)
class SigmaConstants:
    """Threshold-band width bounds derived from the kernel.

    sigma1 solves int_{-inf}^{-s} K = 0 (closed form).  sigma2 and sigma3
    solve threshold-mass equations on (0, M); when no root exists there the
    field is None and treated as +inf in sigma_min.
    """

    sigma1: float
    sigma2: float | None
    sigma3: float | None
    M: float
    sigma_min: float


def _sigma2_lhs(p: KernelParams, m: float, s: float) -> float:
    # (int_{-inf}^{-M-s} + int_{-M}^{-M+s}) K; strictly increasing on (0, 2M)
    return (antiderivative(p, -m - s)
            + antiderivative(p, -m + s) - antiderivative(p, -m))


def _sigma3_lhs(p: KernelParams, m: float, s: float) -> float:
    # (int_{-inf}^{M-s} + int_{M}^{M+s}) K; strictly decreasing on (0, 2M)
    return (antiderivative(p, m - s)
            + antiderivative(p, m + s) - antiderivative(p, m))


def compute_sigmas(p: KernelParams, theta: float,
                   theta_plus_tau: float) -> SigmaConstants:
    """Solve the three band-width equations.

    theta in [0, 1/2) and theta_plus_tau in (theta, 1]; the boundary values
    theta = 0 and theta + tau = 1 are the diagnostic reference points.
    sigma1 has the closed form ln(Ab/(aB))/(a-b); sigma2/sigma3 are found by
    bisection on (0, M) and reported as None when no root lies in the bracket.
    """
    if not 0.0 <= theta < 0.5:
        raise NFWavesError(f"theta must lie in [0, 1/2), got {theta}")
    if not theta <= theta_plus_tau <= 1.0:
        raise NFWavesError(
            f"theta + tau must lie in [theta, 1], got {theta_plus_tau}")
    m = compute_M(p)
    sigma1 = math.log(p.A * p.b / (p.a * p.B)) / (p.a - p.b)

    def bracketed_root(fn, target):
        lo, hi = 1e-12, m * (1.0 - 1e-12)
        flo, fhi = fn(lo) - target, fn(hi) - target
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if flo * fhi > 0.0:
            return None
        return bisect(lambda s: fn(s) - target, lo, hi, xtol=1e-12)

    sigma2 = bracketed_root(lambda s: _sigma2_lhs(p, m, s), theta)
    sigma3 = bracketed_root(lambda s: _sigma3_lhs(p, m, s), theta_plus_tau)
    smin = min(sigma1,
               sigma2 if sigma2 is not None else math.inf,
               sigma3 if sigma3 is not None else math.inf)
    return SigmaConstants(sigma1=sigma1, sigma2=sigma2, sigma3=sigma3,
                          M=m, sigma_min=smin)


# ---------------------------------------------------------------------------
# wave-speed index for the sharp-threshold front
# ---------------------------------------------------------------------------

def speed_index(p: KernelParams, mu):
    """phi(mu) = int_{-inf}^0 e^{x/mu} K(x) dx = A/(a+1/mu) - B/(b+1/mu)."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0.0):
        raise NFWavesError("speed_index requires mu > 0")
    out = weighted_tail(p, 1.0 / mu)
    return out if out.ndim else float(out)


def speed_index_deriv(p: KernelParams, mu):
    """phi'(mu) = A/(a mu + 1)^2 - B/(b mu + 1)^2 > 0 at the selected root."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0.0):
        raise NFWavesError("speed_index_deriv requires mu > 0")
    out = p.A / (p.a * mu + 1.0) ** 2 - p.B / (p.b * mu + 1.0) ** 2
    return out if out.ndim else float(out)


def solve_heaviside_speed(p: KernelParams, theta: float,
                          mu_max: float = 1e6) -> float:
    """Unique wave speed mu0 > 0 of the sharp-threshold front.

    Solves phi(mu0) = Psi(0) - theta on the rising branch (Psi(0) = 1/2 for a
    normalized kernel, so this is the usual 1/2 - theta condition) and checks
    phi'(mu0) > 0.  The same equation is the z = 0 threshold condition of the
    closed-form front, which keeps the sharp-threshold limit of the band
    solver consistent to solver precision.
    """
    if not 0.0 < theta < 0.5:
        raise NFWavesError(f"theta must lie in (0, 1/2), got {theta}")
    target = p.half_mass - theta
    if target <= 0.0:
        raise NFWavesError("threshold at or above the kernel half mass")

    def f(mu):
        return float(speed_index(p, mu)) - target

    lo = 1e-8
    if f(lo) > 0.0:
        raise NFWavesError("no bracket: phi(mu) already above target at mu -> 0")
    hi = 2.0 * lo
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > mu_max:
            raise NFWavesError(
                f"no speed bracket below mu_max={mu_max:g}; threshold too "
                "close to the half mass or kernel not normalized")
    mu0 = bisect(f, hi / 2.0, hi, xtol=1e-14, rtol=8.9e-16)
    if not speed_index_deriv(p, mu0) > 0.0:
        raise NFWavesError("selected speed root is not on the rising branch")
    return float(mu0)
