"""Spectral stability of computed fronts via an Evans determinant.

Linearizing the traveling equation about a threshold-sum front couples the
perturbation to its values at the N + 1 crossings only, giving the matrix

    a_jk(lambda) = alpha_k / (mu U'(z_k)) *
                   int_{-inf}^0 e^{(lambda+1) x / mu} K(x + z_j - z_k) dx,

and the stability function E(lambda) = det(I - A(lambda)), analytic on
Re(lambda) > -1 with E -> 1 as |lambda| -> inf.  Its zeros there are the
point eigenvalues; translation invariance forces a zero at the origin with
eigenvector (U'(z_0), ..., U'(z_N)).  The essential spectrum is the line
Re(lambda) = -1 regardless of the front.  Left of that line the closed form
continues E meromorphically (poles where (lambda+1)/mu hits -a or -b), which
is how the slow second real zero of the sharp-threshold case is located.

Grid scans evaluate |E| on a rectangle (numba-parallel with a numpy
fallback), seed candidate zeros at local minima, and refine them by complex
Newton; a winding-number pass cross-checks the count.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from . import kernel as kmod
from ._accel import evans_grid
from .errors import NFWavesError
from .front_solver import FrontSolution, eval_front_deriv

ORIGIN_BALL = 1e-4       # refined zeros inside this radius are the translation mode
MIN_THRESHOLD = 0.9      # |E| must dip below the E -> 1 asymptote to seed Newton
MAX_CANDIDATES = 100


@dataclass(frozen=True)
class EvansContext:
    """Front data needed by the stability function: crossings, weights, slopes."""

    front: FrontSolution
    derivs: np.ndarray = field(init=False)

    def __post_init__(self):
        derivs = np.atleast_1d(eval_front_deriv(self.front,
                                                self.front.crossings))
        if np.any(derivs <= 0.0):
            raise NFWavesError(
                "front has a non-increasing crossing; stability matrix "
                "denominators require U'(z_k) > 0")
        object.__setattr__(self, "derivs", derivs)

    @property
    def _offsets(self) -> np.ndarray:
        z = self.front.crossings
        return z[:, None] - z[None, :]

    @property
    def _coef(self) -> np.ndarray:
        return self.front.disc.alphas / (self.front.mu * self.derivs)


def _pole_guard(ctx: EvansContext, lam: complex) -> None:
    k = ctx.front.kernel
    s = (lam + 1.0) / ctx.front.mu
    if min(abs(s + k.a), abs(s + k.b)) < 1e-9:
        raise NFWavesError(f"lambda={lam} sits on a continuation pole")


def matrix_entry(ctx: EvansContext, j: int, k: int, lam: complex) -> complex:
    """a_jk(lambda) by the closed form (piece split at x = z_k - z_j)."""
    _pole_guard(ctx, lam)
    s = (lam + 1.0) / ctx.front.mu
    v = float(ctx.front.crossings[j] - ctx.front.crossings[k])
    return complex(ctx._coef[k] * kmod.exp_weighted(ctx.front.kernel, v, s))


def evans_matrix(ctx: EvansContext, lam: complex) -> np.ndarray:
    _pole_guard(ctx, lam)
    s = (lam + 1.0) / ctx.front.mu
    js = kmod.exp_weighted(ctx.front.kernel, ctx._offsets, s)
    return ctx._coef[None, :] * js


def evans_value(ctx: EvansContext, lam: complex) -> complex:
    """E(lambda) = det(I - A(lambda)) by pivoted factorization."""
    n = len(ctx.derivs)
    return complex(np.linalg.det(np.eye(n) - evans_matrix(ctx, lam)))


def evans_values(ctx: EvansContext, lams: np.ndarray) -> np.ndarray:
    """Vectorized E over an array of lambdas (accelerated backend)."""
    k = ctx.front.kernel
    return evans_grid(np.asarray(lams, dtype=np.complex128).ravel(),
                      ctx._offsets, ctx._coef, ctx.front.mu,
                      k.A, k.a, k.B, k.b).reshape(np.shape(lams))


def essential_spectrum(ctx: EvansContext) -> float:
    """Re(lambda) of the essential-spectrum line: -1, independent of the front.

    The non-compact part of the linearization is psi -> -mu psi' - psi, whose
    bounded solutions e^{-(lambda+1) z / mu} exist only on Re(lambda) = -1;
    the crossing-coupling term is finite-rank and cannot move the line.
    """
    return -1.0


def verify_zero_at_origin(ctx: EvansContext,
                          deriv_tol: float = 1e-6) -> tuple[complex, bool]:
    """Check E(0) = 0 with the translation eigenvector, and simplicity.

    A(0) (U'(z_0), ..., U'(z_N))^T = same vector is an exact identity for a
    converged front; simplicity is |dE/dlambda(0)| > deriv_tol by central
    difference.
    """
    val = evans_value(ctx, 0.0 + 0.0j)
    amat = evans_matrix(ctx, 0.0 + 0.0j)
    v = ctx.derivs
    eig_res = float(np.max(np.abs(amat.real @ v - v)) / np.max(np.abs(v)))
    h = 1e-6
    deriv = (evans_value(ctx, h + 0.0j) - evans_value(ctx, -h + 0.0j)) / (2 * h)
    simple = bool(abs(val) < 1e-8 and eig_res < 1e-8 and abs(deriv) > deriv_tol)
    return val, simple


# ---------------------------------------------------------------------------
# grid scan with Newton refinement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvansScan:
    """|E| over a rectravel grid plus refined zeros and the verdict inputs."""

    re_grid: np.ndarray
    im_grid: np.ndarray
    values: np.ndarray          # complex, shape (len(im_grid), len(re_grid))
    zeros: list                 # refined complex roots (origin included)
    essential_line: float
    origin_value: complex
    origin_simple: bool

    @property
    def instability_zeros(self) -> list:
        """Refined zeros with Re >= 0 outside the origin ball."""
        return [z for z in self.zeros
                if abs(z) > ORIGIN_BALL and z.real >= -1e-12]

    @property
    def verdict(self) -> str:
        if self.instability_zeros:
            return "unstable"
        if self.origin_simple:
            return "stable"
        return "inconclusive"


def _refine_zero(ctx: EvansContext, lam: complex,
                 tol: float = 1e-10, max_iter: int = 60) -> complex | None:
    """Complex Newton on E with a central-difference derivative."""
    for _ in range(max_iter):
        val = evans_value(ctx, lam)
        h = 1e-7 * (1.0 + abs(lam))
        dval = (evans_value(ctx, lam + h) - evans_value(ctx, lam - h)) / (2 * h)
        if dval == 0.0:
            return None
        step = val / dval
        lam = lam - step
        if abs(step) < tol:
            return lam
        if not (abs(lam) < 1e4):
            return None
    return None


def scan(ctx: EvansContext, re_max: float = 5.0, im_max: float = 20.0,
         resolution: int = 256, re_min: float = 0.0) -> EvansScan:
    """|E| on [re_min, re_max] x [0, im_max]; refine the grid minima.

    Conjugate symmetry E(conj lambda) = conj E(lambda) makes Im >= 0
    sufficient.  Local minima of |E| below the detection threshold seed
    complex Newton refinement; refined roots may land slightly outside the
    window (the window boundary is not a barrier for Newton).  The origin
    zero is verified separately and excluded from instability evidence.
    """
    if resolution < 32:
        raise NFWavesError("resolution must be at least 32 per axis")
    res = np.linspace(re_min, re_max, resolution)
    ims = np.linspace(0.0, im_max, resolution)
    lam = res[None, :] + 1j * ims[:, None]
    values = evans_values(ctx, lam)
    mags = np.abs(values)

    padded = np.pad(mags, 1, mode="edge")
    neighborhood = np.ones_like(mags, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            neighborhood &= mags <= padded[1 + di:1 + di + mags.shape[0],
                                           1 + dj:1 + dj + mags.shape[1]]
    candidates = np.argwhere(neighborhood & (mags < MIN_THRESHOLD))
    if len(candidates) > MAX_CANDIDATES:
        order = np.argsort(mags[candidates[:, 0], candidates[:, 1]])
        candidates = candidates[order[:MAX_CANDIDATES]]

    zeros: list[complex] = []
    for i, j in candidates:
        root = _refine_zero(ctx, complex(lam[i, j]))
        if root is None:
            continue
        if abs(evans_value(ctx, root)) > 1e-8:
            continue
        if root.imag < 0.0:
            root = root.conjugate()
        if all(abs(root - z) > 1e-6 for z in zeros):
            zeros.append(root)

    origin_value, origin_simple = verify_zero_at_origin(ctx)
    return EvansScan(re_grid=res, im_grid=ims, values=values, zeros=zeros,
                     essential_line=essential_spectrum(ctx),
                     origin_value=origin_value, origin_simple=origin_simple)


def winding_number(ctx: EvansContext, re_lo: float, re_hi: float,
                   im_lo: float, im_hi: float, samples: int = 4000) -> int:
    """Zeros-minus-poles count inside a rectangle by the argument principle.

    E is analytic right of the essential line, so for rectangles there the
    winding equals the zero count (with multiplicity).
    """
    edges = [
        np.linspace(re_lo + 1j * im_lo, re_hi + 1j * im_lo, samples),
        np.linspace(re_hi + 1j * im_lo, re_hi + 1j * im_hi, samples),
        np.linspace(re_hi + 1j * im_hi, re_lo + 1j * im_hi, samples),
        np.linspace(re_lo + 1j * im_hi, re_lo + 1j * im_lo, samples),
    ]
    contour = np.concatenate([e[:-1] for e in edges] + [edges[-1][-1:]])
    vals = evans_values(ctx, contour)
    if np.any(np.abs(vals) < 1e-13):
        raise NFWavesError("contour passes through a zero")
    total = np.unwrap(np.angle(vals))
    winding = (total[-1] - total[0]) / (2.0 * cmath.pi)
    rounded = int(round(winding))
    if abs(winding - rounded) > 0.1:
        raise NFWavesError(f"non-integer winding {winding:.3f}; refine contour")
    return rounded
