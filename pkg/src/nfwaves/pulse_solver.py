"""Fast traveling pulses of the adaptation system via closed-form profiles.

In the traveling frame the pair (U, Q) solves

    mu U' + U + Q = sum_k alpha_k [ Psi(z - eta_k) - Psi(z - kappa_{N-k}) ],
    mu Q'         = eps (U - gamma Q),

for a locally excited profile that rises through threshold theta + delta_k
at eta_k and falls back through it at kappa_{N-k}.  The 2x2 linear system
has decay rates omega_1 > omega_2 > 0 (real when (1 - gamma eps)^2 > 4 eps),
and the bounded solution is a combination of the same exponentially weighted
kernel integrals the front uses, at rates s_i = omega_i / mu:

    U = sum_k alpha_k [ gamma/(1+gamma) DPsi_k - (c_1 DJ_k(s_1) + c_2 DJ_k(s_2)) ],
    Q = sum_k alpha_k [ 1/(1+gamma) DPsi_k - eps (d_1 DJ_k(s_1) + d_2 DJ_k(s_2)) ],

with DPsi_k / DJ_k the eta-minus-kappa differences.  The 2(N+1) threshold
conditions determine (mu, eta_1..eta_N, kappa_0..kappa_N); the seed comes
from the singular decomposition: the front jump, slow drift up the right
branch U = 1 - Q to the takeoff level, the reflected back, and the return
along U = -Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel as kmod
from ._newton import damped_newton, gap_chain_matrix, pack, unpack
from .errors import (ComplexBranchError, NFWavesError, OrderingViolatedError,
                     SymmetryViolatedError)
from .firing_rate import Discretization, RateSpec, symmetry_defect
from .front_solver import FrontSolution, eval_front, eval_front_deriv
from .kernel import KernelParams

SOLVER_TOL = 1e-10


@dataclass(frozen=True)
class PulseParams:
    """Adaptation rate and feedback decay of the recovery field."""

    epsilon: float
    gamma: float

    def __post_init__(self):
        if self.epsilon <= 0.0 or self.gamma <= 0.0:
            raise NFWavesError("epsilon and gamma must be positive")

    @property
    def discriminant(self) -> float:
        return (1.0 - self.gamma * self.epsilon) ** 2 - 4.0 * self.epsilon


def omega(params: PulseParams) -> tuple[float, float]:
    """Decay rates (omega_1, omega_2), omega_1 > omega_2 > 0."""
    disc = params.discriminant
    if disc <= 0.0:
        raise ComplexBranchError(
            f"(1 - gamma*eps)^2 - 4 eps = {disc:.3e} <= 0: complex rates "
            "are outside the supported regime")
    root = math.sqrt(disc)
    base = 1.0 + params.gamma * params.epsilon
    return 0.5 * (base + root), 0.5 * (base - root)


def _mode_coefficients(params: PulseParams):
    """(c_1, c_2, d_1, d_2) weighting the two decay modes."""
    w1, w2 = omega(params)
    dw = w1 - w2
    c1 = (1.0 - w2) / (w1 * dw)
    c2 = -(1.0 - w1) / (w2 * dw)
    d1 = -1.0 / (w1 * dw)
    d2 = 1.0 / (w2 * dw)
    return w1, w2, c1, c2, d1, d2


def weight_C(x, mu: float, params: PulseParams):
    """Two-mode weight multiplying the kernel in the U component."""
    w1, w2, c1, c2, _, _ = _mode_coefficients(params)
    x = np.asarray(x, dtype=float)
    out = c1 * np.exp(w1 * x / mu) + c2 * np.exp(w2 * x / mu)
    return out if out.ndim else float(out)


def weight_D(x, mu: float, params: PulseParams):
    """Two-mode weight for the recovery component."""
    w1, w2, _, _, d1, d2 = _mode_coefficients(params)
    x = np.asarray(x, dtype=float)
    out = d1 * np.exp(w1 * x / mu) + d2 * np.exp(w2 * x / mu)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PulseSolution:
    """Converged pulse: speed, up-crossings eta, down-crossings kappa."""

    mu: float
    etas: np.ndarray
    kappas: np.ndarray
    params: PulseParams
    kernel: KernelParams
    disc: Discretization
    theta: float
    residual_norm: float

    def __post_init__(self):
        object.__setattr__(self, "etas", np.asarray(self.etas, dtype=float))
        object.__setattr__(self, "kappas", np.asarray(self.kappas, dtype=float))


def _pulse_pieces(sol_or_args):
    mu, etas, kappas, alphas, params, k = sol_or_args
    w1, w2, c1, c2, d1, d2 = _mode_coefficients(params)
    s1, s2 = w1 / mu, w2 / mu
    g_u = params.gamma / (1.0 + params.gamma)
    g_q = 1.0 / (1.0 + params.gamma)
    return (mu, etas, kappas, alphas, params, k,
            s1, s2, c1, c2, d1, d2, g_u, g_q)


def _eval_uq(z, mu, etas, kappas, alphas, params, k):
    (mu, etas, kappas, alphas, params, k,
     s1, s2, c1, c2, d1, d2, g_u, g_q) = _pulse_pieces(
        (mu, etas, kappas, alphas, params, k))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    ve = z[:, None] - etas[None, :]
    vk = z[:, None] - kappas[None, ::-1]   # column k pairs eta_k with kappa_{N-k}
    dpsi = kmod.antiderivative(k, ve) - kmod.antiderivative(k, vk)
    j1 = kmod.exp_weighted(k, ve, s1) - kmod.exp_weighted(k, vk, s1)
    j2 = kmod.exp_weighted(k, ve, s2) - kmod.exp_weighted(k, vk, s2)
    u = (alphas[None, :] * (g_u * dpsi - (c1 * j1 + c2 * j2))).sum(axis=1)
    q = (alphas[None, :] * (g_q * dpsi
                            - params.epsilon * (d1 * j1 + d2 * j2))).sum(axis=1)
    return u, q


def eval_pulse(sol: PulseSolution, z):
    """(U(z), Q(z)) from the closed forms, vectorized."""
    scalar = np.ndim(z) == 0
    u, q = _eval_uq(z, sol.mu, sol.etas, sol.kappas, sol.disc.alphas,
                    sol.params, sol.kernel)
    if scalar:
        return float(u[0]), float(q[0])
    return u, q


def eval_pulse_derivs(sol: PulseSolution, z):
    """(U'(z), Q'(z)) closed forms (independent of the traveling equations)."""
    scalar = np.ndim(z) == 0
    (mu, etas, kappas, alphas, params, k,
     s1, s2, c1, c2, d1, d2, _, _) = _pulse_pieces(
        (sol.mu, sol.etas, sol.kappas, sol.disc.alphas, sol.params, sol.kernel))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    ve = z[:, None] - etas[None, :]
    vk = z[:, None] - kappas[None, ::-1]
    j1 = kmod.exp_weighted(k, ve, s1) - kmod.exp_weighted(k, vk, s1)
    j2 = kmod.exp_weighted(k, ve, s2) - kmod.exp_weighted(k, vk, s2)
    up = (alphas[None, :] * (c1 * s1 * j1 + c2 * s2 * j2)).sum(axis=1)
    qp = params.epsilon * (alphas[None, :]
                           * (d1 * s1 * j1 + d2 * s2 * j2)).sum(axis=1)
    if scalar:
        return float(up[0]), float(qp[0])
    return up, qp


def forcing_sum(sol: PulseSolution, z):
    """sum_k alpha_k [Psi(z - eta_k) - Psi(z - kappa_{N-k})] (test helper)."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    ve = z[:, None] - sol.etas[None, :]
    vk = z[:, None] - sol.kappas[None, ::-1]
    out = (sol.disc.alphas[None, :]
           * (kmod.antiderivative(sol.kernel, ve)
              - kmod.antiderivative(sol.kernel, vk))).sum(axis=1)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# singular decomposition (the eps -> 0 skeleton)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingularOrbit:
    """Fast front + slow right branch + reflected back + slow left branch."""

    front: FrontSolution
    back_offset: float          # U_back = back_offset - U_front
    Q_takeoff: float            # 1 - (2 theta + tau)
    slow_right: np.ndarray      # (n, 2) samples of (U, Q) on U = 1 - Q
    slow_left: np.ndarray       # (n, 2) samples of (U, Q) on U = -Q
    mu_f: float
    back_disc: Discretization = field(repr=False, default=None)
    back_residual: float = math.nan

    def back_value(self, z):
        """U along the fast back: the odd reflection of the front profile."""
        return self.back_offset - eval_front(self.front, z)

    def curve(self, n_fast: int = 400, span: float = 30.0) -> np.ndarray:
        """Polyline through all four pieces in the (U, Q) plane."""
        zf = np.linspace(-span, span, n_fast)
        front_piece = np.column_stack([eval_front(self.front, zf),
                                       np.zeros(n_fast)])
        qr = np.linspace(0.0, self.Q_takeoff, n_fast)
        right = np.column_stack([1.0 - qr, qr])
        back_piece = np.column_stack([self.back_value(zf),
                                      np.full(n_fast, self.Q_takeoff)])
        ql = np.linspace(self.Q_takeoff, 0.0, n_fast)
        left = np.column_stack([-ql, ql])
        return np.vstack([front_piece, right, back_piece, left])


def build_singular_orbit(front: FrontSolution, theta: float, tau: float,
                         rate: RateSpec | None = None,
                         n_arc: int = 200) -> SingularOrbit:
    """Assemble the zero-adaptation skeleton orbit from a converged front.

    The back U = (2 theta + tau) - U_front at recovery level 1 - (2 theta +
    tau) solves the jump equation exactly when the rate is odd-symmetric and
    the kernel mass is 1; the discrete counterpart uses the mirrored step
    weights.  Raises SymmetryViolatedError when the supplied rate breaks the
    odd symmetry beyond 1e-6 or the closed-form back residual exceeds 1e-6.
    """
    if abs(theta - front.theta) > 1e-14 or abs(tau - front.disc.tau) > 1e-12:
        raise NFWavesError("theta/tau do not match the supplied front")
    if rate is not None and symmetry_defect(rate) > 1e-6:
        raise SymmetryViolatedError(
            "rate is not odd-symmetric about its midpoint")
    offset = 2.0 * theta + tau
    q0 = 1.0 - offset
    if not 0.0 < q0 < 1.0:
        raise NFWavesError(f"takeoff level {q0} outside (0, 1)")
    back_disc = front.disc.reflected()

    # closed-form residual of the back jump equation at the takeoff level;
    # equals (1 - int K) plus round-off, by the reflection identity
    zs = np.linspace(-10.0 * front.crossings[-1] - 10.0,
                     10.0 * front.crossings[-1] + 10.0, 201)
    lhs = (-front.mu * eval_front_deriv(front, zs)
           + (offset - eval_front(front, zs)) + q0)
    vk = zs[:, None] - front.crossings[None, ::-1]
    rhs = (back_disc.alphas[None, :]
           * (front.kernel.total_mass
              - kmod.antiderivative(front.kernel, vk))).sum(axis=1)
    back_residual = float(np.max(np.abs(lhs - rhs)))
    if back_residual > 1e-6:
        raise SymmetryViolatedError(
            f"back jump residual {back_residual:.3e}; the reflection "
            "identity needs an odd-symmetric rate and unit kernel mass")

    qr = np.linspace(0.0, q0, n_arc)
    ql = np.linspace(q0, 0.0, n_arc)
    return SingularOrbit(front=front, back_offset=offset, Q_takeoff=q0,
                         slow_right=np.column_stack([1.0 - qr, qr]),
                         slow_left=np.column_stack([-ql, ql]),
                         mu_f=front.mu, back_disc=back_disc,
                         back_residual=back_residual)


def slow_transit_length(orbit: SingularOrbit, params: PulseParams) -> float:
    """Traveling-frame length of the slow drift up the right branch.

    dQ/dt = (U - gamma Q)/mu on U = 1 - Q integrates to a log; dividing the
    slow time by eps converts to the frame coordinate.
    """
    g = params.gamma
    arg = 1.0 - (1.0 + g) * orbit.Q_takeoff
    if arg <= 0.0:
        raise NFWavesError("takeoff level unreachable for this gamma")
    return -orbit.mu_f * math.log(arg) / ((1.0 + g) * params.epsilon)


def fast_system_eigenvalues(k: KernelParams, mu: float):
    """Nontrivial linearization rates off the slow branches: ({a, b}, {-1/mu, -a, -b})."""
    if mu <= 0.0:
        raise NFWavesError("mu must be positive")
    return (np.array([k.a, k.b]), np.array([-1.0 / mu, -k.a, -k.b]))


# ---------------------------------------------------------------------------
# the 2(N+1) threshold solve
# ---------------------------------------------------------------------------

def _pulse_system(k: KernelParams, disc: Discretization, theta: float,
                  params: PulseParams):
    alphas = disc.alphas
    n = disc.N + 1
    targets = np.concatenate([theta + disc.deltas,
                              (theta + disc.deltas)[::-1]])

    def fn(x):
        mu = x[0]
        if mu <= 0.0 or not np.all(np.isfinite(x)):
            return np.full(2 * n, np.inf), np.eye(2 * n)
        positions = np.concatenate([[0.0], unpack(x)[1]])
        etas, kappas = positions[:n], positions[n:]
        w1, w2, c1, c2, d1, d2 = _mode_coefficients(params)
        s1, s2 = w1 / mu, w2 / mu
        g_u = params.gamma / (1.0 + params.gamma)

        pts = positions
        ve = pts[:, None] - etas[None, :]
        vk = pts[:, None] - kappas[None, ::-1]
        j1e = kmod.exp_weighted(k, ve, s1)
        j2e = kmod.exp_weighted(k, ve, s2)
        j1k = kmod.exp_weighted(k, vk, s1)
        j2k = kmod.exp_weighted(k, vk, s2)
        dpsi = kmod.antiderivative(k, ve) - kmod.antiderivative(k, vk)
        cje = c1 * j1e + c2 * j2e
        cjk = c1 * j1k + c2 * j2k
        u = (alphas[None, :] * (g_u * dpsi - (cje - cjk))).sum(axis=1)
        res = u - targets

        # d/dmu: s_i = w_i/mu so dJs/dmu = -(s_i/mu) dJs/ds
        j1e_ds = kmod.exp_weighted_ds(k, ve, s1)
        j2e_ds = kmod.exp_weighted_ds(k, ve, s2)
        j1k_ds = kmod.exp_weighted_ds(k, vk, s1)
        j2k_ds = kmod.exp_weighted_ds(k, vk, s2)
        dmu = (alphas[None, :] * (c1 * s1 * (j1e_ds - j1k_ds)
                                  + c2 * s2 * (j2e_ds - j2k_ds))).sum(axis=1) / mu

        uprime = (alphas[None, :] * (c1 * s1 * (j1e - j1k)
                                     + c2 * s2 * (j2e - j2k))).sum(axis=1)
        # columns: crossings eta_0..eta_N then kappa_0..kappa_N
        deta = -alphas[None, :] * (c1 * s1 * j1e + c2 * s2 * j2e)
        dkap_rev = alphas[None, :] * (c1 * s1 * j1k + c2 * s2 * j2k)
        dkap = dkap_rev[:, ::-1]   # reorder columns to kappa_0..kappa_N
        dpos = np.concatenate([deta, dkap], axis=1)
        dpos[np.diag_indices(2 * n)] += uprime

        jac = np.empty((2 * n, 2 * n))
        jac[:, 0] = dmu
        jac[:, 1:] = dpos[:, 1:] @ gap_chain_matrix(x)
        return res, jac

    return fn


def check_locally_excited(sol: PulseSolution, samples: int = 20_000) -> bool:
    """Each threshold is crossed exactly twice on a wide sampled window."""
    lo = float(sol.etas[0]) - 30.0 / sol.kernel.decay_rate
    w2 = omega(sol.params)[1]
    hi = float(sol.kappas[-1]) + 30.0 * sol.mu / w2
    zs = np.linspace(lo, hi, samples)
    u, _ = eval_pulse(sol, zs)
    for d in sol.disc.deltas:
        signs = np.sign(u - (sol.theta + d))
        signs = signs[signs != 0.0]
        if int(np.sum(np.abs(np.diff(signs)) > 0)) != 2:
            return False
    return True


def solve_pulse(k: KernelParams, disc: Discretization, theta: float,
                params: PulseParams, guess) -> PulseSolution:
    """Damped Newton on the 2(N+1) threshold conditions.

    guess is a SingularOrbit (seeded by the slow transit length) or an
    existing PulseSolution (e.g. the previous cell of an eps sweep).
    """
    omega(params)  # validates the real-rate regime
    if isinstance(guess, SingularOrbit):
        zoff = slow_transit_length(guess, params)
        front_z = np.asarray(guess.front.crossings, dtype=float)
        if len(front_z) != disc.N + 1:
            raise NFWavesError("front band size does not match disc")
        etas0 = front_z
        kappas0 = zoff + front_z
        mu0 = guess.mu_f
    elif isinstance(guess, PulseSolution):
        etas0, kappas0, mu0 = guess.etas, guess.kappas, guess.mu
    else:
        raise NFWavesError("guess must be a SingularOrbit or PulseSolution")

    positions = np.concatenate([etas0[1:], kappas0])
    fn = _pulse_system(k, disc, theta, params)
    x, norm, _ = damped_newton(fn, pack(mu0, positions), tol=SOLVER_TOL,
                               stall_tol=1e-8)
    mu, rest = unpack(x)
    all_pos = np.concatenate([[0.0], rest])
    n = disc.N + 1
    sol = PulseSolution(mu=mu, etas=all_pos[:n], kappas=all_pos[n:],
                        params=params, kernel=k, disc=disc, theta=theta,
                        residual_norm=norm)
    if not check_locally_excited(sol):
        raise OrderingViolatedError(
            "a threshold is not crossed exactly twice; solution is not "
            "locally excited")
    return sol
