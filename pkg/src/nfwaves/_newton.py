"""Damped Newton iteration shared by the front and pulse solvers.

Unknowns are packed as (mu, g_1, ..., g_m) with g_i the log of consecutive
crossing gaps: ordering of the crossings is then structural and never needs
explicit constraints.  Steps are damped by halving until the max-norm
residual decreases; plain Newton diverges when seeded far from a continued
solution.
"""

from __future__ import annotations

import numpy as np

from .errors import BadGuessError, MaxIterationsError

MAX_BACKTRACK = 30


def pack(mu: float, positions: np.ndarray) -> np.ndarray:
    """(mu, log-gaps) vector for crossings (0 = z_0 fixed) + positions[1:]."""
    gaps = np.diff(np.concatenate([[0.0], positions]))
    if np.any(gaps <= 0.0):
        raise BadGuessError("crossing guess is not strictly increasing")
    return np.concatenate([[mu], np.log(gaps)])


def unpack(x: np.ndarray) -> tuple[float, np.ndarray]:
    """Inverse of pack; positions exclude the pinned z_0 = 0."""
    return float(x[0]), np.cumsum(np.exp(x[1:]))


def gap_chain_matrix(x: np.ndarray) -> np.ndarray:
    """d positions / d log-gaps: lower-triangular e^{g_i} columns."""
    m = len(x) - 1
    e = np.exp(x[1:])
    out = np.zeros((m, m))
    for i in range(m):
        out[i:, i] = e[i]
    return out


def damped_newton(fn, x0: np.ndarray, tol: float = 1e-12,
                  max_iter: int = 100,
                  stall_tol: float | None = None
                  ) -> tuple[np.ndarray, float, int]:
    """Minimize the max-norm of fn's residual via damped Newton.

    fn(x) -> (residual, jacobian); returns (x, residual_norm, iterations).
    Raises BadGuessError on a non-finite starting residual and
    MaxIterationsError when the budget runs out.  A line-search stall below
    stall_tol counts as convergence: wide crossing configurations floor the
    achievable residual at ~|z_max| * eps_machine.
    """
    x = np.asarray(x0, dtype=float).copy()
    res, jac = fn(x)
    if not np.all(np.isfinite(res)):
        raise BadGuessError("non-finite residual at the initial guess")
    norm = float(np.max(np.abs(res)))
    for iteration in range(max_iter):
        if norm < tol:
            return x, norm, iteration
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        lam = 1.0
        for _ in range(MAX_BACKTRACK):
            trial = x + lam * step
            res_t, jac_t = fn(trial)
            norm_t = (float(np.max(np.abs(res_t)))
                      if np.all(np.isfinite(res_t)) else np.inf)
            if norm_t < norm:
                break
            lam *= 0.5
        else:
            if stall_tol is not None and norm < stall_tol:
                return x, norm, iteration
            raise MaxIterationsError(
                f"line search stalled at residual {norm:.3e}",
                residual_norm=norm)
        x, res, jac, norm = trial, res_t, jac_t, norm_t
    if norm < tol or (stall_tol is not None and norm < stall_tol):
        return x, norm, max_iter
    raise MaxIterationsError(
        f"no convergence in {max_iter} damped steps (residual {norm:.3e})",
        residual_norm=norm)
