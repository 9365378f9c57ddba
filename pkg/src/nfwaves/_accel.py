"""Hot numeric kernels: numba-compiled with a pure-numpy fallback.

Two inner loops dominate runtime: the stability-function determinant over a
complex grid (thousands of dense complex matrices) and the banded spatial
convolution inside the time stepper.  Both carry @njit implementations and
numpy equivalents; benchmarks/bench_accel.py compares them.  The determinant
grid dispatches to numba when available (measured ~4x faster); the banded
convolution dispatches to np.convolve, which beats the compiled loop on this
memory-bound pattern.  Set NFWAVES_NO_NUMBA=1 to force the numpy paths
everywhere (the fallback also engages when numba is unavailable);
NFWAVES_THREADS caps the numba thread pool.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("NFWAVES_NO_NUMBA", "").strip() not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        import numba
        from numba import njit, prange
        _threads = os.environ.get("NFWAVES_THREADS", "").strip()
        if _threads:
            numba.set_num_threads(max(1, min(int(_threads),
                                             numba.config.NUMBA_NUM_THREADS)))
    except ImportError:  # pragma: no cover - exercised via env flag instead
        USE_NUMBA = False

# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------


def _phi1_np(x):
    """(1 - e^{-x})/x for complex arrays, series below |x| = 1e-4."""
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    direct = (1.0 - np.exp(-xs)) / xs
    series = 1.0 + x * (-0.5 + x * (1.0 / 6.0 + x * (-1.0 / 24.0 + x / 120.0)))
    return np.where(small, series, direct)


def _js_matrix_np(v, s, A, a, B, b):
    """Js(v, s) for an array of offsets v and one complex rate s."""
    vn = np.minimum(v, 0.0)
    vp = np.maximum(v, 0.0)
    neg = A * np.exp(a * vn) / (a + s) - B * np.exp(b * vn) / (b + s)
    phis = A / (a + s) - B / (b + s)
    pos = (np.exp(-s * vp) * phis
           + A * np.exp(-a * vp) * vp * _phi1_np((s - a) * vp)
           - B * np.exp(-b * vp) * vp * _phi1_np((s - b) * vp))
    return np.where(v <= 0.0, neg, pos)


def evans_grid_numpy(lams, v, coef, mu, A, a, B, b, chunk=2048):
    """det(I - A(lambda)) over a 1-D array of lambdas.

    v is the (n, n) crossing-offset matrix z_j - z_k; coef the per-column
    factors alpha_k / (mu U'(z_k)).
    """
    n = v.shape[0]
    out = np.empty(lams.shape[0], dtype=np.complex128)
    eye = np.eye(n)
    for start in range(0, lams.shape[0], chunk):
        ls = lams[start:start + chunk]
        s = ((ls + 1.0) / mu)[:, None, None]
        mats = eye[None, :, :] - coef[None, None, :] * _js_matrix_np(
            v[None, :, :], s, A, a, B, b)
        out[start:start + chunk] = np.linalg.det(mats)
    return out


def banded_conv_numpy(f_padded, weights):
    """Correlation of the padded field with the truncated kernel row.

    out[i] = sum_j weights[j] * f_padded[i + j], the direct banded sum.
    """
    return np.convolve(f_padded, weights[::-1], mode="valid")


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if USE_NUMBA:

    @njit(cache=True)
    def _decayed_diff_nb(v, s, c):
        # (e^{-c v} - e^{-s v})/(s - c) for v > 0, series near s = c
        x = (s - c) * v
        if abs(x) < 1e-4:
            return (np.exp(-c * v) * v
                    * (1.0 + x * (-0.5 + x * (1.0 / 6.0
                       + x * (-1.0 / 24.0 + x / 120.0)))))
        return (np.exp(-c * v) - np.exp(-s * v)) / (s - c)

    @njit(cache=True)
    def _js_scalar_nb(v, s, A, a, B, b):
        if v <= 0.0:
            return (A * np.exp(a * v) / (a + s)
                    - B * np.exp(b * v) / (b + s))
        phis = A / (a + s) - B / (b + s)
        return (np.exp(-s * v) * phis
                + A * _decayed_diff_nb(v, s, a)
                - B * _decayed_diff_nb(v, s, b))

    @njit(cache=True)
    def _det_lu_nb(m):
        """Determinant of a small complex matrix by in-place pivoted LU."""
        n = m.shape[0]
        det = 1.0 + 0.0j
        for col in range(n):
            piv = col
            big = abs(m[col, col])
            for row in range(col + 1, n):
                mag = abs(m[row, col])
                if mag > big:
                    big = mag
                    piv = row
            if big == 0.0:
                return 0.0 + 0.0j
            if piv != col:
                for j in range(n):
                    tmp = m[col, j]
                    m[col, j] = m[piv, j]
                    m[piv, j] = tmp
                det = -det
            det *= m[col, col]
            inv = 1.0 / m[col, col]
            for row in range(col + 1, n):
                factor = m[row, col] * inv
                for j in range(col + 1, n):
                    m[row, j] -= factor * m[col, j]
        return det

    @njit(parallel=True, cache=True)
    def _evans_grid_nb(lams, v, coef, mu, A, a, B, b):
        n = v.shape[0]
        out = np.empty(lams.shape[0], dtype=np.complex128)
        for idx in prange(lams.shape[0]):
            s = (lams[idx] + 1.0) / mu
            mat = np.empty((n, n), dtype=np.complex128)
            for j in range(n):
                for k in range(n):
                    mat[j, k] = -coef[k] * _js_scalar_nb(v[j, k], s, A, a, B, b)
                mat[j, j] += 1.0
            out[idx] = _det_lu_nb(mat)
        return out

    @njit(parallel=True, cache=True)
    def _banded_conv_nb(f_padded, weights):
        m = weights.shape[0]
        n = f_padded.shape[0] - m + 1
        out = np.empty(n)
        for i in prange(n):
            out[i] = np.dot(weights, f_padded[i:i + m])
        return out


def evans_grid(lams, v, coef, mu, A, a, B, b):
    """Dispatch the Evans grid evaluation to the active backend."""
    lams = np.ascontiguousarray(lams, dtype=np.complex128)
    v = np.ascontiguousarray(v, dtype=np.float64)
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    if USE_NUMBA:
        return _evans_grid_nb(lams, v, coef, float(mu),
                              float(A), float(a), float(B), float(b))
    return evans_grid_numpy(lams, v, coef, float(mu),
                            float(A), float(a), float(B), float(b))


def banded_conv(f_padded, weights):
    """Banded convolution: always the numpy direct sum.

    np.convolve's single C loop beats the compiled per-row variant by ~3x
    on this memory-bound kernel (see benchmarks/bench_accel.py), so the
    numba path exists only for the benchmark comparison.
    """
    f_padded = np.ascontiguousarray(f_padded, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    return banded_conv_numpy(f_padded, weights)
