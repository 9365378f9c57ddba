"""Rate family, speed-sign functional, discretization, fixed points."""

import numpy as np
import pytest
from scipy.integrate import quad

import nfwaves as nf
from nfwaves.errors import NFWavesError
from nfwaves.firing_rate import (RateSpec, _bump, _tau_zero_from_lambda,
                                 compute_normalizer, eval_rate_deriv,
                                 heaviside_discretization, symmetry_defect)

from conftest import THETA, R_SHARP


# ---------------------------------------------------------------------------
# pointwise evaluation
# ---------------------------------------------------------------------------

def test_branch_values(rate52):
    assert nf.eval_rate(rate52, 0.0) == 0.0
    assert nf.eval_rate(rate52, -0.3) == 0.0
    assert nf.eval_rate(rate52, rate52.tau) == 1.0
    assert nf.eval_rate(rate52, 2.0) == 1.0
    assert nf.eval_rate(rate52, 0.5 * rate52.tau) == pytest.approx(0.5,
                                                                   abs=1e-12)


def test_nondecreasing_on_dense_grid(rate52):
    us = np.linspace(-rate52.tau, 2.0 * rate52.tau, 10_000)
    vals = nf.eval_rate(rate52, us)
    assert np.all(np.diff(vals) >= 0.0)
    assert np.all((vals >= 0.0) & (vals <= 1.0))


def test_odd_symmetry_pointwise(rate52):
    v = np.linspace(0.0, 0.5 * rate52.tau, 4001)
    lhs = nf.eval_rate(rate52, 0.5 * rate52.tau + v) - 0.5
    rhs = -(nf.eval_rate(rate52, 0.5 * rate52.tau - v) - 0.5)
    assert np.max(np.abs(lhs - rhs)) < 1e-10
    assert symmetry_defect(rate52) < 1e-10


def test_heaviside_limit():
    s = RateSpec(theta=THETA, tau=0.0, r=R_SHARP)
    assert nf.eval_rate(s, 0.0) == 0.0
    assert nf.eval_rate(s, 1e-12) == 1.0
    assert nf.eval_rate(s, -1e-12) == 0.0


def test_rate_validation():
    with pytest.raises(NFWavesError):
        RateSpec(theta=0.6, tau=0.3)
    with pytest.raises(NFWavesError):
        RateSpec(theta=0.1, tau=-0.1)
    with pytest.raises(NFWavesError):
        RateSpec(theta=0.1, tau=0.3, r=0.0)


# ---------------------------------------------------------------------------
# normalizer
# ---------------------------------------------------------------------------

def test_normalizer_defining_identity(rate52):
    total, _ = quad(lambda x: float(_bump(x, rate52.tau, rate52.r)),
                    0.0, rate52.tau, epsabs=1e-15, limit=200)
    assert rate52.normalizer * total == pytest.approx(1.0, abs=1e-10)


def test_normalizer_positive_finite(rate52):
    val = compute_normalizer(rate52)
    assert np.isfinite(val) and val > 0.0


def test_normalizer_grows_with_sharpness():
    vals = [compute_normalizer(RateSpec(theta=THETA, tau=0.52, r=r))
            for r in (0.01, 0.05, 0.2, 1.0)]
    assert np.all(np.diff(vals) > 0.0)


def test_normalizer_rejects_step():
    with pytest.raises(NFWavesError):
        compute_normalizer(RateSpec(theta=THETA, tau=0.0))


def test_rate_deriv_is_density(rate52):
    us = np.linspace(0.05, rate52.tau - 0.05, 11)
    h = 1e-6
    fd = (nf.eval_rate(rate52, us + h) - nf.eval_rate(rate52, us - h)) / (2 * h)
    assert np.allclose(eval_rate_deriv(rate52, us), fd, atol=1e-6)


# ---------------------------------------------------------------------------
# speed-sign functional
# ---------------------------------------------------------------------------

def test_lambda_small_band_limit():
    val = nf.lambda_speed_sign(RateSpec(theta=THETA, tau=1e-6, r=R_SHARP))
    assert val == pytest.approx(0.5 - THETA, abs=1e-5)


def test_lambda_symmetric_closed_form():
    for tau in (0.1, 0.3, 0.52, 0.7):
        s = RateSpec(theta=THETA, tau=tau, r=R_SHARP)
        assert nf.lambda_speed_sign(s) == pytest.approx(
            0.5 - THETA - 0.5 * tau, abs=1e-12)


def test_lambda_zero_at_reference_width():
    s = RateSpec(theta=0.1, tau=0.8 - 1e-13, r=R_SHARP)
    assert abs(nf.lambda_speed_sign(s)) < 1e-9


def test_lambda_strictly_decreasing_in_tau():
    taus = np.linspace(0.05, 0.85, 9)
    vals = [nf.lambda_speed_sign(RateSpec(theta=0.1, tau=float(t), r=R_SHARP))
            for t in taus]
    assert np.all(np.diff(vals) < 0.0)


def test_tau_zero_reference():
    assert nf.tau_zero(RateSpec(theta=0.1, tau=0.0, r=R_SHARP)) == \
        pytest.approx(0.8, abs=1e-10)


def test_tau_zero_quarter_threshold():
    assert nf.tau_zero(RateSpec(theta=0.25, tau=0.0, r=R_SHARP)) == \
        pytest.approx(0.5, abs=1e-10)


def test_tau_zero_fallback_when_no_root():
    # synthetic positive Lambda: no zero, so the upper endpoint is returned
    val = _tau_zero_from_lambda(lambda tau: 0.25 + 0.1 * tau, theta=0.2)
    assert val == pytest.approx(0.8, abs=1e-14)


def test_wave_formula_identity_small(rate52):
    assert abs(nf.wave_formula_identity(rate52)) < 1e-8
    other = RateSpec(theta=0.2, tau=0.3, r=R_SHARP)
    assert abs(nf.wave_formula_identity(other)) < 1e-8


# ---------------------------------------------------------------------------
# discretization
# ---------------------------------------------------------------------------

def test_discretize_collapse_single_step(rate30):
    d = nf.discretize(rate30, 1)
    assert np.allclose(d.deltas, [0.0, rate30.tau])
    assert np.allclose(d.alphas, [1.0, 0.0])


def test_discretize_reference(rate52):
    d = nf.discretize(rate52, 20)
    assert d.alphas.sum() == 1.0
    assert np.all(d.alphas >= 0.0)
    assert d.alphas[-1] == 0.0
    # right-endpoint rule
    svals = nf.eval_rate(rate52, d.deltas)
    assert np.allclose(d.alphas[:-1], np.diff(svals), atol=1e-13)


def test_discretize_requires_band():
    with pytest.raises(NFWavesError):
        nf.discretize(RateSpec(theta=THETA, tau=0.0), 4)
    with pytest.raises(NFWavesError):
        nf.discretize(RateSpec(theta=THETA, tau=0.3), 0)


def test_step_sum_is_monotone_partial_sums(rate52):
    d = nf.discretize(rate52, 20)
    w = np.linspace(-0.2, 0.8, 5001)
    vals = d.eval_step(w)
    assert np.all(np.diff(vals) >= 0.0)
    partials = np.concatenate([[0.0], np.cumsum(d.alphas)])
    assert np.all(np.isin(np.round(vals, 14), np.round(partials, 14)))


def test_step_sum_l1_error_decreases(rate52):
    w = np.linspace(-0.1, rate52.tau + 0.1, 40_001)
    smooth = nf.eval_rate(rate52, w)
    errs = []
    for n in (5, 10, 20, 40):
        d = nf.discretize(rate52, n)
        errs.append(np.trapezoid(np.abs(d.eval_step(w) - smooth), w))
    assert np.all(np.diff(errs) < 0.0)


def test_reflected_weights_mirror_the_rate(rate52):
    d = nf.discretize(rate52, 20)
    refl = d.reflected()
    w = np.linspace(-0.1, rate52.tau + 0.1, 1001)
    lhs = refl.eval_step(0.5 * rate52.tau + w)
    rhs = 1.0 - d.eval_step(0.5 * rate52.tau - w)
    # mirrored steps agree except exactly on the jump set
    mism = np.abs(lhs - rhs) > 1e-12
    assert np.mean(mism) < 0.01


def test_heaviside_discretization():
    d = heaviside_discretization()
    assert d.N == 0 and d.alphas[0] == 1.0
    assert d.eval_step(0.5) == 1.0 and d.eval_step(0.0) == 0.0


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------

def test_fixed_points_reference(rate52):
    fp = nf.find_fixed_points(rate52)
    assert fp.low == 0.0 and fp.high == 1.0
    assert THETA < fp.mid < THETA + rate52.tau
    resid = fp.mid - nf.eval_rate(rate52, fp.mid - THETA)
    assert abs(resid) < 1e-12
    # outer states are exact roots
    assert nf.eval_rate(rate52, 0.0 - THETA) == 0.0
    assert nf.eval_rate(rate52, 1.0 - THETA) == 1.0


def test_fixed_points_not_bistable():
    with pytest.raises(NFWavesError):
        nf.find_fixed_points(RateSpec(theta=0.45, tau=0.6, r=R_SHARP))
