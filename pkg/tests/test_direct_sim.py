"""Time stepper, speed regression, stability probe."""

import numpy as np
import pytest

import nfwaves as nf
from nfwaves.direct_sim import (SimConfig, classify_final_state,
                                initial_state, measure_speed,
                                measured_wave_speed, profile_on_grid, run,
                                stability_probe, step, threshold_crossing)
from nfwaves.errors import NFWavesError, NonFiniteError, PoorFitError

from conftest import N_BAND, THETA


@pytest.fixture(scope="module")
def cfg30(k5, front30):
    return SimConfig(kernel=k5, rate=front30.disc, theta=THETA, L=30.0,
                     n=1024, dt=0.2, T=50.0)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def test_rest_state_is_invariant(cfg30):
    st = step(initial_state(cfg30, np.zeros(cfg30.n)), cfg30)
    assert np.max(np.abs(st.u)) == 0.0


def test_excited_state_nearly_invariant(cfg30):
    # drift bounded by the trapezoid kernel-mass defect (O(dx^2))
    st = step(initial_state(cfg30, np.ones(cfg30.n)), cfg30)
    assert np.max(np.abs(st.u - 1.0)) < 1e-3


def test_config_validation(k5, front30):
    with pytest.raises(NFWavesError):
        SimConfig(kernel=k5, rate=front30.disc, theta=THETA, L=30.0, n=1024,
                  dt=0.3, T=10.0)
    with pytest.raises(NFWavesError):
        SimConfig(kernel=k5, rate=front30.disc, theta=THETA, L=30.0, n=128,
                  dt=0.2, T=10.0)   # dx too coarse
    with pytest.raises(NFWavesError):
        SimConfig(kernel=k5, rate=front30.disc, theta=THETA, L=30.0, n=1024,
                  dt=0.2, T=10.0, boundary="reflect")


def test_non_finite_detection(cfg30):
    bad = initial_state(cfg30, np.zeros(cfg30.n))
    bad.u[0] = np.inf
    with pytest.raises(NonFiniteError):
        step(bad, cfg30)


def test_bound_preservation(cfg30, k5):
    box = k5.l1_norm
    rng = np.random.default_rng(11)
    st = initial_state(cfg30, rng.uniform(-box, 1.0 + box, cfg30.n))
    lo, hi = -2.0 * box, 1.0 + 2.0 * box
    for _ in range(200):
        st = step(st, cfg30)
        assert st.u.min() >= lo and st.u.max() <= hi


def test_dt_halving_consistency(k5, front30, rate30):
    # smooth rate: the right side is smooth in u, so the fourth-order step
    # dominates (threshold-sum rates jump along trajectories and degrade the
    # order at crossing times)
    final = {}
    for dt in (0.2, 0.1, 0.05):
        cfg = SimConfig(kernel=k5, rate=rate30, theta=THETA, L=30.0,
                        n=1024, dt=dt, T=50.0)
        u0, q0 = profile_on_grid(cfg, front30)
        final[dt] = run(cfg, u0, q0).final.u
    diff_coarse = np.max(np.abs(final[0.2] - final[0.1]))
    diff_fine = np.max(np.abs(final[0.1] - final[0.05]))
    assert diff_fine < 1e-5
    assert 8.0 < diff_coarse / diff_fine < 32.0   # ~2^4 per halving


def test_periodic_boundary_runs(k5, front30):
    cfg = SimConfig(kernel=k5, rate=front30.disc, theta=THETA, L=30.0,
                    n=1024, dt=0.2, T=2.0, boundary="periodic")
    st = initial_state(cfg, 0.5 + 0.1 * np.sin(np.pi * cfg.x / cfg.L))
    out = step(st, cfg)
    assert np.all(np.isfinite(out.u))


# ---------------------------------------------------------------------------
# speed measurement
# ---------------------------------------------------------------------------

def test_measure_speed_exact_line():
    t = np.linspace(0.0, 10.0, 60)
    est = measure_speed(t, -0.37 * t + 2.0)
    assert est.speed == pytest.approx(-0.37, abs=1e-12)
    assert est.r_squared == pytest.approx(1.0, abs=1e-12)


def test_measure_speed_stationary():
    t = np.linspace(0.0, 10.0, 60)
    est = measure_speed(t, np.full_like(t, 1.234))
    assert est.speed == pytest.approx(0.0, abs=1e-12)


def test_measure_speed_rejects_noise():
    rng = np.random.default_rng(0)
    t = np.linspace(0.0, 10.0, 60)
    with pytest.raises(PoorFitError):
        measure_speed(t, rng.standard_normal(60))


def test_measure_speed_needs_enough_samples():
    with pytest.raises(PoorFitError):
        measure_speed(np.arange(5.0), np.arange(5.0))


def test_front_speed_cross_check_coarse(cfg30, front30):
    est = measured_wave_speed(cfg30, front30)
    assert est.r_squared > 0.999
    assert abs(abs(est.speed) - front30.mu) / front30.mu < 0.02


def test_speed_independent_oracle_smooth_rate(k5, front30, rate30):
    """The smooth-rate system travels at the band-free speed: the measured
    gap to the band solver's mu is the genuine order-1/N approximation
    error, well above the grid error."""
    cfg = SimConfig(kernel=k5, rate=rate30, theta=THETA, L=30.0, n=1024,
                    dt=0.2, T=50.0)
    est = measured_wave_speed(cfg, front30)
    gap = abs(abs(est.speed) - front30.mu) / front30.mu
    assert 0.005 < gap < 0.1


def test_threshold_crossing_interpolation(cfg30):
    u = np.where(cfg30.x > 1.23, 1.0, 0.0)
    pos = threshold_crossing(cfg30, u)
    assert pos == pytest.approx(1.23, abs=cfg30.dx)


# ---------------------------------------------------------------------------
# stability probe
# ---------------------------------------------------------------------------

def test_probe_zero_amplitude_trivial(cfg30, front30):
    assert stability_probe(cfg30, front30, 0.0)


def test_probe_amplitude_cap(cfg30, front30):
    with pytest.raises(NFWavesError):
        stability_probe(cfg30, front30, 0.2)


def test_probe_reference_front(k5, front30):
    cfg = SimConfig(kernel=k5, rate=front30.disc, theta=THETA, L=40.0,
                    n=1600, dt=0.2, T=30.0)
    assert stability_probe(cfg, front30, 0.02)


def test_flipped_front_classified(k5, front30):
    cfg = SimConfig(kernel=k5, rate=front30.disc, theta=THETA, L=30.0,
                    n=1024, dt=0.2, T=40.0)
    u0, _ = profile_on_grid(cfg, front30)
    res = run(cfg, -u0)
    label = classify_final_state(cfg, front30, res.final.u)
    assert label in ("constant", "front-translate", "other")
    # the flipped profile fires where the undershoot dipped below -theta and
    # ignites an expanding excited region (two counter-running interfaces)
    assert label == "other"
    d = np.sign(res.final.u - THETA)
    d = d[d != 0.0]
    assert int(np.sum(np.abs(np.diff(d)) > 0)) == 2
