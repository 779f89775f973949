import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterlp.errors import ConfigError, ExplodedPath, NonStationarySpec
from clusterlp.simulation import (
    AbsValDGPSpec,
    ArmaSpec,
    BivariateThresholdDGPSpec,
    ThresholdDGPSpec,
    logistic_weights,
    make_dgp,
    path_to_panel,
    simulate,
    simulate_arma,
)
from clusterlp.statcore import rng_stream

CENTERS = (-4.3359, -0.5981, 3.5717)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50))
def test_logistic_weights_partition_unity(z):
    xi = logistic_weights(z, CENTERS, 5.0)
    assert xi.shape == (4,)
    assert abs(xi.sum() - 1.0) < 1e-14
    assert (xi >= 0).all() and (xi <= 1).all()


def test_logistic_weights_limits_and_midpoint():
    np.testing.assert_allclose(logistic_weights(-1e3, CENTERS, 5.0), [1, 0, 0, 0])
    np.testing.assert_allclose(logistic_weights(1e3, CENTERS, 5.0), [0, 0, 0, 1])
    xi = logistic_weights(CENTERS[0], CENTERS, 5.0)
    assert 1 - xi[0] == pytest.approx(0.5, abs=1e-12)


def test_logistic_weights_at_zero_direct_formula():
    G = 1 / (1 + np.exp(-5.0 * (0.0 - np.array(CENTERS))))
    expected = [1 - G[0], G[0] - G[1], G[1] - G[2], G[2]]
    xi = logistic_weights(0.0, CENTERS, 5.0)
    np.testing.assert_allclose(xi, expected, rtol=0, atol=1e-15)
    assert abs(xi.sum() - 1) < 1e-15


def test_white_noise_arma():
    z = simulate_arma(ArmaSpec(sigma=2.0), 200_000, np.random.default_rng(0))
    assert z.std() == pytest.approx(2.0, rel=0.01)


def test_ar1_autocorrelation():
    z = simulate_arma(ArmaSpec(ar=(0.9,)), 100_000, np.random.default_rng(1))[1000:]
    r1 = np.corrcoef(z[1:], z[:-1])[0, 1]
    assert abs(r1 - 0.9) < 0.02


def test_arma_replay():
    spec = ArmaSpec(ar=(0.6, 0.3), ma=(0.8,))
    a = simulate_arma(spec, 50, rng_stream(3, 1))
    assert np.array_equal(a, simulate_arma(spec, 50, rng_stream(3, 1)))


def test_nonstationary_specs_rejected():
    with pytest.raises(NonStationarySpec):
        ArmaSpec(ar=(0.7, 0.3))
    with pytest.raises(NonStationarySpec):
        ThresholdDGPSpec(psi=np.array([[0, 0, 0, 0], [1.2, 0, 0, 0], [0.1, 0, 0, 0]]))
    with pytest.raises(ConfigError):
        ThresholdDGPSpec(psi=np.zeros((3, 3)))


def test_driver_quartiles_match_centers():
    spec = ThresholdDGPSpec()
    sd = spec.arma.unconditional_sd()
    pop = np.array([-1, 0, 1]) * 0.6744897501960817 * sd
    z = simulate_arma(spec.arma, 1_010_000, rng_stream(0, 8))[10_000:]
    np.testing.assert_allclose(np.percentile(z, [25, 50, 75]), pop, atol=0.3)
    # the published centers are consistent with the quartiles of one T=2000 sample
    paths = simulate_arma(spec.arma, 12_000, rng_stream(0, 9), n_paths=400)[:, 10_000:]
    q = np.percentile(paths, [25, 50, 75], axis=1).T
    lo, hi = np.percentile(q, [2.5, 97.5], axis=0)
    assert ((lo <= CENTERS) & (CENTERS <= hi)).all()


def test_hard_threshold_limit():
    spec = ThresholdDGPSpec(lam=1e6)
    path = simulate(spec, 3000, seed=5)
    far = np.abs(path.z[:-1, 0, None] - np.array(CENTERS)).min(axis=1) > 0.5
    regime = np.searchsorted(CENTERS, path.z[:-1, 0])
    beta_k = spec.psi[0, regime]
    dev = np.abs(path.beta[1:] - beta_k)[far]
    assert dev.max() < 5 * np.sqrt(spec.sigma_eta2)


def test_simulate_shapes_and_replay():
    spec = make_dgp("univariate_threshold")
    a = simulate(spec, 500, seed=3, burn_in=1000)
    b = simulate(spec, 500, seed=3, burn_in=1000)
    assert a.y.shape == a.x.shape == a.beta.shape == (500,) and a.z.shape == (500, 1)
    assert np.array_equal(a.y, b.y)
    assert not np.array_equal(a.y, simulate(spec, 500, seed=4, burn_in=1000).y)


def test_outcome_equation_holds():
    p = simulate(make_dgp("univariate_threshold"), 300, seed=2, burn_in=500)
    y2 = np.r_[p.y_pre, p.y]
    rec = p.beta * p.x + p.gamma1 * y2[1:-1] + p.gamma2 * y2[:-2] + p.ey
    np.testing.assert_allclose(rec, p.y, atol=1e-12)


def test_parameters_follow_lagged_driver():
    spec = make_dgp("univariate_threshold", sigma_eta2=0.0)
    p = simulate(spec, 200, seed=1, burn_in=300)
    zlag = np.r_[p.z_pre, p.z[:-1, 0]]
    np.testing.assert_allclose(p.beta, spec.weights(zlag) @ spec.psi[0], atol=1e-12)


def test_split_sample_stationarity():
    p = simulate(make_dgp("univariate_threshold"), 200_000, seed=11)
    a, b = p.y[:100_000], p.y[100_000:]
    assert abs(a.var() / b.var() - 1) < 0.05
    assert abs(a.mean() - b.mean()) < 0.05 * np.sqrt(a.var())


def test_exploded_path_guard():
    spec = ThresholdDGPSpec(psi=np.array([[0.5] * 4, [0.95] * 4, [0.0] * 4]), sigma_eta2=0.5)
    with pytest.raises(ExplodedPath):
        simulate(spec, 2000, seed=0)


def test_absval_intercept_and_slope():
    spec = AbsValDGPSpec(arma=ArmaSpec(ar=(0.6, 0.3), ma=(0.8, 0.7, 0.2), sigma=0.003, mean=0.0))
    p = simulate(spec, 5000, seed=0)
    assert p.beta.mean() == pytest.approx(-0.4, abs=0.01)
    wide = AbsValDGPSpec(arma=ArmaSpec(ar=(0.6, 0.3), ma=(0.8, 0.7, 0.2), sigma=0.03, mean=1.0))
    q = simulate(wide, 50_000, seed=1)
    absz = np.abs(np.r_[q.z_pre, q.z[:-1, 0]])
    assert np.polyfit(absz, q.beta, 1)[0] == pytest.approx(0.7, abs=0.05)


def test_absval_printed_calibration_is_nearly_flat():
    # sigma_z = 0.003 around mean 1: |z| barely moves, beta dispersion is mostly noise
    p = simulate(make_dgp("absolute_value"), 20_000, seed=0)
    assert abs(p.z.std() - AbsValDGPSpec().arma.unconditional_sd()) < 0.003
    assert p.beta.std() < 0.04


def test_bivariate_weights_and_occupancy():
    spec = BivariateThresholdDGPSpec()
    w = spec.weights(np.random.default_rng(0).standard_normal((100, 2)) * 3)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-14)
    p = simulate(spec, 40_000, seed=4)
    quad = 2 * (p.z[:, 0] > 0) + (p.z[:, 1] > 0)
    occ = np.bincount(quad, minlength=4) / len(quad)
    # Gaussian orthant probabilities: same-sign quadrants get 1/4 + arcsin(rho) / (2 pi)
    C = spec.varma.unconditional_cov()
    tilt = np.arcsin(C[0, 1] / np.sqrt(C[0, 0] * C[1, 1])) / (2 * np.pi)
    np.testing.assert_allclose(occ, [0.25 + tilt, 0.25 - tilt, 0.25 - tilt, 0.25 + tilt], atol=0.03)


def test_bivariate_replay():
    spec = BivariateThresholdDGPSpec()
    assert np.array_equal(simulate(spec, 100, seed=1, burn_in=200).y, simulate(spec, 100, seed=1, burn_in=200).y)


def test_path_to_panel():
    p = simulate(make_dgp("bivariate_threshold"), 100, seed=0, burn_in=100)
    panel = path_to_panel(p)
    assert panel.d == 2 and panel.m == 0 and panel.driver_names == ("z1", "z2")
    assert np.array_equal(panel.shock, p.x)


def test_unknown_dgp():
    with pytest.raises(KeyError):
        make_dgp("nope")
