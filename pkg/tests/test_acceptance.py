"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The Monte Carlo criteria run at full size (M=200, T=2000) and take several
minutes in total; they are marked ``slow`` but are part of the default run.
"""

import time

import mpmath
import numpy as np
import pytest
from scipy.stats import norm

from clusterlp.cli import main
from clusterlp.clustering import kmeans_fit
from clusterlp.data import EstimationConfig
from clusterlp.lp import build_system, estimate_clustered_lp, lagged_drivers, linear_lp, shock_weight_curve, window_rows
from clusterlp.simulation import ExperimentConfig, MonteCarloResult, car_agreement, compute_car, run_montecarlo
from clusterlp.statcore import chi2_quantile, newey_west

from conftest import random_panel

MC_M = 200
MC_T = 2000
CAR_REPLICATIONS = 50
CAR_PATHS = 1000


def ols_lp(panel, cfg, rows):
    """Per-horizon OLS of ``y_{t+h}`` on shock, intercept, lagged controls and own lags."""
    cols = [panel.shock[rows], np.ones(len(rows))]
    for j in range(1, cfg.control_lags + 1):
        cols += [panel.controls[rows - j, i] for i in range(panel.m)]
    cols += [panel.y[rows - j] for j in range(1, cfg.own_lags + 1)]
    X = np.column_stack(cols)
    return np.array([np.linalg.lstsq(X, panel.y[rows + h], rcond=None)[0][0] for h in range(cfg.H + 1)])


@pytest.fixture(scope="session")
def mc_runs():
    cache = {}

    def get(dgp, T=MC_T, H_tilde=5):
        key = (dgp, T, H_tilde)
        if key not in cache:
            cache[key] = run_montecarlo(ExperimentConfig(dgp=dgp, T=T, M=MC_M, K_max=10, H_tilde=H_tilde, alpha=0.05))
        return cache[key]

    return get


def freq_text(res: MonteCarloResult) -> str:
    f = res.k_frequency()
    shown = ", ".join(f"K={K}:{f[K]:.3f}" for K in f if f[K] > 0)
    return f"modal K={res.modal_k()} [{shown}] failures={len(res.failures)} {res.seconds:.0f}s"


def test_criterion_01_linear_equivalence(criterion):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for i in range(20):
        cfg = EstimationConfig(H=8, H_tilde=4, control_lags=int(i % 3), own_lags=int(1 + i % 2))
        p = random_panel(rng, T=int(rng.integers(150, 400)), m=int(1 + i % 3))
        irf = linear_lp(p, cfg)
        worst = max(worst, np.abs(irf.beta[0] - ols_lp(p, cfg, window_rows(p.T, cfg))).max())
    secs = time.perf_counter() - start
    ok = worst <= 1e-10 and secs < 5
    criterion(1, ok, f"max |diff|={worst:.2e} (<=1e-10), runtime {secs:.2f}s (<5s)")
    assert ok


def test_criterion_02_subsample_ols(criterion):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    worst = 0.0
    for i in range(20):
        K = 2 + i % 3
        cfg = EstimationConfig(H=8, H_tilde=4, control_lags=1, own_lags=1)
        p = random_panel(rng, T=int(rng.integers(300, 500)), m=2, d=1 + i % 2)
        Z = lagged_drivers(p, cfg)
        a = kmeans_fit(Z, K, seed=i)
        irf = estimate_clustered_lp(build_system(p, a, cfg), 0)
        rows = window_rows(p.T, cfg)
        for k in range(1, K + 1):
            worst = max(worst, np.abs(irf.beta[k - 1] - ols_lp(p, cfg, rows[a.labels == k])).max())
    secs = time.perf_counter() - start
    ok = worst <= 1e-8 and secs < 10
    criterion(2, ok, f"max |diff|={worst:.2e} (<=1e-8), runtime {secs:.2f}s (<10s)")
    assert ok


@pytest.mark.slow
def test_criterion_03_univariate_threshold(criterion, mc_runs):
    res = mc_runs("univariate_threshold")
    f4 = res.k_frequency()[4]
    ok = f4 >= 0.75 and res.seconds <= 1800
    criterion(3, ok, f"freq(K=4)={f4:.3f} (>=0.75); {freq_text(res)}")
    assert ok


@pytest.mark.slow
def test_criterion_04_absolute_value(criterion, mc_runs):
    res = mc_runs("absolute_value")
    f = res.k_frequency()
    band = f[2] + f[3] + f[4]
    ok = res.modal_k() == 3 and band >= 0.90 and res.seconds <= 1800
    criterion(4, ok, f"modal K={res.modal_k()} (want 3), freq(K in 2..4)={band:.3f} (>=0.90); {freq_text(res)}")
    assert ok


@pytest.mark.slow
def test_criterion_05_bivariate_threshold(criterion, mc_runs):
    res = mc_runs("bivariate_threshold")
    ok = res.modal_k() == 4
    criterion(5, ok, f"modal K={res.modal_k()} (want 4); {freq_text(res)}")
    assert ok


@pytest.mark.slow
def test_criterion_06_car_recovery(criterion, mc_runs):
    rates, cells_all = {}, []
    for dgp in ("univariate_threshold", "absolute_value", "bivariate_threshold"):
        res = mc_runs(dgp)
        reps = res.ok[:CAR_REPLICATIONS]
        tables = compute_car(res.config.spec(), [r.rule for r in reps], H=res.config.H, M=CAR_PATHS, T=MC_T, strict=False)
        sub = MonteCarloResult(config=res.config, replications=reps)
        sub.car = {r.rep: t for r, t in zip(reps, tables) if t is not None}
        cells = car_agreement(sub, horizons=range(6))
        # a replication whose clusters the oracle cannot populate counts as failed cells
        missing = sum(r.K_hat * 6 for r, t in zip(reps, tables) if t is None)
        cells = np.concatenate([cells, np.zeros(missing, dtype=bool)])
        rates[dgp] = cells.mean()
        cells_all.append(cells)
    pooled = np.concatenate(cells_all).mean()
    ok = all(r >= 0.90 for r in rates.values())
    detail = ", ".join(f"{d}={r:.3f}" for d, r in rates.items())
    criterion(6, ok, f"cell pass rate per DGP (>=0.90): {detail}; pooled {pooled:.3f}")
    assert ok


@pytest.mark.slow
def test_criterion_07_size_control(criterion, mc_runs):
    res = mc_runs("constant")
    over = sum(v for K, v in res.k_frequency().items() if K > 1)
    ok = over <= 0.10
    criterion(7, ok, f"freq(K>1)={over:.3f} (<=0.10); {freq_text(res)}")
    assert ok


@pytest.mark.slow
def test_criterion_08_small_sample_conservatism(criterion, mc_runs):
    abs_500, abs_2000 = mc_runs("absolute_value", T=500), mc_runs("absolute_value")
    uni_h0, uni_h5 = mc_runs("univariate_threshold", T=500, H_tilde=0), mc_runs("univariate_threshold", T=500, H_tilde=5)
    part1 = abs_500.modal_k() <= abs_2000.modal_k()
    f0, f5 = uni_h0.k_frequency()[4], uni_h5.k_frequency()[4]
    part2 = f0 >= f5
    ok = part1 and part2
    criterion(
        8,
        ok,
        f"abs-value modal K T=500:{abs_500.modal_k()} <= T=2000:{abs_2000.modal_k()} ({part1}); "
        f"univariate T=500 freq(K=4) H_tilde=0:{f0:.3f} >= H_tilde=5:{f5:.3f} ({part2})",
    )
    assert ok


def test_criterion_09_weight_function(criterion):
    rng = np.random.default_rng(909)
    eps = rng.standard_normal(1_000_000)
    grid = np.linspace(-5, 5, 1001)
    c = shock_weight_curve(eps, grid)
    dev = np.abs(c.weights - norm.pdf(grid)).max()
    ok = dev < 0.01 and 0.98 <= c.integral <= 1.02 and abs(c.peak - c.shock_mean) <= 0.1
    criterion(9, ok, f"max|w-phi|={dev:.4f} (<0.01), integral={c.integral:.4f} ([0.98,1.02]), "
              f"peak={c.peak:.3f} vs mean {c.shock_mean:.4f} (within 0.1)")
    assert ok


def _mp_chi2_quantile(p, df):
    mpmath.mp.dps = 30
    f = lambda x: mpmath.gammainc(mpmath.mpf(df) / 2, 0, x / 2, regularized=True) - p  # noqa: E731
    return float(mpmath.findroot(f, (mpmath.mpf("1e-12"), mpmath.mpf(200)), solver="bisect"))


CLI_RUNS = [
    ["estimate", "--example", "--H", "8", "--K-max", "6"],
    ["state-dependent", "--example", "--H", "8", "--state-col", "mpu"],
    ["simulate", "--dgp", "bivariate_threshold", "--T", "300", "--seed", "5"],
    ["car", "--dgp", "absolute_value", "--M", "100", "--T", "300", "--H", "4"],
    ["montecarlo", "--dgp", "univariate_threshold", "--M", "3", "--T", "400", "--H", "4", "--H-tilde", "2", "--K-max", "4", "--car-reps", "100"],
]


def test_criterion_10_numerics_and_determinism(criterion, tmp_path, capsys):
    chi_err = max(
        abs(chi2_quantile(p, df) - _mp_chi2_quantile(p, df)) for p in (0.5, 0.9, 0.95, 0.99) for df in range(1, 21)
    )
    rng = np.random.default_rng(1010)
    g = rng.standard_normal((400, 7))
    nw_exact = np.array_equal(newey_west(g, 0), g.T @ g / len(g))
    identical = True
    for i, argv in enumerate(CLI_RUNS):
        outs = []
        for run in ("a", "b"):
            d = tmp_path / f"{i}{run}"
            assert main(argv + ["--out", str(d)]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "timing.json"})
        identical &= bool(outs[0]) and outs[0] == outs[1]
    capsys.readouterr()
    ok = chi_err <= 1e-6 and nw_exact and identical
    criterion(10, ok, f"chi2 max err={chi_err:.1e} (<=1e-6), NW L=0 exact={nw_exact}, "
              f"byte-identical reruns of {len(CLI_RUNS)} subcommands={identical}")
    assert ok
