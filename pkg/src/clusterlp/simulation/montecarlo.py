"""Monte Carlo experiments: simulate, select clusters, compare with the CAR oracle.

Replication ``r`` draws its path from stream ``(r,)`` and its k-means restarts
from ``(r, K, restart)``, so results do not depend on how replications are
distributed over worker processes.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from ..clustering import ClusterRule
from ..data import EstimationConfig
from ..errors import ClusterLPError, ConfigError
from ..selection import select_clusters
from .car import CarTable, compute_car
from .dgp import BURN_IN, make_dgp, path_to_panel, simulate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one Monte Carlo experiment.

    ``car_reps = 0`` skips the CAR overlay. ``dgp_params`` overrides fields of
    the named DGP spec.
    """

    dgp: str = "univariate_threshold"
    T: int = 2000
    M: int = 200
    K_max: int = 10
    H: int = 10
    H_tilde: int = 5
    alpha: float = 0.05
    seed: int = 0
    bandwidth: int | str | None = None
    own_lags: int = 2
    control_lags: int = 0
    kmeans_restarts: int = 10
    car_reps: int = 0
    car_delta: float = 1.0
    jobs: int = 1
    burn_in: int = BURN_IN
    dgp_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.M < 1 or self.T < 1:
            raise ConfigError("M and T must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if self.car_reps < 0:
            raise ConfigError("car_reps must be nonnegative")
        self.estimation_config()  # validates the remaining fields

    def estimation_config(self) -> EstimationConfig:
        return EstimationConfig(
            H=self.H,
            H_tilde=self.H_tilde,
            K_max=self.K_max,
            alpha=self.alpha,
            control_lags=self.control_lags,
            own_lags=self.own_lags,
            hac_bandwidth=self.bandwidth,
            seed=self.seed,
            kmeans_restarts=self.kmeans_restarts,
            car_delta=self.car_delta,
        )

    def spec(self):
        return make_dgp(self.dgp, **self.dgp_params)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown experiment settings: {unknown}")
        return cls(**d)

    def numeric_settings(self) -> dict:
        """Settings that determine the numbers (``jobs`` excluded)."""
        d = dataclasses.asdict(self)
        d.pop("jobs")
        return d


@dataclass
class Replication:
    rep: int
    K_hat: int | None
    beta: np.ndarray | None = None
    stderr: np.ndarray | None = None
    cluster_sizes: list[int] | None = None
    rule: ClusterRule | None = None
    error: str | None = None


@dataclass
class MonteCarloResult:
    config: ExperimentConfig
    replications: list[Replication]
    car: dict[int, CarTable] = field(default_factory=dict)  # keyed by rep
    seconds: float = 0.0

    @property
    def ok(self) -> list[Replication]:
        return [r for r in self.replications if r.error is None]

    @property
    def failures(self) -> list[Replication]:
        return [r for r in self.replications if r.error is not None]

    def k_counts(self) -> dict[int, int]:
        c = Counter(r.K_hat for r in self.ok)
        return {K: c.get(K, 0) for K in range(1, self.config.K_max + 1)}

    def k_frequency(self) -> dict[int, float]:
        n = len(self.ok)
        return {K: (c / n if n else float("nan")) for K, c in self.k_counts().items()}

    def modal_k(self) -> int | None:
        counts = self.k_counts()
        if not self.ok:
            return None
        # ties resolved toward the smaller K
        return max(counts, key=lambda K: (counts[K], -K))


def _replicate(args) -> Replication:
    exp, r = args
    try:
        path = simulate(exp.spec(), exp.T, exp.seed, burn_in=exp.burn_in, stream=(r,))
        report = select_clusters(path_to_panel(path), exp.estimation_config(), stream=(r,))
    except ClusterLPError as e:
        log.warning("replication %d failed: %s: %s", r, type(e).__name__, e)
        return Replication(rep=r, K_hat=None, error=f"{type(e).__name__}: {e}")
    return Replication(
        rep=r,
        K_hat=report.K_hat,
        beta=report.irf.beta,
        stderr=report.irf.stderr,
        cluster_sizes=report.irf.cluster_sizes.tolist(),
        rule=report.rule,
    )


def run_montecarlo(exp: ExperimentConfig) -> MonteCarloResult:
    """Run ``exp.M`` replications (in ``exp.jobs`` processes) and the optional CAR overlay."""
    start = time.perf_counter()
    tasks = [(exp, r) for r in range(exp.M)]
    if exp.jobs > 1:
        with Pool(processes=exp.jobs) as pool:
            reps = pool.map(_replicate, tasks, chunksize=max(1, exp.M // (4 * exp.jobs)))
    else:
        reps = [_replicate(t) for t in tasks]
    result = MonteCarloResult(config=exp, replications=reps)
    if exp.car_reps and result.ok:
        tables = compute_car(
            exp.spec(),
            [r.rule for r in result.ok],
            delta=exp.car_delta,
            H=exp.H,
            M=exp.car_reps,
            T=exp.T,
            seed=exp.seed,
            burn_in=exp.burn_in,
            strict=False,
        )
        result.car = {r.rep: tab for r, tab in zip(result.ok, tables) if tab is not None}
        for r, tab in zip(result.ok, tables):
            if tab is None:
                log.warning("replication %d: a cluster received no simulated dates in the CAR oracle", r.rep)
    result.seconds = time.perf_counter() - start
    log.info("%d replications (%d failed) in %.1fs", exp.M, len(result.failures), result.seconds)
    return result


def car_agreement(result: MonteCarloResult, horizons=range(6)) -> np.ndarray:
    """Boolean per (replication, cluster, h) cell: ``|beta - CAR| <= 2 (se_beta + se_CAR)``.

    Horizons beyond ``H`` are ignored. Cells with a non-finite estimate count as failures.
    """
    cells = []
    hs = [h for h in horizons if h <= result.config.H]
    for r in result.ok:
        tab = result.car.get(r.rep)
        if tab is None:
            continue
        gap = np.abs(r.beta[:, hs] - tab.car[:, hs])
        bound = 2.0 * (r.stderr[:, hs] + tab.stderr[:, hs])
        ok = np.isfinite(gap) & np.isfinite(bound) & (gap <= bound)
        cells.append(ok.ravel())
    return np.concatenate(cells) if cells else np.zeros(0, dtype=bool)


def mean_curves_at(result: MonteCarloResult, K: int) -> dict:
    """Average clustered-LP and CAR curves over replications that selected ``K``."""
    sel = [r for r in result.ok if r.K_hat == K]
    if not sel:
        return {}
    out = {"K": K, "n_reps": len(sel), "beta": np.mean([r.beta for r in sel], axis=0)}
    if result.car:
        out["car"] = np.mean([result.car[r.rep].car for r in sel if r.rep in result.car], axis=0)
    return out


def write_outputs(result: MonteCarloResult, out_dir) -> Path:
    """Write ``k_frequency.csv``, ``irf_by_cluster.csv``, ``car_by_cluster.csv``, ``report.json`` and ``timing.json``."""
    from ..export import csv_text, dump_json, write_text

    exp = result.config
    out = Path(out_dir)
    meta = {"seed": exp.seed, "config": exp.numeric_settings()}
    counts, freq = result.k_counts(), result.k_frequency()
    write_text(out / "k_frequency.csv", csv_text(["K", "count", "frequency"], [(K, counts[K], freq[K]) for K in counts], **meta))
    irf_rows = [
        (r.rep, r.K_hat, k + 1, h, r.beta[k, h], r.stderr[k, h])
        for r in result.ok
        for k in range(r.K_hat)
        for h in range(exp.H + 1)
    ]
    write_text(out / "irf_by_cluster.csv", csv_text(["rep", "K_hat", "cluster", "h", "beta", "stderr"], irf_rows, **meta))
    car_rows = [
        (rep, k + 1, h, tab.car[k, h], tab.stderr[k, h], int(tab.counts[k]))
        for rep, tab in sorted(result.car.items())
        for k in range(tab.K)
        for h in range(tab.H + 1)
    ]
    write_text(out / "car_by_cluster.csv", csv_text(["rep", "cluster", "h", "car", "car_stderr", "n_dates"], car_rows, **meta))
    modal = result.modal_k()
    report = {
        "config": exp.numeric_settings(),
        "replications": exp.M,
        "succeeded": len(result.ok),
        "failed": len(result.failures),
        "failures": [{"rep": r.rep, "error": r.error} for r in result.failures],
        "k_frequency": {str(K): f for K, f in freq.items()},
        "modal_K": modal,
        "mean_curves_at_modal_K": mean_curves_at(result, modal) if modal else {},
    }
    if result.car:
        cells = car_agreement(result)
        report["car_agreement_rate"] = float(cells.mean()) if cells.size else None
        report["car_missing"] = [r.rep for r in result.ok if r.rep not in result.car]
    write_text(out / "report.json", dump_json(report))
    write_text(out / "timing.json", dump_json({"seconds": result.seconds, "jobs": exp.jobs}))
    return out
