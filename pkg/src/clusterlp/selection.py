"""Pairwise Wald tests on impulse-response differences and the cluster-reduction loop."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterAssignment, ClusterRule, assignment_from_labels, kmeans_fit
from .data import EstimationConfig, TimeSeriesPanel, standardize_drivers
from .errors import AllCellsFlagged, InvalidPair
from .lp import IRFPanel, build_system, estimate_clustered_lp, lagged_drivers
from .statcore import HACOptions, chi2_quantile, chi2_sf, pinv_solve

log = logging.getLogger(__name__)

SINGULAR_RCOND = 1e-12


@dataclass(frozen=True)
class WaldResult:
    pair: tuple[int, int]
    statistic: float
    df: int
    p_value: float
    adjusted_alpha: float
    critical_value: float
    reject: bool
    rank_deficient: bool = False
    excluded_cells: int = 0


@dataclass
class SelectionIteration:
    K: int
    cluster_sizes: list[int]
    centroids: list[list[float]]
    valid: bool
    tests: list[WaldResult] = field(default_factory=list)
    decision: str = ""


@dataclass
class SelectionReport:
    iterations: list[SelectionIteration]
    K_hat: int
    irf: IRFPanel
    assignment: ClusterAssignment
    rule: ClusterRule
    config: EstimationConfig


def bonferroni_alpha(alpha: float, K: int) -> float:
    """Per-pair level ``alpha / (K (K-1) / 2)``; for K < 2 there is nothing to correct."""
    if K < 2:
        return alpha
    return alpha / (K * (K - 1) / 2)


def pairwise_wald(irf: IRFPanel, k: int, k2: int, H_tilde: int, adjusted_alpha: float = 0.05) -> WaldResult:
    """Wald test of ``beta_k^h = beta_k2^h`` for ``h = 0..H_tilde``.

    NaN-flagged cells are dropped from the restriction matrix and the degrees of
    freedom shrink accordingly. If ``R Omega R'`` is numerically singular the
    pseudo-inverse is used and df becomes its effective rank.
    """
    if k == k2 or not (1 <= k <= irf.K and 1 <= k2 <= irf.K):
        raise InvalidPair(f"invalid pair ({k}, {k2}) for K={irf.K}")
    if not 0 <= H_tilde <= irf.H:
        raise InvalidPair(f"H_tilde={H_tilde} outside 0..{irf.H}")
    hs = [h for h in range(H_tilde + 1) if not (irf.flagged[k - 1, h] or irf.flagged[k2 - 1, h])]
    excluded = H_tilde + 1 - len(hs)
    if not hs:
        raise AllCellsFlagged(f"every cell of pair ({k}, {k2}) is flagged")
    ia = [irf.omega_index(k, h) for h in hs]
    ib = [irf.omega_index(k2, h) for h in hs]
    diff = irf.beta[k - 1, hs] - irf.beta[k2 - 1, hs]
    O = irf.omega_beta
    V = O[np.ix_(ia, ia)] + O[np.ix_(ib, ib)] - O[np.ix_(ia, ib)] - O[np.ix_(ib, ia)]
    V = 0.5 * (V + V.T)
    df = len(hs)
    rank_deficient = False
    s = np.linalg.svd(V, compute_uv=False)
    if s[0] <= 0 or s[-1] < SINGULAR_RCOND * s[0]:
        sol, rank = pinv_solve(V, diff, tol=SINGULAR_RCOND)
        rank_deficient = True
        df = max(rank, 1)
    else:
        sol = np.linalg.solve(V, diff)
    W = max(float(diff @ sol), 0.0)
    crit = chi2_quantile(1.0 - adjusted_alpha, df)
    return WaldResult(
        pair=(k, k2),
        statistic=W,
        df=df,
        p_value=chi2_sf(W, df),
        adjusted_alpha=adjusted_alpha,
        critical_value=crit,
        reject=W > crit,
        rank_deficient=rank_deficient,
        excluded_cells=excluded,
    )


def wald_all_pairs(irf: IRFPanel, H_tilde: int, alpha: float) -> list[WaldResult]:
    a_adj = bonferroni_alpha(alpha, irf.K)
    return [pairwise_wald(irf, k, k2, H_tilde, a_adj) for k, k2 in itertools.combinations(range(1, irf.K + 1), 2)]


def _merge_pair(assignment: ClusterAssignment, Z, pair) -> ClusterAssignment:
    k, k2 = sorted(pair)
    labels = assignment.labels.copy()
    labels[labels == k2] = k
    labels[labels > k2] -= 1
    return assignment_from_labels(Z, labels, K=assignment.K - 1)


def select_clusters(panel: TimeSeriesPanel, config: EstimationConfig, *, stream: tuple = ()) -> SelectionReport:
    """Classify, estimate and test, lowering K until every pair differs or K = 1.

    Drivers are standardized once up front (if configured). With the default
    ``reduce_rule="refit"`` each smaller K gets a fresh k-means fit; ``"merge"``
    instead collapses the least distinguishable failing pair. A classification
    that leaves a cluster below the size floor counts as a failure.
    """
    if config.standardize_drivers:
        work, center, scale = standardize_drivers(panel)
    else:
        work, center, scale = panel, np.zeros(panel.d), np.ones(panel.d)
    Z = lagged_drivers(work, config)
    floor = config.cluster_size_floor(panel.m)
    hac = HACOptions(config.bandwidth())

    iterations: list[SelectionIteration] = []
    K = config.K_max
    assignment = None
    while True:
        if K == 1:
            assignment = assignment_from_labels(Z, np.ones(len(Z), dtype=int), K=1)
            irf = estimate_clustered_lp(build_system(work, assignment, config), hac)
            iterations.append(
                SelectionIteration(K=1, cluster_sizes=[len(Z)], centroids=assignment.centroids.tolist(), valid=True, decision="stop: K=1")
            )
            break
        if config.reduce_rule == "merge" and assignment is not None and assignment.K == K + 1 and iterations[-1].valid:
            failing = [t for t in iterations[-1].tests if not t.reject]
            assignment = _merge_pair(assignment, Z, min(failing, key=lambda t: t.statistic).pair)
        elif len(Z) >= K:
            assignment = kmeans_fit(Z, K, seed=config.seed, restarts=config.kmeans_restarts, stream=tuple(stream) + (K,))
        else:
            assignment = None
        sizes = assignment.sizes.tolist() if assignment is not None else []
        it = SelectionIteration(
            K=K,
            cluster_sizes=sizes,
            centroids=assignment.centroids.tolist() if assignment is not None else [],
            valid=assignment is not None and min(sizes) >= floor,
        )
        iterations.append(it)
        if not it.valid:
            it.decision = f"reduce: cluster below minimum size {floor}"
            log.debug("K=%d rejected classification, sizes %s", K, sizes)
            K -= 1
            continue
        irf = estimate_clustered_lp(build_system(work, assignment, config), hac)
        it.tests = wald_all_pairs(irf, config.H_tilde, config.alpha)
        if all(t.reject for t in it.tests):
            it.decision = "stop: all pairs reject"
            break
        it.decision = "reduce: at least one pair fails to reject"
        K -= 1

    rule = ClusterRule(centroids=assignment.centroids, center=np.asarray(center), scale=np.asarray(scale))
    return SelectionReport(iterations=iterations, K_hat=K, irf=irf, assignment=assignment, rule=rule, config=config)
