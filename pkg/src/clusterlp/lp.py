"""Clustered local projections estimated jointly over clusters and horizons.

The stacked system regresses the lead vector ``(y_t, ..., y_{t+H})`` on

    x_t = [D_1 eps_t, ..., D_K eps_t, D_1 w_t', ..., D_K w_t']'

where ``w_t`` holds an intercept, lagged controls and own lags of ``y``. The
design is exactly identified, so the GMM point estimate is the OLS solution and
the weighting matrix only enters the HAC sandwich covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .clustering import ClusterAssignment, assignment_from_labels
from .data import EstimationConfig, TimeSeriesPanel
from .errors import EmptyCluster, WindowTooShort
from .statcore import HACOptions, least_squares, newey_west


@dataclass(frozen=True)
class StackedSystem:
    Y: np.ndarray  # (N, H+1)
    X: np.ndarray  # (N, p)
    rows: np.ndarray  # 0-based panel rows t in [t0, T*]
    labels: np.ndarray  # (N,) 1..K
    K: int
    H: int
    control_names: tuple[str, ...]  # names of the per-cluster control block w_t
    column_labels: tuple[tuple[int, str], ...]  # (cluster or 0 for shared, regressor name)
    active: np.ndarray  # (K,) bool, clusters with at least one row

    @property
    def N(self) -> int:
        return len(self.Y)

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def t0(self) -> int:
        return int(self.rows[0])

    @property
    def t_star(self) -> int:
        return int(self.rows[-1])

    def shock_columns(self) -> list[int]:
        return [j for j, (_, role) in enumerate(self.column_labels) if role == "shock"]


@dataclass(frozen=True)
class IRFPanel:
    """Impulse responses ``beta[k-1, h]`` with their joint HAC covariance.

    ``omega_beta`` is ordered cluster-major: entry ``(k-1)*(H+1) + h``.
    Cells of clusters without data are NaN and marked in ``flagged``.
    """

    beta: np.ndarray
    omega_beta: np.ndarray
    stderr: np.ndarray
    gamma: np.ndarray  # (K, q_w, H+1)
    gamma_names: tuple[str, ...]
    K: int
    H: int
    N: int
    bandwidth: int
    cluster_sizes: np.ndarray
    flagged: np.ndarray
    metadata: dict = field(default_factory=dict)

    def omega_index(self, k: int, h: int) -> int:
        return (k - 1) * (self.H + 1) + h


def window_rows(T: int, config: EstimationConfig) -> np.ndarray:
    t0, last = config.first_row(), config.last_row(T)
    if last < t0:
        raise WindowTooShort(f"T={T} leaves no usable rows for H={config.H} with {t0} initial lags")
    return np.arange(t0, last + 1)


def lagged_drivers(panel: TimeSeriesPanel, config: EstimationConfig) -> np.ndarray:
    """Driver rows ``Z_{t-driver_lag}`` for every t in the estimation window."""
    rows = window_rows(panel.T, config)
    return panel.drivers[rows - config.driver_lag]


def _control_block(panel: TimeSeriesPanel, rows, config: EstimationConfig):
    cols, names = [np.ones(len(rows))], ["const"]
    for j in range(1, config.control_lags + 1):
        for i, name in enumerate(panel.control_names):
            cols.append(panel.controls[rows - j, i])
            names.append(f"{name}.L{j}")
    for j in range(1, config.own_lags + 1):
        cols.append(panel.y[rows - j])
        names.append(f"{panel.y_name}.L{j}")
    return np.column_stack(cols), tuple(names)


def build_system(
    panel: TimeSeriesPanel,
    assignment: ClusterAssignment,
    config: EstimationConfig,
    *,
    allow_empty: bool = False,
) -> StackedSystem:
    """Assemble leads and the cluster-interacted design.

    ``assignment.labels`` must align with :func:`window_rows` (one label per
    estimation row, derived from ``Z_{t-1}``). Clusters without rows raise
    :class:`EmptyCluster` unless ``allow_empty``; their columns are then dropped
    and their responses reported as NaN.
    """
    rows = window_rows(panel.T, config)
    labels = np.asarray(assignment.labels, dtype=int)
    K = int(assignment.K)
    if len(labels) != len(rows):
        raise ValueError(f"{len(labels)} labels for {len(rows)} estimation rows")
    if labels.min() < 1 or labels.max() > K:
        raise ValueError("labels outside 1..K")
    sizes = np.bincount(labels - 1, minlength=K)
    active = sizes > 0
    if not active.all() and not allow_empty:
        raise EmptyCluster(f"clusters {list(np.flatnonzero(~active) + 1)} have no estimation rows")

    H = config.H
    Y = np.column_stack([panel.y[rows + h] for h in range(H + 1)])
    W, wnames = _control_block(panel, rows, config)
    eps = panel.shock[rows]
    D = (labels[:, None] == np.arange(1, K + 1)[None, :]).astype(float)
    ks = [k for k in range(1, K + 1) if active[k - 1]]

    blocks, col_labels = [], []
    for k in ks:
        blocks.append(D[:, k - 1] * eps)
        col_labels.append((k, "shock"))
    if config.shared_controls:
        for k in ks:
            blocks.append(D[:, k - 1])
            col_labels.append((k, "const"))
        for j, name in enumerate(wnames[1:], start=1):
            blocks.append(W[:, j])
            col_labels.append((0, name))
    else:
        for k in ks:
            for j, name in enumerate(wnames):
                blocks.append(D[:, k - 1] * W[:, j])
                col_labels.append((k, name))
    X = np.column_stack(blocks)
    if len(rows) <= X.shape[1]:
        raise WindowTooShort(f"{len(rows)} rows for {X.shape[1]} regressors")
    return StackedSystem(
        Y=Y,
        X=X,
        rows=rows,
        labels=labels,
        K=K,
        H=H,
        control_names=wnames,
        column_labels=tuple(col_labels),
        active=active,
    )


def _resolve_bandwidth(hac, n):
    if isinstance(hac, HACOptions):
        return hac.resolve(n)
    return HACOptions(hac).resolve(n)


def estimate_clustered_lp(system: StackedSystem, hac: HACOptions | int | str = 0) -> IRFPanel:
    """Joint OLS/GMM estimates with the HAC covariance of all impulse responses.

    The score of the stacked system is ``x_t kron v_t``; the impulse-response rows
    of the sandwich ``A^-1 S A^-1 / N`` (``A = X'X/N``) are obtained by projecting
    the score onto those rows before the Newey-West step, which yields exactly the
    same block as the full sandwich at a fraction of the cost.
    """
    X, Y, N, H, K = system.X, system.Y, system.N, system.H, system.K
    L = _resolve_bandwidth(hac, N)
    coef = least_squares(X, Y)
    V = Y - X @ coef
    A = X.T @ X / N
    shock_cols = system.shock_columns()
    G = np.linalg.solve(A, np.eye(len(A))[:, shock_cols]).T  # rows of A^-1 for the shocks
    u = X @ G.T  # (N, Ka)
    psi = (u[:, :, None] * V[:, None, :]).reshape(N, -1)
    omega_active = newey_west(psi, L) / N

    active_ks = [k for k, _ in (system.column_labels[j] for j in shock_cols)]
    nH = H + 1
    beta = np.full((K, nH), np.nan)
    omega = np.full((K * nH, K * nH), np.nan)
    idx = np.concatenate([np.arange((k - 1) * nH, k * nH) for k in active_ks]) if active_ks else np.array([], int)
    for a, j in enumerate(shock_cols):
        beta[active_ks[a] - 1] = coef[j]
    omega[np.ix_(idx, idx)] = omega_active
    stderr = np.sqrt(np.clip(np.diag(omega), 0.0, None)).reshape(K, nH)

    gnames = system.control_names
    gamma = np.full((K, len(gnames), nH), np.nan)
    for j, (k, name) in enumerate(system.column_labels):
        if name == "shock":
            continue
        targets = range(1, K + 1) if k == 0 else (k,)
        for kk in targets:
            gamma[kk - 1, gnames.index(name)] = coef[j]
    flagged = np.isnan(beta)
    return IRFPanel(
        beta=beta,
        omega_beta=omega,
        stderr=stderr,
        gamma=gamma,
        gamma_names=gnames,
        K=K,
        H=H,
        N=N,
        bandwidth=L,
        cluster_sizes=np.bincount(system.labels - 1, minlength=K),
        flagged=flagged,
        metadata={"t0": system.t0, "t_star": system.t_star, "p": system.p},
    )


def full_hac_covariance(system: StackedSystem, hac: HACOptions | int | str = 0):
    """Full sandwich covariance of ``vec(C)`` ordered ``(column j, horizon h)``.

    Quadratic in ``p*(H+1)``; intended for diagnostics and for checking the
    projected computation in :func:`estimate_clustered_lp`.
    """
    X, Y, N = system.X, system.Y, system.N
    L = _resolve_bandwidth(hac, N)
    coef = least_squares(X, Y)
    V = Y - X @ coef
    score = (X[:, :, None] * V[:, None, :]).reshape(N, -1)
    S = newey_west(score, L)
    nH = system.H + 1
    Ainv = np.kron(np.linalg.inv(X.T @ X / N), np.eye(nH))
    return coef, Ainv @ S @ Ainv / N


def linear_lp(panel: TimeSeriesPanel, config: EstimationConfig) -> IRFPanel:
    """Standard LP: the clustered estimator with a single all-ones cluster."""
    rows = window_rows(panel.T, config)
    assignment = assignment_from_labels(lagged_drivers(panel, config), np.ones(len(rows), dtype=int), K=1)
    return estimate_clustered_lp(build_system(panel, assignment, config), HACOptions(config.bandwidth()))


def state_indicator(z, threshold: float = 0.0, lag: int = 1):
    """``I_t = 1{z_{t-lag} > threshold}`` aligned to period t; the first ``lag`` entries are NaN."""
    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, np.nan)
    out[lag:] = (z[: len(z) - lag] > threshold).astype(float)
    return out


def state_dependent_lp(panel: TimeSeriesPanel, indicator, config: EstimationConfig) -> IRFPanel:
    """Two-regime LP; cluster 1 is ``indicator == 1``, cluster 2 is ``indicator == 0``.

    ``indicator[t]`` must already be predetermined for period t (see
    :func:`state_indicator`). An empty regime is NaN-flagged rather than dropped.
    """
    indicator = np.asarray(indicator, dtype=float)
    if indicator.shape != (panel.T,):
        raise ValueError("indicator must have one value per period")
    rows = window_rows(panel.T, config)
    ind = indicator[rows]
    if np.isnan(ind).any():
        raise ValueError("indicator is undefined inside the estimation window")
    if not np.isin(ind, (0.0, 1.0)).all():
        raise ValueError("indicator must be binary")
    labels = np.where(ind == 1.0, 1, 2)
    assignment = assignment_from_labels(ind, labels, K=2)
    system = build_system(panel, assignment, config, allow_empty=True)
    irf = estimate_clustered_lp(system, HACOptions(config.bandwidth()))
    irf.metadata["regime_share"] = float(ind.mean())
    return irf


@dataclass(frozen=True)
class ShockWeightCurve:
    grid: np.ndarray
    weights: np.ndarray
    cluster: int
    integral: float
    peak: float
    shock_mean: float


def shock_weight_curve(eps, grid, cluster: int = 1) -> ShockWeightCurve:
    """Sample analogue of ``Cov(1{eps >= e}, eps) / Var(eps)`` on a grid of shock values."""
    eps = np.sort(np.asarray(eps, dtype=float))
    grid = np.asarray(grid, dtype=float)
    n = len(eps)
    mean = eps.mean()
    var = ((eps - mean) ** 2).mean()
    # tail sums over eps >= e
    tail = np.concatenate([np.cumsum(eps[::-1])[::-1], [0.0]])
    start = np.searchsorted(eps, grid, side="left")
    share = (n - start) / n
    weights = (tail[start] / n - share * mean) / var
    integral = float(trapezoid(weights, grid))
    return ShockWeightCurve(
        grid=grid,
        weights=weights,
        cluster=cluster,
        integral=integral,
        peak=float(grid[np.argmax(weights)]),
        shock_mean=float(mean),
    )
