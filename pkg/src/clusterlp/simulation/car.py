"""Conditional average response by counterfactual two-path simulation.

For every valid shock date ``t`` of every simulated path the outcome is run
forward twice from the same history and with the same future innovations: once
with ``x_t = eps^x_t`` and once with ``x_t = delta + eps^x_t``. The difference at
``t + h`` is averaged over the dates whose lagged driver falls in cluster ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..clustering import ClusterRule
from ..errors import ConfigError, EmptyClusterInOracle
from ..statcore import rng_stream
from .dgp import BURN_IN, outcome_step, simulate_batch

CAR_STREAM = 2
CAR_BATCH = 100
MIN_CAR_REPS = 100


@dataclass(frozen=True)
class CarTable:
    car: np.ndarray  # (K, H+1)
    stderr: np.ndarray  # (K, H+1) Monte Carlo standard errors
    counts: np.ndarray  # (K,) shock dates per cluster, pooled over paths
    M: int
    delta: float
    H: int

    @property
    def K(self) -> int:
        return self.car.shape[0]

    @property
    def cmr(self) -> np.ndarray:
        """Conditional marginal response ``CAR / delta``."""
        return self.car / self.delta


def forward_responses(batch: dict, delta: float, H: int) -> np.ndarray:
    """Perturbed minus baseline outcome for every shock date.

    Returns ``(P, T - H, H + 1)``: entry ``[p, t, h]`` is the effect at ``t + h``
    of adding ``delta`` to ``x_t`` on path ``p``. Both forward paths use
    :func:`outcome_step` on identical inputs, so ``delta = 0`` gives exact zeros.
    """
    y, x, ey = batch["y"], batch["x"], batch["ey"]
    beta, g1, g2 = batch["beta"], batch["gamma1"], batch["gamma2"]
    P, T = y.shape
    n = T - H
    if n < 1:
        raise ConfigError(f"path length {T} too short for horizon {H}")
    full = np.concatenate([batch["y_pre"], y], axis=1)  # full[:, t + 2] = y_t
    out = np.empty((P, n, H + 1))
    # lags for date t (0-based) are full[:, t + 1] and full[:, t]
    b1, b2 = full[:, 1 : n + 1], full[:, :n]
    p1, p2 = b1, b2
    for h in range(H + 1):
        s = slice(h, h + n)
        shock = x[:, s]
        pert_shock = shock + delta if h == 0 else shock
        base = outcome_step(beta[:, s], shock, g1[:, s], b1, g2[:, s], b2, ey[:, s])
        pert = outcome_step(beta[:, s], pert_shock, g1[:, s], p1, g2[:, s], p2, ey[:, s])
        out[:, :, h] = pert - base
        b1, b2 = base, b1
        p1, p2 = pert, p1
    return out


def compute_car(
    spec,
    rules,
    *,
    delta: float = 1.0,
    H: int = 10,
    M: int = 1000,
    T: int = 2000,
    seed: int = 0,
    burn_in: int = BURN_IN,
    stream: tuple = (),
    strict: bool = True,
):
    """Simulate ``M`` paths and tabulate the CAR under one or several cluster rules.

    ``rules`` is a :class:`ClusterRule` (returns one :class:`CarTable`) or a
    list of them (returns a list, all sharing the same simulated paths). The
    standard error treats each path as one draw of a ratio estimator. With
    ``strict=False`` a rule that leaves a cluster without simulated dates yields
    ``None`` instead of raising :class:`EmptyClusterInOracle`.
    """
    if delta == 0:
        raise ConfigError("delta must be nonzero")
    if M < MIN_CAR_REPS:
        raise ConfigError(f"the CAR oracle needs at least {MIN_CAR_REPS} simulated paths, got M={M}")
    single = isinstance(rules, ClusterRule)
    rules = [rules] if single else list(rules)
    sums = [np.zeros((M, r.K, H + 1)) for r in rules]
    cnts = [np.zeros((M, r.K)) for r in rules]
    for b, start in enumerate(range(0, M, CAR_BATCH)):
        P = min(CAR_BATCH, M - start)
        rng = rng_stream(seed, (CAR_STREAM,) + tuple(stream) + (b,))
        batch = simulate_batch(spec, T, rng, P, burn_in)
        diff = forward_responses(batch, delta, H)
        n = diff.shape[1]
        zlag = batch["z"][:, :n]  # z[:, t] is z_{t-1}
        flat = zlag.reshape(P * n, -1)
        for i, rule in enumerate(rules):
            lab = rule.assign(flat).reshape(P, n) - 1
            for k in range(rule.K):
                mask = lab == k
                cnts[i][start : start + P, k] = mask.sum(axis=1)
                sums[i][start : start + P, k] = np.einsum("pt,pth->ph", mask, diff)
    tables = []
    for s, c in zip(sums, cnts):
        try:
            tables.append(_ratio_table(s, c, delta, H))
        except EmptyClusterInOracle:
            if strict:
                raise
            tables.append(None)
    return tables[0] if single else tables


def _ratio_table(sums, counts, delta, H) -> CarTable:
    M = sums.shape[0]
    total = counts.sum(axis=0)
    if (total == 0).any():
        empty = [int(k) + 1 for k in np.flatnonzero(total == 0)]
        raise EmptyClusterInOracle(f"no simulated shock dates fell in cluster(s) {empty}")
    car = sums.sum(axis=0) / total[:, None]
    if M > 1:
        nbar = total / M
        resid = sums - car[None] * counts[:, :, None]
        se = np.sqrt((resid**2).sum(axis=0) / (M * (M - 1))) / nbar[:, None]
    else:
        se = np.full(car.shape, np.nan)
    return CarTable(car=car, stderr=se, counts=total.astype(int), M=M, delta=float(delta), H=H)
