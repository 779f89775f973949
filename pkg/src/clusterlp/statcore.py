"""Numerical kernel: least squares, pseudo-inverse, Newey-West, chi-square quantiles, RNG streams."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import optimize, special

from .errors import BandwidthTooLarge, ConfigError, RankDeficient


class HACClipWarning(RuntimeWarning):
    """Raised (as a warning) when a HAC matrix needed eigenvalue clipping."""


@dataclass(frozen=True)
class HACOptions:
    """Bartlett-kernel HAC settings.

    ``bandwidth`` is a nonnegative lag truncation ``L`` or the string ``"auto"``,
    which resolves to ``floor(1.3 * sqrt(N))``.
    """

    bandwidth: int | str = 0

    def __post_init__(self):
        bw = self.bandwidth
        if isinstance(bw, str):
            if bw != "auto":
                raise ConfigError(f"bandwidth must be a nonnegative integer or 'auto', got {bw!r}")
        elif int(bw) != bw or bw < 0:
            raise ConfigError(f"bandwidth must be a nonnegative integer or 'auto', got {bw!r}")

    def resolve(self, n_obs: int) -> int:
        if self.bandwidth == "auto":
            return int(math.floor(1.3 * math.sqrt(n_obs)))
        return int(self.bandwidth)


def least_squares(X, Y):
    """Least-squares coefficients via column-pivoted QR.

    Parameters
    ----------
    X : (N, p) array
    Y : (N,) or (N, q) array

    Returns
    -------
    ndarray of shape (p,) or (p, q)

    Raises
    ------
    RankDeficient
        If the numerical rank of ``X`` is below ``p``. The rank tolerance is
        ``max(N, p) * eps * sigma_max``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    n, p = X.shape
    if Y.shape[0] != n:
        raise ValueError(f"X has {n} rows but Y has {Y.shape[0]}")
    if n < p:
        raise RankDeficient(f"{n} observations for {p} regressors")
    if p == 0:
        return np.zeros((0,) + Y.shape[1:])
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    sigma_max = np.linalg.norm(R, 2)
    tol = max(n, p) * np.finfo(float).eps * sigma_max
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol))
    if rank < p:
        raise RankDeficient(f"design has numerical rank {rank} < {p} columns")
    sol = scipy.linalg.solve_triangular(R, Q.T @ Y)
    coef = np.empty_like(sol)
    coef[piv] = sol
    return coef


def newey_west(moments, L: int, *, clip_tol: float = 1e-12):
    """Bartlett-kernel long-run covariance of per-period moment vectors.

    ``S = G0 + sum_{l=1..L} (1 - l/(L+1)) (G_l + G_l')`` with
    ``G_l = (1/N) sum_t m_t m_{t-l}'``. Moments are used as given (not demeaned).
    The result is symmetrized; eigenvalues below ``-clip_tol * max|eig|`` are
    clipped to zero and a :class:`HACClipWarning` is emitted.
    """
    m = np.asarray(moments, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    n = m.shape[0]
    L = int(L)
    if L < 0:
        raise ValueError("bandwidth must be nonnegative")
    if n <= L:
        raise BandwidthTooLarge(f"bandwidth {L} requires more than {L} observations, got {n}")
    S = m.T @ m
    for lag in range(1, L + 1):
        G = m[lag:].T @ m[:-lag]
        S += (1.0 - lag / (L + 1.0)) * (G + G.T)
    S /= n
    S = 0.5 * (S + S.T)
    if L > 0 and S.shape[0] > 0:
        w, V = np.linalg.eigh(S)
        scale = max(np.max(np.abs(w)), np.finfo(float).tiny)
        if w[0] < -clip_tol * scale:
            warnings.warn(
                f"HAC matrix not PSD (min eigenvalue {w[0]:.3e}); clipped at zero",
                HACClipWarning,
                stacklevel=2,
            )
            S = (V * np.clip(w, 0.0, None)) @ V.T
            S = 0.5 * (S + S.T)
    return S


def chi2_cdf(x: float, df: float) -> float:
    if x <= 0:
        return 0.0
    return float(special.gammainc(df / 2.0, x / 2.0))


def chi2_sf(x: float, df: float) -> float:
    if x <= 0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def chi2_quantile(p: float, df: int) -> float:
    """Inverse chi-square CDF by bracketed root finding on the regularized incomplete gamma."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if df <= 0:
        raise ValueError(f"df must be positive, got {df}")

    def f(x):
        return special.gammainc(df / 2.0, x / 2.0) - p

    hi = max(1.0, 2.0 * df)
    while f(hi) < 0:
        hi *= 2.0
    x = optimize.brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(x)


def pinv_solve(A, b, tol: float = 1e-10):
    """Minimum-norm solution of ``A x = b`` with singular values below ``tol * sigma_max`` dropped.

    Returns ``(x, rank)``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    U, s, Vt = np.linalg.svd(A)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1]), 0
    keep = s > tol * s[0]
    rank = int(keep.sum())
    coef = (U[:, keep].T @ b) / s[keep]
    return Vt[keep].T @ coef, rank


def rng_stream(seed: int, stream_id: int | tuple[int, ...] = 0) -> np.random.Generator:
    """Replayable generator for ``(seed, stream_id)``; distinct ids give independent streams.

    ``stream_id`` may be a tuple for nested streams, e.g. ``(replication, restart)``.
    """
    key = stream_id if isinstance(stream_id, tuple) else (stream_id,)
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
