"""Data-generating processes with parameters driven by an exogenous variable.

Every DGP shares the outcome equation

    x_t = eps^x_t
    y_t = beta_t x_t + gamma1_t y_{t-1} + gamma2_t y_{t-2} + eps^y_t

and differs only in how ``(beta_t, gamma1_t, gamma2_t)`` depend on ``z_{t-1}``.
Paths are simulated with a burn-in that is discarded before returning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from scipy.special import expit

from ..errors import ConfigError, ExplodedPath, NonStationarySpec
from ..statcore import rng_stream

BURN_IN = 10_000
EXPLODE_AT = 1e8

# first element of every RNG spawn key used by the simulators
SIM_STREAM = 0


def _companion_radius(blocks) -> float:
    """Spectral radius of the companion matrix of ``x_t = sum_i A_i x_{t-i}``."""
    blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]
    if not blocks:
        return 0.0
    d, p = blocks[0].shape[0], len(blocks)
    C = np.zeros((d * p, d * p))
    C[:d] = np.hstack(blocks)
    C[d:, :-d] = np.eye(d * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(C))))


@dataclass(frozen=True)
class ArmaSpec:
    """``z_t = mean + w_t``, ``w_t = c + sum phi_i w_{t-i} + e_t + sum theta_j e_{t-j}``, ``e ~ N(0, sigma^2)``."""

    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()
    intercept: float = 0.0
    sigma: float = 1.0
    mean: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        object.__setattr__(self, "ma", tuple(float(a) for a in self.ma))
        if self.sigma < 0:
            raise NonStationarySpec("innovation sd must be nonnegative")
        if self.ar and _companion_radius([[a] for a in self.ar]) >= 1.0:
            raise NonStationarySpec(f"AR polynomial {self.ar} has a root on or inside the unit circle")

    @property
    def d(self) -> int:
        return 1

    def unconditional_mean(self) -> float:
        return self.mean + self.intercept / (1.0 - sum(self.ar))

    def psi_weights(self, n: int = 2000) -> np.ndarray:
        imp = np.zeros(n)
        imp[0] = 1.0
        return lfilter(np.r_[1.0, self.ma], np.r_[1.0, -np.asarray(self.ar)], imp)

    def unconditional_sd(self) -> float:
        return float(self.sigma * np.sqrt((self.psi_weights() ** 2).sum()))


@dataclass(frozen=True)
class VarmaSpec:
    """Vector analogue of :class:`ArmaSpec` with coefficient matrices and innovation covariance."""

    ar: tuple = ()
    ma: tuple = ()
    cov: np.ndarray = field(default_factory=lambda: np.eye(2))
    intercept: np.ndarray | None = None

    def __post_init__(self):
        ar = tuple(np.atleast_2d(np.asarray(a, dtype=float)) for a in self.ar)
        ma = tuple(np.atleast_2d(np.asarray(a, dtype=float)) for a in self.ma)
        object.__setattr__(self, "ar", ar)
        object.__setattr__(self, "ma", ma)
        object.__setattr__(self, "cov", np.atleast_2d(np.asarray(self.cov, dtype=float)))
        d = self.cov.shape[0]
        if self.intercept is None:
            object.__setattr__(self, "intercept", np.zeros(d))
        if ar and _companion_radius(ar) >= 1.0:
            raise NonStationarySpec("VAR part is not stationary")

    @property
    def d(self) -> int:
        return self.cov.shape[0]

    def psi_matrices(self, n: int = 2000):
        d = self.d
        out = [np.eye(d)]
        for j in range(1, n):
            P = self.ma[j - 1].copy() if j <= len(self.ma) else np.zeros((d, d))
            for i, A in enumerate(self.ar, start=1):
                if j - i >= 0:
                    P += A @ out[j - i]
            out.append(P)
        return out

    def unconditional_cov(self, n: int = 2000) -> np.ndarray:
        return sum(P @ self.cov @ P.T for P in self.psi_matrices(n))


@dataclass(frozen=True)
class ThresholdDGPSpec:
    """Smooth-transition model with four regimes ordered along a scalar driver."""

    psi: np.ndarray = field(
        default_factory=lambda: np.array(
            [
                [-1.9, -0.5, 0.2, 0.8],
                [0.7, 0.4, 0.9, 1.2],
                [0.1, 0.2, -0.1, -0.3],
            ]
        )
    )
    lam: float = 5.0
    centers: tuple[float, ...] = (-4.3359, -0.5981, 3.5717)
    sigma_eta2: float = 0.0009
    arma: ArmaSpec = field(default_factory=lambda: ArmaSpec(ar=(0.6, 0.3), ma=(0.8, 0.7, 0.4), sigma=1.0))

    def __post_init__(self):
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float))
        if self.psi.shape != (3, len(self.centers) + 1):
            raise ConfigError("psi must be 3 x (number of centers + 1)")
        check_regimes(self.psi)

    def weights(self, z) -> np.ndarray:
        return logistic_weights(z, self.centers, self.lam)

    def parameters(self, z_lag, rng) -> np.ndarray:
        base = self.weights(z_lag) @ self.psi.T
        return base + np.sqrt(self.sigma_eta2) * rng.standard_normal(base.shape)


@dataclass(frozen=True)
class BivariateThresholdDGPSpec:
    """Four states from one logistic threshold per driver.

    The state of ``(z1, z2)`` maps to a column of ``psi`` as
    ``(low, low) -> 1, (low, high) -> 2, (high, low) -> 3, (high, high) -> 4``.
    The default VARMA(2,3) has diagonal-dominant AR blocks, scaled-identity MA
    blocks and unit innovation covariance.
    """

    psi: np.ndarray = field(default_factory=lambda: ThresholdDGPSpec().psi.copy())
    lam: float = 5.0
    centers: tuple[float, float] = (0.0, 0.0)
    sigma_eta2: float = 0.0009
    varma: VarmaSpec = field(
        default_factory=lambda: VarmaSpec(
            ar=([[0.5, 0.05], [0.05, 0.5]], [[0.2, 0.0], [0.0, 0.2]]),
            ma=(0.6 * np.eye(2), 0.4 * np.eye(2), 0.2 * np.eye(2)),
            cov=np.eye(2),
        )
    )

    def __post_init__(self):
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float))
        if self.psi.shape != (3, 4):
            raise ConfigError("bivariate threshold needs a 3 x 4 parameter matrix")
        if self.varma.d != 2:
            raise ConfigError("bivariate threshold needs a two-dimensional driver")
        check_regimes(self.psi)

    def weights(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        g1 = logistic(z[:, 0], self.centers[0], self.lam)
        g2 = logistic(z[:, 1], self.centers[1], self.lam)
        return np.column_stack([(1 - g1) * (1 - g2), (1 - g1) * g2, g1 * (1 - g2), g1 * g2])

    def parameters(self, z_lag, rng) -> np.ndarray:
        base = self.weights(z_lag) @ self.psi.T
        return base + np.sqrt(self.sigma_eta2) * rng.standard_normal(base.shape)


@dataclass(frozen=True)
class AbsValDGPSpec:
    """Parameters affine in ``|z_{t-1}|`` plus Gaussian noise."""

    intercepts: tuple[float, float, float] = (-0.4, -0.2, -0.1)
    slopes: tuple[float, float, float] = (0.7, 0.5, 0.2)
    sigma_p2: float = 0.0009
    arma: ArmaSpec = field(default_factory=lambda: ArmaSpec(ar=(0.6, 0.3), ma=(0.8, 0.7, 0.2), sigma=0.003, mean=1.0))

    def __post_init__(self):
        arma = self.arma
        zs = arma.unconditional_mean() + arma.unconditional_sd() * np.linspace(-4, 4, 81)
        check_regimes(np.column_stack([self.intercepts]) + np.outer(self.slopes, np.abs(zs)))

    def parameters(self, z_lag, rng) -> np.ndarray:
        absz = np.abs(np.asarray(z_lag, dtype=float).reshape(-1))
        base = np.asarray(self.intercepts)[None, :] + absz[:, None] * np.asarray(self.slopes)[None, :]
        return base + np.sqrt(self.sigma_p2) * rng.standard_normal(base.shape)


@dataclass(frozen=True)
class ConstantDGPSpec:
    """Time-invariant parameters; the driver is simulated but irrelevant (size checks)."""

    beta: float = 0.8
    gamma1: float = 0.5
    gamma2: float = 0.1
    arma: ArmaSpec = field(default_factory=lambda: ArmaSpec(ar=(0.6, 0.3), ma=(0.8, 0.7, 0.4), sigma=1.0))

    def __post_init__(self):
        check_regimes(np.array([[self.beta], [self.gamma1], [self.gamma2]]))

    def parameters(self, z_lag, rng) -> np.ndarray:
        n = np.asarray(z_lag).shape[0]
        return np.tile([self.beta, self.gamma1, self.gamma2], (n, 1)).astype(float)


def check_regimes(psi) -> None:
    """Each column ``(beta, gamma1, gamma2)`` must give a stationary AR(2) in y."""
    psi = np.asarray(psi, dtype=float)
    for col in psi.T:
        if _companion_radius([[col[1]], [col[2]]]) >= 1.0:
            raise NonStationarySpec(f"regime gamma=({col[1]}, {col[2]}) is not stationary")


def logistic(z, c, lam):
    return expit(lam * (np.asarray(z, dtype=float) - c))


def logistic_weights(z, centers, lam) -> np.ndarray:
    """Sequential regime weights from logistic transitions at ordered centers.

    ``xi_1 = 1 - G_1``, ``xi_k = G_{k-1} - G_k``, ``xi_K = G_{K-1}``. Accepts a
    scalar (returns shape ``(K,)``) or an array of driver values (``(n, K)``).
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float)).reshape(-1)
    G = np.column_stack([logistic(z, c, lam) for c in centers])
    ones, zeros = np.ones((len(z), 1)), np.zeros((len(z), 1))
    upper = np.hstack([ones, G])
    lower = np.hstack([G, zeros])
    xi = upper - lower
    return xi[0] if scalar else xi


def simulate_arma(spec: ArmaSpec, T: int, rng: np.random.Generator, n_paths: int | None = None) -> np.ndarray:
    """Exact ARMA recursion started from zeros; returns ``(T,)`` or ``(n_paths, T)``."""
    shape = (T,) if n_paths is None else (n_paths, T)
    e = spec.sigma * rng.standard_normal(shape)
    a = np.r_[1.0, -np.asarray(spec.ar)]
    w = lfilter(np.r_[1.0, spec.ma], a, e, axis=-1)
    if spec.intercept:
        w = w + lfilter([1.0], a, np.full(shape, spec.intercept), axis=-1)
    return spec.mean + w


def simulate_varma(spec: VarmaSpec, T: int, rng: np.random.Generator, n_paths: int | None = None) -> np.ndarray:
    """Exact VARMA recursion from zeros; returns ``(T, d)`` or ``(n_paths, T, d)``."""
    P = 1 if n_paths is None else n_paths
    d = spec.d
    chol = np.linalg.cholesky(spec.cov)
    e = rng.standard_normal((P, T, d)) @ chol.T
    z = np.zeros((P, T, d))
    for t in range(T):
        acc = spec.intercept + e[:, t]
        for i, A in enumerate(spec.ar, start=1):
            if t - i >= 0:
                acc = acc + z[:, t - i] @ A.T
        for j, B in enumerate(spec.ma, start=1):
            if t - j >= 0:
                acc = acc + e[:, t - j] @ B.T
        z[:, t] = acc
    return z[0] if n_paths is None else z


@dataclass
class SimulatedPath:
    y: np.ndarray
    x: np.ndarray
    z: np.ndarray  # (T, d)
    beta: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    ey: np.ndarray
    seed: int
    y_pre: np.ndarray = field(default_factory=lambda: np.zeros(2))  # (y_{-2}, y_{-1})
    z_pre: np.ndarray | None = None  # z_{-1}

    @property
    def T(self) -> int:
        return len(self.y)


def outcome_step(beta, x, g1, y1, g2, y2, ey):
    """One step of the outcome equation; shared by the simulator and the response oracle."""
    return beta * x + g1 * y1 + g2 * y2 + ey


def _simulate_driver(spec, n, rng, n_paths):
    if isinstance(spec, BivariateThresholdDGPSpec):
        return simulate_varma(spec.varma, n, rng, n_paths)
    z = simulate_arma(spec.arma, n, rng, n_paths)
    return z[..., None]


def simulate_batch(spec, T: int, rng: np.random.Generator, n_paths: int, burn_in: int = BURN_IN):
    """Simulate ``n_paths`` independent paths; arrays are ``(n_paths, T)`` (``z``: ``(n_paths, T + 1, d)``).

    ``z[:, 0]`` is the pre-sample driver value ``z_{-1}`` so that ``z[:, t]`` is
    the lagged driver governing period ``t``. ``y_pre`` holds ``(y_{-2}, y_{-1})``.
    """
    n = burn_in + T
    z = _simulate_driver(spec, n + 1, rng, n_paths)  # (P, n+1, d)
    x = rng.standard_normal((n_paths, n))
    ey = rng.standard_normal((n_paths, n))
    params = spec.parameters(z[:, :-1].reshape(n_paths * n, -1), rng).reshape(n_paths, n, 3)
    beta, g1, g2 = params[..., 0], params[..., 1], params[..., 2]
    # time-major copies for contiguous per-step access
    bT, xT, g1T, g2T, eT = (np.ascontiguousarray(a.T) for a in (beta, x, g1, g2, ey))
    yT = np.zeros((n + 2, n_paths))
    for t in range(n):
        yT[t + 2] = outcome_step(bT[t], xT[t], g1T[t], yT[t + 1], g2T[t], yT[t], eT[t])
    y = yT.T
    if not np.isfinite(y).all() or np.abs(y).max() > EXPLODE_AT:
        raise ExplodedPath(f"|y| exceeded {EXPLODE_AT:g}; the parameter spec is not stationary in practice")
    keep = slice(burn_in, n)
    return {
        "y": y[:, 2 + burn_in :],
        "y_pre": y[:, burn_in : burn_in + 2],
        "x": x[:, keep],
        "ey": ey[:, keep],
        "beta": beta[:, keep],
        "gamma1": g1[:, keep],
        "gamma2": g2[:, keep],
        "z": z[:, burn_in:],
    }


def simulate(spec, T: int, seed: int, burn_in: int = BURN_IN, stream: tuple = ()) -> SimulatedPath:
    rng = rng_stream(seed, (SIM_STREAM,) + tuple(stream))
    b = simulate_batch(spec, T, rng, 1, burn_in)
    return SimulatedPath(
        y=b["y"][0],
        x=b["x"][0],
        z=b["z"][0, 1:],
        beta=b["beta"][0],
        gamma1=b["gamma1"][0],
        gamma2=b["gamma2"][0],
        ey=b["ey"][0],
        seed=seed,
        y_pre=b["y_pre"][0],
        z_pre=b["z"][0, 0],
    )


def simulate_univariate_threshold(spec: ThresholdDGPSpec, T: int, seed: int, **kw) -> SimulatedPath:
    return simulate(spec, T, seed, **kw)


def simulate_bivariate_threshold(spec: BivariateThresholdDGPSpec, T: int, seed: int, **kw) -> SimulatedPath:
    return simulate(spec, T, seed, **kw)


def simulate_absval(spec: AbsValDGPSpec, T: int, seed: int, **kw) -> SimulatedPath:
    return simulate(spec, T, seed, **kw)


DGPS = {
    "univariate_threshold": ThresholdDGPSpec,
    "bivariate_threshold": BivariateThresholdDGPSpec,
    "absolute_value": AbsValDGPSpec,
    "constant": ConstantDGPSpec,
}


def make_dgp(name: str, **overrides):
    try:
        cls = DGPS[name]
    except KeyError:
        raise KeyError(f"unknown DGP {name!r}; choose from {sorted(DGPS)}") from None
    return cls(**overrides)


def path_to_panel(path: SimulatedPath):
    """Panel with outcome ``y``, shock ``x`` and the driver(s); no exogenous controls."""
    from ..data import TimeSeriesPanel

    d = path.z.shape[1]
    return TimeSeriesPanel(
        timestamps=tuple(range(path.T)),
        y=path.y,
        shock=path.x,
        controls=None,
        drivers=path.z,
        driver_names=("z",) if d == 1 else tuple(f"z{i + 1}" for i in range(d)),
    )
