"""Time-series panel, CSV ingestion and column transforms."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DegenerateSeries,
    InteriorGap,
    LagTooLarge,
    MissingColumn,
    NonNumeric,
)

_MISSING_TOKENS = {"", "na", "nan", "n/a", "null", "."}


def _frozen(a, ndim):
    a = np.array(a, dtype=float)
    if ndim == 2 and a.ndim == 1:
        a = a[:, None]
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ColumnSchema:
    """Maps panel roles onto CSV column names."""

    y: str
    shock: str
    controls: tuple[str, ...] = ()
    drivers: tuple[str, ...] = ()
    time: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "drivers", tuple(self.drivers))
        if not self.y or not self.shock:
            raise ConfigError("schema needs exactly one y column and one shock column")
        if not self.drivers:
            raise ConfigError("schema needs at least one driver column")

    @property
    def numeric_columns(self) -> tuple[str, ...]:
        return (self.y, self.shock) + self.controls + self.drivers


@dataclass(frozen=True)
class TimeSeriesPanel:
    """Aligned outcome, shock, controls (T x m) and drivers (T x d).

    Arrays are made read-only on construction so a panel can be shared freely.
    """

    timestamps: tuple
    y: np.ndarray
    shock: np.ndarray
    controls: np.ndarray
    drivers: np.ndarray
    control_names: tuple[str, ...] = ()
    driver_names: tuple[str, ...] = ()
    y_name: str = "y"
    shock_name: str = "shock"

    def __post_init__(self):
        T = len(self.y)
        object.__setattr__(self, "y", _frozen(self.y, 1))
        object.__setattr__(self, "shock", _frozen(self.shock, 1))
        controls = np.zeros((T, 0)) if self.controls is None else self.controls
        controls = np.asarray(controls, dtype=float)
        if controls.size == 0:
            controls = np.zeros((T, 0))
        object.__setattr__(self, "controls", _frozen(controls, 2))
        object.__setattr__(self, "drivers", _frozen(self.drivers, 2))
        ts = tuple(range(T)) if self.timestamps is None else tuple(self.timestamps)
        object.__setattr__(self, "timestamps", ts)
        if T < 1:
            raise DataError("panel needs at least one period")
        for name, arr in (("shock", self.shock), ("controls", self.controls), ("drivers", self.drivers), ("timestamps", ts)):
            if len(arr) != T:
                raise DataError(f"{name} has length {len(arr)}, expected {T}")
        if self.y.ndim != 1 or self.shock.ndim != 1:
            raise DataError("y and shock must be one-dimensional")
        if not self.control_names:
            object.__setattr__(self, "control_names", tuple(f"w{i + 1}" for i in range(self.m)))
        if not self.driver_names:
            object.__setattr__(self, "driver_names", tuple(f"z{i + 1}" for i in range(self.d)))
        _check_increasing(ts)

    @property
    def T(self) -> int:
        return len(self.y)

    @property
    def m(self) -> int:
        return self.controls.shape[1]

    @property
    def d(self) -> int:
        return self.drivers.shape[1]

    def with_drivers(self, drivers) -> "TimeSeriesPanel":
        return replace(self, drivers=drivers)

    def slice(self, start: int, stop: int) -> "TimeSeriesPanel":
        return replace(
            self,
            timestamps=self.timestamps[start:stop],
            y=self.y[start:stop],
            shock=self.shock[start:stop],
            controls=self.controls[start:stop],
            drivers=self.drivers[start:stop],
        )


def _check_increasing(ts):
    if len(ts) < 2:
        return
    keys = _sortable(ts)
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise DataError("timestamps must be strictly increasing")


def _sortable(ts):
    try:
        return [float(t) for t in ts]
    except (TypeError, ValueError):
        pass
    try:
        return list(np.array(ts, dtype="datetime64[D]").astype("int64"))
    except (TypeError, ValueError):
        return [str(t) for t in ts]


@dataclass(frozen=True)
class EstimationConfig:
    """Estimation and selection settings.

    ``hac_bandwidth=None`` means "use H" (the LP residual at horizon h is MA(h)).
    ``min_cluster_size=None`` means ``columns per cluster + H + 1``.
    """

    H: int = 12
    H_tilde: int = 5
    K_max: int = 10
    alpha: float = 0.05
    control_lags: int = 1
    own_lags: int = 1
    driver_lag: int = 1
    hac_bandwidth: int | str | None = None
    min_cluster_size: int | None = None
    seed: int = 0
    kmeans_restarts: int = 10
    standardize_drivers: bool = True
    car_delta: float = 1.0
    shared_controls: bool = False
    reduce_rule: str = "refit"

    def __post_init__(self):
        if not 0 <= self.H_tilde <= self.H:
            raise ConfigError(f"need 0 <= H_tilde <= H, got H_tilde={self.H_tilde}, H={self.H}")
        if self.K_max < 1:
            raise ConfigError("K_max must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.control_lags < 0 or self.own_lags < 0:
            raise ConfigError("lag counts must be nonnegative")
        if self.driver_lag < 1:
            raise ConfigError("driver_lag must be at least 1 so drivers are predetermined")
        if self.kmeans_restarts < 1:
            raise ConfigError("kmeans_restarts must be positive")
        if self.reduce_rule not in ("refit", "merge"):
            raise ConfigError("reduce_rule must be 'refit' or 'merge'")
        bw = self.hac_bandwidth
        if bw is not None and bw != "auto" and (isinstance(bw, (str, bool)) or int(bw) != bw or bw < 0):
            raise ConfigError(f"hac_bandwidth must be a nonnegative integer, 'auto' or None, got {bw!r}")

    def columns_per_cluster(self, m: int) -> int:
        """Regressors per cluster block: shock, intercept, lagged controls, own lags."""
        return 2 + m * self.control_lags + self.own_lags

    def minimum_allowed_cluster_size(self, m: int) -> int:
        return 1 + m * self.control_lags + self.H + 1

    def cluster_size_floor(self, m: int) -> int:
        if self.min_cluster_size is None:
            return self.columns_per_cluster(m) + self.H + 1
        floor = self.minimum_allowed_cluster_size(m)
        if self.min_cluster_size < floor:
            raise ConfigError(f"min_cluster_size={self.min_cluster_size} is below the identifiability floor {floor}")
        return int(self.min_cluster_size)

    def bandwidth(self):
        return self.H if self.hac_bandwidth is None else self.hac_bandwidth

    def first_row(self) -> int:
        """0-based index of the first period with every lag available."""
        return max(self.control_lags, self.own_lags, self.driver_lag)

    def last_row(self, T: int) -> int:
        """0-based index of the last period used: 1-based ``T* = T - H - 1``."""
        return T - self.H - 2


def standardize(x):
    """Center to mean zero and scale to unit sample standard deviation (divisor T-1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("standardize expects a one-dimensional series")
    if len(x) < 2:
        raise DegenerateSeries("need at least two observations")
    sd = x.std(ddof=1)
    if not sd > 0 or not math.isfinite(sd):
        raise DegenerateSeries("series has zero variance")
    return (x - x.mean()) / sd


def lag(x, j: int):
    """Shift a series ``j`` periods forward in time; the first ``j`` entries become NaN."""
    x = np.asarray(x, dtype=float)
    if j < 0:
        raise ValueError("lag order must be nonnegative")
    if j >= len(x):
        raise LagTooLarge(f"lag {j} with only {len(x)} observations")
    out = np.full(x.shape, np.nan)
    out[j:] = x[: len(x) - j]
    return out


def standardize_drivers(panel: TimeSeriesPanel):
    """Return ``(panel, center, scale)`` with every driver column standardized."""
    Z = panel.drivers
    center = Z.mean(axis=0)
    scale = np.array([Z[:, j].std(ddof=1) if len(Z) > 1 else 0.0 for j in range(Z.shape[1])])
    cols = [standardize(Z[:, j]) for j in range(Z.shape[1])]
    return panel.with_drivers(np.column_stack(cols)), center, scale


def _parse_cell(raw: str, col: str, row: int):
    token = raw.strip()
    if token.lower() in _MISSING_TOKENS:
        return math.nan
    try:
        return float(token)
    except ValueError:
        raise NonNumeric(f"column {col!r}, data row {row + 1}: cannot parse {raw!r}") from None


def load_panel(csv_text, schema: ColumnSchema) -> TimeSeriesPanel:
    """Parse CSV text (or a text stream) into a panel.

    Rows with missing values in mapped columns are trimmed from either end of the
    file; a missing value between the first and last complete rows raises
    :class:`InteriorGap`.
    """
    if not isinstance(csv_text, str):
        csv_text = csv_text.read()
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty CSV input") from None
    index = {name: i for i, name in enumerate(header)}
    roles = [("y", (schema.y,)), ("shock", (schema.shock,)), ("control", schema.controls), ("driver", schema.drivers)]
    if schema.time is not None:
        roles.append(("time", (schema.time,)))
    for role, names in roles:
        for name in names:
            if name not in index:
                raise MissingColumn(f"{role} column {name!r} not found in header {header}")

    cols = schema.numeric_columns
    rows, stamps = [], []
    for r, rec in enumerate(reader):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) < len(header):
            rec = rec + [""] * (len(header) - len(rec))
        rows.append([_parse_cell(rec[index[c]], c, r) for c in cols])
        stamps.append(rec[index[schema.time]].strip() if schema.time is not None else r)
    if not rows:
        raise DataError("CSV has a header but no data rows")
    data = np.array(rows, dtype=float)
    complete = ~np.isnan(data).any(axis=1)
    if not complete.any():
        raise DataError("no row has all mapped columns present")
    first = int(np.argmax(complete))
    last = len(complete) - 1 - int(np.argmax(complete[::-1]))
    if not complete[first : last + 1].all():
        bad = first + int(np.argmin(complete[first : last + 1]))
        raise InteriorGap(f"missing value inside the sample at data row {bad + 1}")
    data = data[first : last + 1]
    stamps = stamps[first : last + 1]
    m, d = len(schema.controls), len(schema.drivers)
    return TimeSeriesPanel(
        timestamps=tuple(stamps),
        y=data[:, 0],
        shock=data[:, 1],
        controls=data[:, 2 : 2 + m],
        drivers=data[:, 2 + m : 2 + m + d],
        control_names=schema.controls,
        driver_names=schema.drivers,
        y_name=schema.y,
        shock_name=schema.shock,
    )


def write_panel(panel: TimeSeriesPanel, time_name: str = "date") -> str:
    """Serialize a panel to CSV text; floats use shortest round-trip repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([time_name, panel.y_name, panel.shock_name, *panel.control_names, *panel.driver_names])
    for t in range(panel.T):
        vals = [panel.y[t], panel.shock[t], *panel.controls[t], *panel.drivers[t]]
        w.writerow([panel.timestamps[t], *(repr(float(v)) for v in vals)])
    return buf.getvalue()


def schema_for(panel: TimeSeriesPanel, time_name: str = "date") -> ColumnSchema:
    return ColumnSchema(
        y=panel.y_name,
        shock=panel.shock_name,
        controls=panel.control_names,
        drivers=panel.driver_names,
        time=time_name,
    )
