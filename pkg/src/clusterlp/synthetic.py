"""Synthetic monthly panel shaped like a yield / policy-shock application.

Columns: ``date``, outcome ``yield5``, ``shock``, controls ``inflation`` and
``unemployment``, drivers ``mpu`` and ``macro_unc``. The response of the
outcome to the shock depends on which quadrant the two lagged drivers occupy,
so clustered LP has something to find. The numbers carry no empirical meaning.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .data import ColumnSchema, TimeSeriesPanel, load_panel, write_panel
from .statcore import rng_stream

SCHEMA = ColumnSchema(
    y="yield5",
    shock="shock",
    controls=("inflation", "unemployment"),
    drivers=("mpu", "macro_unc"),
    time="date",
)

# impact response by (high mpu, high macro_unc) quadrant
_IMPACT = {(0, 0): 0.2, (0, 1): 0.9, (1, 0): -0.1, (1, 1): 0.5}


def _months(start_year: int, start_month: int, T: int) -> list[str]:
    out = []
    y, m = start_year, start_month
    for _ in range(T):
        out.append(f"{y:04d}-{m:02d}")
        m += 1
        if m > 12:
            y, m = y + 1, 1
    return out


def make_synthetic_panel(T: int = 431, seed: int = 2024) -> TimeSeriesPanel:
    """Simulate the bundled example panel (default: 1988-02 through 2023-12)."""
    rng = rng_stream(seed, (7,))
    burn = 200
    n = T + burn
    drivers = np.zeros((n, 2))
    A = np.array([[0.9, 0.05], [0.03, 0.85]])
    for t in range(1, n):
        drivers[t] = A @ drivers[t - 1] + rng.standard_normal(2) * (0.45, 0.5)
    infl = np.zeros(n)
    unemp = np.zeros(n)
    y = np.zeros(n)
    shock = rng.standard_normal(n)
    for t in range(1, n):
        infl[t] = 0.3 + 0.85 * infl[t - 1] + 0.25 * rng.standard_normal()
        unemp[t] = 0.4 + 0.93 * unemp[t - 1] + 0.15 * rng.standard_normal()
        quad = (int(drivers[t - 1, 0] > 0), int(drivers[t - 1, 1] > 0))
        y[t] = (
            0.1
            + 0.9 * y[t - 1]
            + 0.05 * infl[t - 1]
            - 0.03 * unemp[t - 1]
            + _IMPACT[quad] * shock[t]
            + 0.2 * rng.standard_normal()
        )
    s = slice(burn, n)
    return TimeSeriesPanel(
        timestamps=tuple(_months(1988, 2, T)),
        y=y[s],
        shock=shock[s],
        controls=np.column_stack([infl[s], unemp[s]]),
        drivers=100.0 + 25.0 * drivers[s],
        control_names=SCHEMA.controls,
        driver_names=SCHEMA.drivers,
        y_name=SCHEMA.y,
        shock_name=SCHEMA.shock,
    )


def example_csv_text() -> str:
    return resources.files("clusterlp").joinpath("resources/synthetic_panel.csv").read_text()


def load_example() -> TimeSeriesPanel:
    """The bundled CSV, parsed with :data:`SCHEMA`."""
    return load_panel(example_csv_text(), SCHEMA)


if __name__ == "__main__":  # regenerate the bundled file
    print(write_panel(make_synthetic_panel()), end="")
