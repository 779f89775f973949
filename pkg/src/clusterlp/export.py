"""Serialization of estimates, selection reports and cluster summaries.

All numeric output is deterministic: floats use ``repr`` (shortest round-trip)
and JSON keys are emitted in a fixed order, so identical runs produce
byte-identical files. Wall-clock timings are kept out of these files.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import ClusterAssignment
from .data import EstimationConfig, TimeSeriesPanel
from .errors import ConfigError
from .lp import IRFPanel
from .selection import SelectionReport


def _num(v):
    """JSON/CSV-safe scalar: NaN and infinities become ``None``."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)})
    return _num(obj)


def dump_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def config_hash(config) -> str:
    payload = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _cell(v) -> str:
    v = _num(v)
    if v is None:
        return "nan"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(header, rows, *, seed=None, config=None) -> str:
    """CSV with a trailing ``# clusterlp ...`` metadata comment line."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    meta = [f"clusterlp {__version__}"]
    if seed is not None:
        meta.append(f"seed={seed}")
    if config is not None:
        meta.append(f"config={config_hash(config)}")
    buf.write("# " + " ".join(meta) + "\n")
    return buf.getvalue()


def read_csv_rows(text: str) -> list[dict]:
    """Inverse of :func:`csv_text` (comment lines skipped, values left as strings)."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


# --- impulse responses -------------------------------------------------------


def irf_rows(irf: IRFPanel):
    for k in range(irf.K):
        for h in range(irf.H + 1):
            yield (k + 1, h, irf.beta[k, h], irf.stderr[k, h], int(irf.cluster_sizes[k]), bool(irf.flagged[k, h]))


def irf_csv(irf: IRFPanel, **meta) -> str:
    return csv_text(["cluster", "h", "beta", "stderr", "n_obs", "flagged"], irf_rows(irf), **meta)


def irf_to_dict(irf: IRFPanel) -> dict:
    return {
        "K": irf.K,
        "H": irf.H,
        "N": irf.N,
        "bandwidth": irf.bandwidth,
        "beta": irf.beta,
        "stderr": irf.stderr,
        "omega_beta": irf.omega_beta,
        "omega_order": "cluster-major: index (k-1)*(H+1)+h",
        "cluster_sizes": irf.cluster_sizes,
        "flagged": irf.flagged,
        "gamma": irf.gamma,
        "gamma_names": list(irf.gamma_names),
        "metadata": irf.metadata,
    }


# --- selection ---------------------------------------------------------------


def selection_to_dict(report: SelectionReport) -> dict:
    return {
        "K_hat": report.K_hat,
        "config": dataclasses.asdict(report.config),
        "iterations": [
            {
                "K": it.K,
                "valid": it.valid,
                "cluster_sizes": it.cluster_sizes,
                "centroids": it.centroids,
                "decision": it.decision,
                "tests": [dataclasses.asdict(t) for t in it.tests],
            }
            for it in report.iterations
        ],
        "rule": {"centroids": report.rule.centroids, "center": report.rule.center, "scale": report.rule.scale},
    }


def selection_summary(report: SelectionReport) -> str:
    lines = [f"selected K = {report.K_hat}"]
    for it in report.iterations:
        n_rej = sum(t.reject for t in it.tests)
        tested = f", {n_rej}/{len(it.tests)} pairs reject" if it.tests else ""
        lines.append(f"  K={it.K:<3d} sizes={it.cluster_sizes}{tested}: {it.decision}")
    return "\n".join(lines) + "\n"


def assignment_csv(timestamps, assignment: ClusterAssignment, **meta) -> str:
    return csv_text(["timestamp", "cluster"], zip(timestamps, assignment.labels.tolist()), **meta)


def _level_names(K: int) -> list[str]:
    if K == 1:
        return ["moderate"]
    if K == 2:
        return ["low", "high"]
    return ["low"] + ["moderate"] * (K - 2) + ["high"]


def cluster_mean_summary(panel: TimeSeriesPanel, report: SelectionReport) -> dict:
    """Per-cluster means of the raw drivers with a low/moderate/high label per driver.

    Labels rank the cluster means of each driver: the smallest is "low", the
    largest "high", anything in between "moderate".
    """
    cfg = report.config
    rows = np.arange(cfg.first_row(), cfg.last_row(panel.T) + 1)
    Z = panel.drivers[rows - cfg.driver_lag]
    labels = report.assignment.labels
    K = report.assignment.K
    means = np.array([Z[labels == k].mean(axis=0) for k in range(1, K + 1)])
    names = _level_names(K)
    levels = np.empty(means.shape, dtype=object)
    for j in range(Z.shape[1]):
        order = np.argsort(means[:, j], kind="stable")
        for rank, k in enumerate(order):
            levels[k, j] = names[rank]
    return {
        "drivers": list(panel.driver_names),
        "clusters": [
            {
                "cluster": k + 1,
                "n_obs": int((labels == k + 1).sum()),
                "means": dict(zip(panel.driver_names, means[k])),
                "labels": dict(zip(panel.driver_names, levels[k].tolist())),
            }
            for k in range(K)
        ],
    }


def estimation_config_from_dict(d: dict) -> EstimationConfig:
    known = {f.name for f in dataclasses.fields(EstimationConfig)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown estimation settings: {unknown}")
    return EstimationConfig(**d)
