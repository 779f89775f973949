"""Command-line interface: ``clusterlp <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical error.
Set ``CLP_LOG`` (DEBUG, INFO, WARNING, ...) to control log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .clustering import ClusterRule
from .data import ColumnSchema, EstimationConfig, load_panel, standardize, write_panel
from .errors import ClusterLPError, ConfigError, DataError, NumericalError
from .export import (
    assignment_csv,
    csv_text,
    cluster_mean_summary,
    dump_json,
    estimation_config_from_dict,
    irf_csv,
    irf_to_dict,
    selection_summary,
    selection_to_dict,
    write_text,
)
from .lp import linear_lp, state_dependent_lp, state_indicator
from .selection import select_clusters
from .simulation import ExperimentConfig, compute_car, make_dgp, path_to_panel, run_montecarlo, simulate, write_outputs
from .synthetic import SCHEMA as EXAMPLE_SCHEMA
from .synthetic import example_csv_text

log = logging.getLogger("clusterlp")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are configuration errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _csv_list(s: str) -> tuple[str, ...]:
    return tuple(c.strip() for c in s.split(",") if c.strip())


def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return cfg


# --- shared option groups ----------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--out", help="output directory")


def _add_panel_options(p):
    p.add_argument("--input", help="CSV file with one row per period")
    p.add_argument("--example", action="store_true", help="use the bundled synthetic panel")
    p.add_argument("--time-col", help="timestamp column")
    p.add_argument("--y-col")
    p.add_argument("--shock-col")
    p.add_argument("--control-cols", type=_csv_list, help="comma-separated")
    p.add_argument("--driver-cols", type=_csv_list, help="comma-separated")


def _add_estimation_options(p):
    p.add_argument("--H", type=int, help="maximum horizon")
    p.add_argument("--H-tilde", dest="H_tilde", type=int, help="Wald test horizon")
    p.add_argument("--K-max", dest="K_max", type=int, help="initial number of clusters")
    p.add_argument("--alpha", type=float)
    p.add_argument("--bandwidth", help="HAC bandwidth: integer or 'auto'")


def _bandwidth(v):
    if v is None or v == "auto":
        return v
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"bandwidth must be an integer or 'auto', got {v!r}") from None


def _load_panel(args, cfg):
    cols = dict(cfg.get("columns", {}))
    for key, flag in (("time", "time_col"), ("y", "y_col"), ("shock", "shock_col"), ("controls", "control_cols"), ("drivers", "driver_cols")):
        if getattr(args, flag) is not None:
            cols[key] = getattr(args, flag)
    source = args.input or cfg.get("input")
    if args.example:
        text = example_csv_text()
        schema = ColumnSchema(**{**_schema_dict(EXAMPLE_SCHEMA), **cols})
    else:
        if source is None:
            raise ConfigError("no input: pass --input PATH or --example")
        try:
            text = Path(source).read_text()
        except OSError as e:
            raise DataError(f"cannot read input {source}: {e}") from None
        if "y" not in cols or "shock" not in cols:
            raise ConfigError("column mapping needs --y-col and --shock-col (or a 'columns' config section)")
        schema = ColumnSchema(**cols)
    return load_panel(text, schema), schema


def _schema_dict(schema: ColumnSchema) -> dict:
    return {"y": schema.y, "shock": schema.shock, "controls": schema.controls, "drivers": schema.drivers, "time": schema.time}


def _estimation_config(args, cfg) -> EstimationConfig:
    d = dict(cfg.get("estimation", {}))
    for name in ("H", "H_tilde", "K_max", "alpha"):
        if getattr(args, name, None) is not None:
            d[name] = getattr(args, name)
    if getattr(args, "bandwidth", None) is not None:
        d["hac_bandwidth"] = _bandwidth(args.bandwidth)
    if args.seed is not None:
        d["seed"] = args.seed
    return estimation_config_from_dict(d)


def _out_dir(args, cfg, default) -> Path:
    return Path(args.out or cfg.get("out") or default)


# --- subcommands ---------------------------------------------------------------


def cmd_estimate(args) -> int:
    cfg = _read_config(args.config)
    panel, _ = _load_panel(args, cfg)
    config = _estimation_config(args, cfg)
    report = select_clusters(panel, config)
    out = _out_dir(args, cfg, "clusterlp_estimate")
    meta = {"seed": config.seed, "config": config}
    rows = np.arange(config.first_row(), config.last_row(panel.T) + 1)
    write_text(out / "irf.csv", irf_csv(report.irf, **meta))
    write_text(out / "irf.json", dump_json(irf_to_dict(report.irf)))
    write_text(out / "selection.json", dump_json(selection_to_dict(report)))
    write_text(out / "selection.txt", selection_summary(report))
    write_text(out / "assignment.csv", assignment_csv([panel.timestamps[t] for t in rows], report.assignment, **meta))
    write_text(out / "cluster_means.json", dump_json(cluster_mean_summary(panel, report)))
    print(selection_summary(report), end="")
    return 0


def cmd_state_dependent(args) -> int:
    cfg = _read_config(args.config)
    panel, _ = _load_panel(args, cfg)
    config = _estimation_config(args, cfg)
    state = args.state_col or cfg.get("state_col") or panel.driver_names[0]
    if state not in panel.driver_names:
        raise ConfigError(f"state column {state!r} is not one of the drivers {panel.driver_names}")
    z = panel.drivers[:, panel.driver_names.index(state)]
    if not args.raw_state:
        z = standardize(z)
    threshold = args.threshold if args.threshold is not None else cfg.get("threshold", 0.0)
    indicator = state_indicator(z, threshold=threshold, lag=config.driver_lag)
    irf = state_dependent_lp(panel, indicator, config)
    lin = linear_lp(panel, config)
    out = _out_dir(args, cfg, "clusterlp_state_dependent")
    meta = {"seed": config.seed, "config": config}
    write_text(out / "state_irf.csv", irf_csv(irf, **meta))
    write_text(out / "linear_irf.csv", irf_csv(lin, **meta))
    write_text(
        out / "state_dependent.json",
        dump_json({"state": state, "threshold": threshold, "standardized": not args.raw_state, "regime_labels": {"1": "I=1 (above)", "2": "I=0 (below)"}, "state_dependent": irf_to_dict(irf), "linear": irf_to_dict(lin)}),
    )
    print(f"state {state} > {threshold}: share {irf.metadata['regime_share']:.3f}")
    return 0


def _dgp_spec(name, params):
    try:
        return make_dgp(name, **(params or {}))
    except KeyError as e:
        raise ConfigError(str(e.args[0])) from None
    except TypeError as e:
        raise ConfigError(f"bad DGP parameters: {e}") from None


def cmd_simulate(args) -> int:
    cfg = _read_config(args.config)
    name = args.dgp or cfg.get("dgp", "univariate_threshold")
    T = args.T or cfg.get("T", 2000)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    path = simulate(_dgp_spec(name, cfg.get("dgp_params")), T, seed, burn_in=cfg.get("burn_in", 10_000))
    panel = path_to_panel(path)
    out = _out_dir(args, cfg, "clusterlp_simulate")
    write_text(out / "simulated.csv", write_panel(panel, time_name="t"))
    params = csv_text(["t", "beta", "gamma1", "gamma2"], zip(range(T), path.beta, path.gamma1, path.gamma2), seed=seed)
    write_text(out / "parameters.csv", params)
    print(f"simulated {name}: T={T}, seed={seed} -> {out}")
    return 0


def _rule_from_selection(path) -> ClusterRule:
    try:
        d = json.loads(Path(path).read_text())["rule"]
        return ClusterRule(np.array(d["centroids"], dtype=float), np.array(d["center"], dtype=float), np.array(d["scale"], dtype=float))
    except (OSError, KeyError, ValueError, TypeError) as e:
        raise ConfigError(f"cannot read a cluster rule from {path}: {e}") from None


def cmd_car(args) -> int:
    cfg = _read_config(args.config)
    name = args.dgp or cfg.get("dgp", "univariate_threshold")
    spec = _dgp_spec(name, cfg.get("dgp_params"))
    if args.rule or cfg.get("rule"):
        rule = _rule_from_selection(args.rule or cfg["rule"])
    else:
        d = spec.varma.d if hasattr(spec, "varma") else 1
        rule = ClusterRule(np.zeros((1, d)), np.zeros(d), np.ones(d))
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    H = args.H if args.H is not None else cfg.get("H", 10)
    M = args.M if args.M is not None else cfg.get("M", 1000)
    T = args.T if args.T is not None else cfg.get("T", 2000)
    delta = args.delta if args.delta is not None else cfg.get("delta", 1.0)
    tab = compute_car(spec, rule, delta=delta, H=H, M=M, T=T, seed=seed, burn_in=cfg.get("burn_in", 10_000))
    out = _out_dir(args, cfg, "clusterlp_car")
    rows = [(k + 1, h, tab.car[k, h], tab.stderr[k, h], tab.cmr[k, h], int(tab.counts[k])) for k in range(tab.K) for h in range(H + 1)]
    settings = {"dgp": name, "H": H, "M": M, "T": T, "delta": delta}
    write_text(out / "car.csv", csv_text(["cluster", "h", "car", "stderr", "cmr", "n_dates"], rows, seed=seed, config=settings))
    print(f"CAR for {name}: K={tab.K}, M={M} -> {out}")
    return 0


def cmd_montecarlo(args) -> int:
    cfg = _read_config(args.config)
    out = Path(args.out or cfg.pop("out", None) or "clusterlp_montecarlo")
    for name in ("dgp", "T", "M", "K_max", "H", "H_tilde", "alpha", "car_reps", "jobs", "seed"):
        v = getattr(args, name, None)
        if v is not None:
            cfg[name] = v
    if args.bandwidth is not None:
        cfg["bandwidth"] = _bandwidth(args.bandwidth)
    exp = ExperimentConfig.from_dict(cfg)
    exp.spec()
    result = run_montecarlo(exp)
    write_outputs(result, out)
    freq = ", ".join(f"K={K}: {f:.3f}" for K, f in result.k_frequency().items() if f)
    print(f"{exp.dgp}: {len(result.ok)}/{exp.M} replications, modal K = {result.modal_k()} ({freq}) -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clusterlp", description="Clustered local projections.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="select clusters and estimate IRFs from a CSV panel")
    _add_common(p)
    _add_panel_options(p)
    _add_estimation_options(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("state-dependent", help="two-regime state-dependent LP plus linear LP")
    _add_common(p)
    _add_panel_options(p)
    _add_estimation_options(p)
    p.add_argument("--state-col", help="driver defining the state (default: first driver)")
    p.add_argument("--threshold", type=float, help="state is 1 when the lagged index exceeds this (default 0)")
    p.add_argument("--raw-state", action="store_true", help="do not standardize the state index")
    p.set_defaults(func=cmd_state_dependent)

    p = sub.add_parser("simulate", help="simulate one path from a DGP")
    _add_common(p)
    p.add_argument("--dgp")
    p.add_argument("--T", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("car", help="conditional average response by two-path simulation")
    _add_common(p)
    p.add_argument("--dgp")
    p.add_argument("--rule", help="selection.json written by 'estimate' (default: one cluster)")
    p.add_argument("--H", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--delta", type=float)
    p.set_defaults(func=cmd_car)

    p = sub.add_parser("montecarlo", help="run a Monte Carlo selection experiment")
    _add_common(p)
    p.add_argument("--dgp")
    p.add_argument("--T", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--K-max", dest="K_max", type=int)
    p.add_argument("--H", type=int)
    p.add_argument("--H-tilde", dest="H_tilde", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--bandwidth")
    p.add_argument("--car-reps", dest="car_reps", type=int)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_montecarlo)
    return parser


def _configure_logging():
    level = os.environ.get("CLP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ClusterLPError as e:
        if isinstance(e, DataError):
            code = EXIT_DATA
        elif isinstance(e, NumericalError):
            code = EXIT_NUMERICAL
        else:
            code = EXIT_CONFIG
        print(f"clusterlp: error: {type(e).__name__}: {e}", file=sys.stderr)
        return code

if __name__ == "__main__":
    sys.exit(main())
