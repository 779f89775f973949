from .dgp import (
    DGPS,
    AbsValDGPSpec,
    ArmaSpec,
    BivariateThresholdDGPSpec,
    ConstantDGPSpec,
    SimulatedPath,
    ThresholdDGPSpec,
    VarmaSpec,
    logistic_weights,
    make_dgp,
    path_to_panel,
    simulate,
    simulate_absval,
    simulate_arma,
    simulate_batch,
    simulate_bivariate_threshold,
    simulate_univariate_threshold,
    simulate_varma,
)
from .car import CarTable, compute_car, forward_responses
from .montecarlo import ExperimentConfig, MonteCarloResult, car_agreement, run_montecarlo, write_outputs

__all__ = [
    "DGPS",
    "AbsValDGPSpec",
    "ArmaSpec",
    "BivariateThresholdDGPSpec",
    "ConstantDGPSpec",
    "SimulatedPath",
    "ThresholdDGPSpec",
    "VarmaSpec",
    "logistic_weights",
    "make_dgp",
    "path_to_panel",
    "simulate",
    "simulate_absval",
    "simulate_arma",
    "simulate_batch",
    "simulate_bivariate_threshold",
    "simulate_univariate_threshold",
    "simulate_varma",
    "CarTable",
    "compute_car",
    "forward_responses",
    "ExperimentConfig",
    "MonteCarloResult",
    "car_agreement",
    "run_montecarlo",
    "write_outputs",
]
