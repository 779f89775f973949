import json

import numpy as np
import pytest

from clusterlp.errors import ConfigError
from clusterlp.export import read_csv_rows
from clusterlp.simulation import ExperimentConfig, car_agreement, run_montecarlo, write_outputs

SMALL = dict(dgp="univariate_threshold", T=400, M=4, K_max=5, H=4, H_tilde=2, burn_in=500)


def test_serial_and_parallel_agree():
    a = run_montecarlo(ExperimentConfig(**SMALL, jobs=1))
    b = run_montecarlo(ExperimentConfig(**SMALL, jobs=2))
    assert [r.K_hat for r in a.replications] == [r.K_hat for r in b.replications]
    for ra, rb in zip(a.ok, b.ok):
        assert np.array_equal(ra.beta, rb.beta)


def test_frequencies_and_modal():
    res = run_montecarlo(ExperimentConfig(**SMALL))
    freq = res.k_frequency()
    assert sum(freq.values()) == pytest.approx(1.0)
    assert res.k_counts()[res.modal_k()] == max(res.k_counts().values())


def test_failures_are_counted():
    res = run_montecarlo(ExperimentConfig(**{**SMALL, "T": 40, "H": 30, "H_tilde": 2}))
    assert len(res.failures) == SMALL["M"] and not res.ok
    assert res.modal_k() is None


def test_outputs(tmp_path):
    res = run_montecarlo(ExperimentConfig(**{**SMALL, "car_reps": 100}))
    write_outputs(res, tmp_path)
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["succeeded"] == SMALL["M"]
    assert 0 <= report["car_agreement_rate"] <= 1
    rows = read_csv_rows((tmp_path / "k_frequency.csv").read_text())
    assert [int(r["K"]) for r in rows] == list(range(1, 6))
    irf = read_csv_rows((tmp_path / "irf_by_cluster.csv").read_text())
    assert len(irf) == sum(r.K_hat for r in res.ok) * (SMALL["H"] + 1)
    car = read_csv_rows((tmp_path / "car_by_cluster.csv").read_text())
    assert len(car) == len(irf)
    assert "seconds" in json.loads((tmp_path / "timing.json").read_text())
    # horizons 0..5 clipped to H = 4
    assert car_agreement(res).size == sum(r.K_hat for r in res.ok) * 5


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"dgp": "constant", "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig(M=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(H=2, H_tilde=5)
