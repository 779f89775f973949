import json

import numpy as np

from clusterlp.data import EstimationConfig
from clusterlp.export import (
    cluster_mean_summary,
    config_hash,
    csv_text,
    dump_json,
    irf_csv,
    irf_to_dict,
    read_csv_rows,
    selection_summary,
    selection_to_dict,
)
from clusterlp.selection import select_clusters
from clusterlp.synthetic import load_example


def test_csv_text_repr_floats_and_metadata():
    text = csv_text(["a", "b"], [(0.1, np.nan), (1, 2.5)], seed=3, config={"x": 1})
    lines = text.splitlines()
    assert lines[1] == "0.1,nan" and lines[2] == "1,2.5"
    assert lines[-1].startswith("# clusterlp ") and "seed=3" in lines[-1] and config_hash({"x": 1}) in lines[-1]
    assert read_csv_rows(text) == [{"a": "0.1", "b": "nan"}, {"a": "1", "b": "2.5"}]


def test_json_nan_becomes_null():
    assert json.loads(dump_json({"v": np.array([1.0, np.nan])})) == {"v": [1.0, None]}


def test_config_hash_stable():
    assert config_hash(EstimationConfig()) == config_hash(EstimationConfig())
    assert config_hash(EstimationConfig()) != config_hash(EstimationConfig(H=3, H_tilde=2))


def test_report_serialization():
    panel = load_example()
    rep = select_clusters(panel, EstimationConfig(H=6, H_tilde=3, K_max=4))
    d = json.loads(dump_json(selection_to_dict(rep)))
    assert d["K_hat"] == rep.K_hat and len(d["iterations"]) == len(rep.iterations)
    irf = json.loads(dump_json(irf_to_dict(rep.irf)))
    assert np.array(irf["omega_beta"]).shape == (rep.K_hat * 7, rep.K_hat * 7)
    assert len(read_csv_rows(irf_csv(rep.irf))) == rep.K_hat * 7
    assert selection_summary(rep).startswith(f"selected K = {rep.K_hat}")
    summ = cluster_mean_summary(panel, rep)
    labels = [c["labels"]["mpu"] for c in summ["clusters"]]
    if rep.K_hat >= 2:
        assert labels.count("low") == 1 and labels.count("high") == 1
