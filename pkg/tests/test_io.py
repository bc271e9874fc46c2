import json

import numpy as np
import pytest

from gscnn.filters import DiracFilterS2, DiracFilterSO3
from gscnn.io import FormatError, read_filter_config, read_signal_csv, write_signal_csv
from gscnn.signals import GeneralizedSignal, RotationHarmonic, SphereHarmonic, random_signal


@pytest.mark.parametrize(
    "signal",
    [
        random_signal(5, "sphere", 1),
        random_signal(5, "so3", 2, N=3),
        GeneralizedSignal([np.ones((1, 2)) * 0.1, np.zeros((3, 0)), np.full((5, 1), 1 / 3 + 2j)]),
    ],
)
def test_signal_roundtrip_exact(signal, tmp_path):
    path = tmp_path / "f.csv"
    write_signal_csv(signal, path)
    back = read_signal_csv(path)
    assert type(back) is type(signal)
    assert back.type == signal.type
    assert back.allclose(signal, atol=0)


def test_signal_csv_is_stable(tmp_path):
    f = random_signal(3, "sphere", 4)
    write_signal_csv(f, tmp_path / "a.csv")
    write_signal_csv(read_signal_csv(tmp_path / "a.csv"), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_bad_signal_file(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# kind=sphere\nl,m,t,re,im\n0,0,0,1,0\n")
    with pytest.raises(FormatError):
        read_signal_csv(p)


def test_filter_configs(tmp_path):
    p = tmp_path / "s2.json"
    p.write_text(json.dumps({"domain": "s2", "rings": [{"theta": 0.0, "weights": [1, 1, 1]}, {"theta": 0.4, "anchors": [1, 0], "n_phi": 3}]}))
    d = read_filter_config(p)
    assert isinstance(d, DiracFilterS2) and d.weights.shape == (2, 3)
    q = tmp_path / "so3.json"
    q.write_text(json.dumps({"domain": "so3", "betas": [0.1, 0.2], "weights": np.ones((2, 3, 1)).tolist()}))
    assert isinstance(read_filter_config(q), DiracFilterSO3)


@pytest.mark.parametrize(
    "cfg",
    [
        {"domain": "torus"},
        {"domain": "s2", "rings": [{"theta": 0.1}]},
        {"domain": "s2", "rings": [{"theta": 0.1, "weights": [1]}, {"theta": 0.2, "weights": [1, 2]}]},
        {"domain": "so3", "betas": [0.1], "weights": [1, 2]},
    ],
)
def test_bad_filter_configs(cfg, tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    with pytest.raises(FormatError):
        read_filter_config(p)
