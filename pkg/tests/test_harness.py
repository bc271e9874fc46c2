"""Equivariance harness and the squaring oracle."""

import csv
import json

import numpy as np
import pytest

from gscnn.harness import (
    OPERATORS,
    TABLE_COLUMNS,
    TABLE_D_ROWS,
    EquivarianceConfig,
    equivariance_error,
    gaunt_squaring,
    pointwise_square,
    run_table_d,
    write_rows,
)
from gscnn.signals import SphereHarmonic, random_signal, relative_error


@pytest.mark.parametrize("op", ["s2_to_s2_conv", "s2_to_so3_conv", "so3_to_so3_conv", "tensor_gconv", "tensor_gconv_mst"])
def test_exact_operators_double(op):
    res = equivariance_error(EquivarianceConfig(op, L=8, n_signals=2, n_rotations=3, seed=1))
    assert res.trials.shape == (6,)
    assert res.mean == pytest.approx(np.mean(res.trials))
    assert res.mean < 1e-12


def test_exact_operators_single():
    res = equivariance_error(EquivarianceConfig("tensor_gconv", L=8, n_signals=2, n_rotations=2, precision="single"))
    assert 1e-9 < res.mean < 1e-5


def test_relu_decreases_for_every_trial():
    per = {}
    for c in (1, 2, 4, 8):
        cfg = EquivarianceConfig("s2_relu", L=8, n_signals=3, n_rotations=3, seed=4, oversample=c)
        per[c] = equivariance_error(cfg).trials
    for a, b in [(1, 2), (2, 4), (4, 8)]:
        assert np.all(per[b] < per[a])


def test_reproducible_and_thread_independent():
    cfg = EquivarianceConfig("so3_relu", L=6, n_signals=4, n_rotations=2, seed=9)
    a = equivariance_error(cfg).trials
    b = equivariance_error(cfg).trials
    c = equivariance_error(EquivarianceConfig("so3_relu", L=6, n_signals=4, n_rotations=2, seed=9, threads=3)).trials
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(a, c, rtol=0, atol=1e-12)
    d = equivariance_error(EquivarianceConfig("so3_relu", L=6, n_signals=4, n_rotations=2, seed=10)).trials
    assert not np.array_equal(a, d)


def test_config_validation():
    with pytest.raises(KeyError):
        EquivarianceConfig("fourier_magic")
    with pytest.raises(ValueError):
        EquivarianceConfig("s2_relu", n_signals=0)
    with pytest.raises(ValueError):
        EquivarianceConfig("s2_relu", precision="half")
    assert EquivarianceConfig("so3_relu", L=4).azimuthal == 4
    assert EquivarianceConfig("so3_relu", L=32).azimuthal == 8
    assert set(op for _, op, _ in TABLE_D_ROWS) <= set(OPERATORS)


def test_gaunt_squaring_constant():
    c = 1.7 - 0.4j
    f = SphereHarmonic.from_dict(4, {(0, 0): c})
    sq = gaunt_squaring(f)
    assert sq.L == 7
    assert sq[0][0, 0] == pytest.approx(c**2 / np.sqrt(4 * np.pi))
    assert np.allclose(sq.flatten()[1:], 0)
    assert gaunt_squaring(SphereHarmonic.zeros(3)).norm() == 0


@pytest.mark.parametrize("L", [1, 2, 5, 8])
def test_gaunt_squaring_matches_pointwise(L):
    for s in range(3):
        f = random_signal(L, "sphere", 100 * L + s)
        assert relative_error(gaunt_squaring(f), pointwise_square(f, 2)) < 1e-12


def test_run_table_small(tmp_path):
    rows = run_table_d(seed=3, L=6, n_signals=2, n_rotations=2, precision="double")
    assert [r.row_label for r in rows] == [label for label, _, _ in TABLE_D_ROWS]
    assert all(r.mean_error < 1e-12 for r in rows[:4])
    for block in (rows[4:8], rows[8:12]):
        errs = [r.mean_error for r in block]
        assert errs == sorted(errs, reverse=True)
    write_rows(rows, tmp_path / "t.csv")
    with open(tmp_path / "t.csv") as fh:
        data = list(csv.DictReader(fh))
    assert tuple(data[0]) == TABLE_COLUMNS and len(data) == 12
    assert float(data[5]["mean_error"]) == rows[5].mean_error
    write_rows(rows, tmp_path / "t.json", "json")
    js = json.loads((tmp_path / "t.json").read_text())
    assert js[5]["mean_error"] == rows[5].mean_error and set(js[0]) == set(TABLE_COLUMNS)
    with pytest.raises(ValueError):
        write_rows(rows, tmp_path / "t.xml", "xml")


@pytest.mark.xfail(
    strict=True,
    reason="exact Gauss-Legendre quadrature aliases far less once oversampled than the reference "
    "table, whose oversampled rows sit well above these values",
)
@pytest.mark.parametrize("label,op,c,target", [("S2 ReLU (2x oversampling)", "s2_relu", 2, 0.089), ("SO(3) ReLU (2x oversampling)", "so3_relu", 2, 0.098)])
def test_oversampled_relu_reference_values(label, op, c, target):
    (row,) = run_table_d(seed=0, L=32, n_signals=10, n_rotations=10, precision="single", rows=[(label, op, c)])
    assert abs(row.mean_error / target - 1) <= 0.3


@pytest.mark.parametrize("label,op,target", [("S2 ReLU", "s2_relu", 0.34), ("SO(3) ReLU", "so3_relu", 0.37)])
def test_relu_reference_values(label, op, target):
    (row,) = run_table_d(seed=0, L=32, n_signals=10, n_rotations=10, precision="single", rows=[(label, op, 1)])
    assert abs(row.mean_error / target - 1) <= 0.3
