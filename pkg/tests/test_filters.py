"""Dirac-delta filters against direct evaluation at the delta positions."""

import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gscnn.filters import (
    DiracFilterS2,
    DiracFilterSO3,
    OverParameterizationWarning,
    interpolate_ring,
    s2_dirac_to_harmonic,
    so3_dirac_to_harmonic,
)
from gscnn.layers import conv_s2_axisym
from gscnn.sampling import spherical_harmonic
from gscnn.signals import random_signal
from gscnn.so3 import Rotation, wigner_D


def test_north_pole_delta():
    psi = s2_dirac_to_harmonic(DiracFilterS2([[1.0]], [0.0]), 7)
    for l in range(7):
        expected = np.zeros(2 * l + 1)
        expected[l] = np.sqrt((2 * l + 1) / (4 * np.pi))
        np.testing.assert_allclose(psi[l][:, 0], expected, atol=1e-14)


def test_zero_weights():
    assert s2_dirac_to_harmonic(DiracFilterS2(np.zeros((2, 5)), [0.3, 1.0]), 3).norm() == 0
    assert so3_dirac_to_harmonic(DiracFilterSO3(np.zeros((2, 3, 3)), [0.3, 1.0]), 3).norm() == 0


@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 1000))
def test_s2_sifting_oracle(L, rings, seed):
    rng = np.random.default_rng(seed)
    n_phi = int(rng.integers(1, 2 * L))
    th = rng.uniform(0, np.pi, rings)
    w = rng.normal(size=(rings, n_phi))
    psi = s2_dirac_to_harmonic(DiracFilterS2(w, th), L)
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(th, ph, indexing="ij")
    for l in range(L):
        for m in range(-l, l + 1):
            ref = np.sum(w * np.conj(spherical_harmonic(l, m, T, P)))
            assert abs(psi[l][m + l, 0] - ref) < 1e-12


def test_so3_identity_delta():
    psi = so3_dirac_to_harmonic(DiracFilterSO3(np.ones((1, 1, 1)), [0.0]), 5)
    for l in range(5):
        np.testing.assert_allclose(psi.full_block(l), np.eye(2 * l + 1), atol=1e-14)


@pytest.mark.parametrize("L,N", [(3, 3), (5, 2), (4, 1)])
def test_so3_sifting_oracle(L, N, rng):
    w = rng.normal(size=(3, 2 * L - 1, 2 * N - 1))
    d = DiracFilterSO3(w, rng.uniform(0, np.pi, 3))
    psi = so3_dirac_to_harmonic(d, L, N)
    A, B, G = d.positions()
    for l in range(L):
        ref = sum(wi * wigner_D(l, Rotation(a, b, g)).entries for wi, a, b, g in zip(w.ravel(), A, B, G))
        k = min(l, N - 1)
        np.testing.assert_allclose(psi.block(l), ref[:, l - k : l + k + 1], atol=1e-12)


def test_linearity(rng):
    th = [0.2, 1.3]
    a, b = rng.normal(size=(2, 2, 5))
    lhs = s2_dirac_to_harmonic(DiracFilterS2(2 * a - b, th), 3)
    rhs = s2_dirac_to_harmonic(DiracFilterS2(a, th), 3) * 2 - s2_dirac_to_harmonic(DiracFilterS2(b, th), 3)
    np.testing.assert_allclose(lhs.flatten(), rhs.flatten(), atol=1e-13)


def test_constant_rings_are_axisymmetric():
    L = 5
    w = np.repeat([[1.0], [0.4], [-0.3]], 2 * L - 1, axis=1)
    psi = s2_dirac_to_harmonic(DiracFilterS2(w, [0.0, 0.5, 1.1]), L)
    for l in range(L):
        col = psi[l][:, 0].copy()
        col[l] = 0
        assert np.abs(col).max() < 1e-13
    conv_s2_axisym(random_signal(L, "sphere", 0), psi, atol=1e-12)


def test_over_parameterization_warning():
    with pytest.warns(OverParameterizationWarning):
        s2_dirac_to_harmonic(DiracFilterS2(np.ones((1, 9)), [0.5]), 4)
    with pytest.warns(OverParameterizationWarning):
        so3_dirac_to_harmonic(DiracFilterSO3(np.ones((1, 3, 5)), [0.5]), 3, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        s2_dirac_to_harmonic(DiracFilterS2(np.ones((1, 7)), [0.5]), 4)


def test_anchor_interpolation():
    np.testing.assert_allclose(interpolate_ring([[1.0, 3.0]], 4), [[1.0, 2.0, 3.0, 2.0]])
    d = DiracFilterS2.from_anchors([[1.0, 3.0], [0.0, 2.0]], [0.1, 0.9], 4)
    assert d.weights.shape == (2, 4)


def test_geometry_validation():
    with pytest.raises(ValueError):
        DiracFilterS2(np.ones((2, 3)), [0.1])
    with pytest.raises(ValueError):
        DiracFilterS2(np.ones((1, 3)), [4.0])
    with pytest.raises(ValueError):
        DiracFilterSO3(np.ones((2, 3)), [0.1, 0.2])
    with pytest.raises(ValueError):
        so3_dirac_to_harmonic(DiracFilterSO3(np.ones((1, 1, 1)), [0.1]), 3, 4)
