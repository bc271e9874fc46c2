"""Convolutions, activations and normalization."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gscnn.layers import (
    ConstrainedFilterTriple,
    HarmonicFilter,
    LayerTriple,
    channelwise_tensor_activation,
    complex_relu,
    compose_layer,
    constrained_as_unconstrained,
    constrained_conv,
    conv_s2_axisym,
    conv_s2_to_so3,
    conv_so3,
    fragment_norm,
    fragment_norms,
    generalized_conv,
    pointwise_activation,
    tensor_activation,
    tensor_output_type,
)
from gscnn.mixing import mixing_set
from gscnn.sampling import SO3Grid, so3_inverse
from gscnn.signals import (
    ChannelStack,
    GeneralizedSignal,
    SignalType,
    SphereHarmonic,
    random_rotation,
    random_signal,
    relative_error,
    rotate_harmonic,
)
from gscnn.so3 import Rotation, clebsch_gordan


def _generalized(tau, seed):
    rng = np.random.default_rng(seed)
    return GeneralizedSignal(
        [rng.normal(size=(2 * l + 1, t)) + 1j * rng.normal(size=(2 * l + 1, t)) for l, t in enumerate(tau)]
    )


def _equivariance(op, f, rho):
    return relative_error(op(rotate_harmonic(f, rho)), rotate_harmonic(op(f), rho))


def _axisym(L, seed):
    psi = random_signal(L, "sphere", seed)
    return psi.map(lambda c: np.where(np.arange(c.shape[0])[:, None] == c.shape[0] // 2, c, 0))


# ---------------------------------------------------------------------------
# convolutions
# ---------------------------------------------------------------------------


def test_conv_s2_axisym_equivariant():
    f, psi, rho = random_signal(10, "sphere", 1), _axisym(10, 2), random_rotation(3)
    assert _equivariance(lambda x: conv_s2_axisym(x, psi), f, rho) < 1e-13


def test_conv_s2_axisym_rejects_general_filter():
    with pytest.raises(ValueError):
        conv_s2_axisym(random_signal(4, "sphere", 1), random_signal(4, "sphere", 2))


def test_conv_s2_to_so3_equivariant_and_matches_correlation():
    L = 6
    f, psi = random_signal(L, "sphere", 1), random_signal(L, "sphere", 2)
    g = conv_s2_to_so3(f, psi)
    assert g.N == L
    assert _equivariance(lambda x: conv_s2_to_so3(x, psi), f, random_rotation(4)) < 1e-13
    # g(rho) = <f, R_rho psi>, evaluated in harmonic space
    grid = SO3Grid(L)
    vals = so3_inverse(g, grid).values
    for i, j, k in [(0, 0, 0), (2, 5, 7), (5, 10, 3)]:
        rho = Rotation(grid.alphas[j], grid.betas[i], grid.gammas[k])
        rp = rotate_harmonic(psi, rho)
        ref = sum(np.vdot(rp[l], f[l]) for l in range(L))
        assert abs(vals[i, j, k] - ref) < 1e-12


def test_conv_so3_equivariant_with_azimuthal_truncation():
    f = random_signal(8, "so3", 1, N=3)
    psi = random_signal(8, "so3", 2, N=3)
    for N_out in (1, 2, 3):
        op = lambda x: conv_so3(x, psi, N_out=N_out)  # noqa: E731
        assert op(f).N == N_out
        assert _equivariance(op, f, random_rotation(N_out)) < 1e-13


def test_conv_bandlimit_mismatch():
    with pytest.raises(ValueError):
        conv_s2_to_so3(random_signal(4, "sphere", 1), random_signal(5, "sphere", 1))


@given(st.integers(1, 7), st.integers(1, 4), st.integers(1, 4), st.integers(0, 1000))
def test_generalized_conv_equivariant(L, a, b, seed):
    f = _generalized(SignalType.uniform(L, a), seed)
    psi = HarmonicFilter.random(f.type, SignalType.uniform(L, b), seed + 1)
    assert _equivariance(lambda x: generalized_conv(x, psi), f, random_rotation(seed)) < 1e-12


def test_generalized_conv_type_check_and_identity():
    f = _generalized(SignalType((1, 2)), 0)
    assert generalized_conv(f, HarmonicFilter.identity(f.type)).allclose(f, atol=0)
    with pytest.raises(ValueError):
        generalized_conv(f, HarmonicFilter.identity(SignalType((1, 1))))


@given(st.integers(1, 8), st.integers(1, 4), st.integers(1, 3), st.integers(1, 4), st.integers(0, 100))
def test_constrained_conv_matches_assembled_filter(L, K, tg, J, seed):
    rng = np.random.default_rng(seed)
    tau_g = SignalType(rng.integers(1, tg + 1, L))
    tau_h = SignalType(rng.integers(1, 3, L))
    w = ConstrainedFilterTriple.random(tau_g, tau_h, K, J, seed)
    s = ChannelStack([_generalized(tau_g, seed + k) for k in range(K)])
    out = constrained_conv(s, w)
    ref = generalized_conv(s.concatenated(), constrained_as_unconstrained(w))
    assert relative_error(ref, out.concatenated()) < 1e-12


def test_constrained_conv_parameter_saving():
    w = ConstrainedFilterTriple.random(SignalType.uniform(4, 6), SignalType.uniform(4, 2), 3, 3, 0)
    assert w.parameter_count() < w.unconstrained_parameter_count()
    assert constrained_as_unconstrained(w).parameter_count() == w.unconstrained_parameter_count()


def test_constrained_conv_validation():
    w = ConstrainedFilterTriple.random(SignalType((1, 1)), SignalType((1, 1)), 2, 2, 0)
    with pytest.raises(ValueError):
        constrained_conv(ChannelStack([_generalized(SignalType((1, 1)), 0)]), w)
    with pytest.raises(ValueError):
        constrained_conv(ChannelStack([_generalized(SignalType((1, 2)), k) for k in range(2)]), w)


# ---------------------------------------------------------------------------
# tensor-product activation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["full", "mst", "rmst"])
def test_tensor_activation_equivariant(kind):
    L = 7
    f = _generalized(SignalType((1, 2, 1, 2, 1, 1, 2)), 5)
    P = mixing_set(L, kind)
    g = tensor_activation(f, P)
    assert g.type == tensor_output_type(f.type, P)
    assert _equivariance(lambda x: tensor_activation(x, P), f, random_rotation(8)) < 1e-12


def test_tensor_activation_matches_dense_contraction():
    L = 4
    f = _generalized(SignalType((1, 2, 1, 2)), 2)
    P = mixing_set(L, "full")
    g = tensor_activation(f, P)
    for l in range(L):
        cols = []
        for a, b in P[l]:
            C = clebsch_gordan(a, b, l).dense()
            cols.append(np.einsum("abm,at,bs->mts", C, f[a], f[b]).reshape(2 * l + 1, -1))
        np.testing.assert_allclose(g[l], np.concatenate(cols, axis=1), atol=1e-13)


def test_channelwise_activation_and_single_precision():
    s = ChannelStack([random_signal(5, "sphere", k, dtype=np.complex64) for k in range(2)])
    out = channelwise_tensor_activation(s, mixing_set(5, "mst"))
    assert out.K == 2 and out[0].dtype == np.complex64


def test_tensor_activation_bandlimit_mismatch():
    with pytest.raises(ValueError):
        tensor_activation(random_signal(4, "sphere", 0), mixing_set(5))


# ---------------------------------------------------------------------------
# pointwise activations
# ---------------------------------------------------------------------------


def test_complex_relu():
    z = np.array([1 - 2j, -3 + 4j, -1 - 1j])
    np.testing.assert_array_equal(complex_relu(z), [1 + 0j, 4j, 0])


def test_pointwise_square_is_exactly_equivariant():
    f = random_signal(8, "sphere", 1)
    op = lambda x: pointwise_activation(x, np.square, 2, L_out=15)  # noqa: E731
    assert _equivariance(op, f, random_rotation(2)) < 1e-12
    g = random_signal(5, "so3", 1, N=2)
    op = lambda x: pointwise_activation(x, np.square, 2, L_out=9)  # noqa: E731
    assert _equivariance(op, g, random_rotation(2)) < 1e-12


@pytest.mark.parametrize("kind", ["sphere", "so3"])
def test_relu_error_falls_with_oversampling(kind):
    f = random_signal(12, kind, 3, N=4 if kind == "so3" else None)
    rho = random_rotation(1)
    errs = [_equivariance(lambda x: pointwise_activation(x, complex_relu, c), f, rho) for c in (1, 2, 4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] > 0.05


def test_fast_grid_matches_minimal_grid_for_exact_maps():
    f = random_signal(6, "sphere", 2)
    a = pointwise_activation(f, np.square, 2, L_out=11, fast_grid=True)
    b = pointwise_activation(f, np.square, 2, L_out=11, fast_grid=False)
    assert relative_error(b, a) < 1e-13


def test_pointwise_validation():
    f = random_signal(4, "sphere", 0)
    with pytest.raises(ValueError):
        pointwise_activation(f, complex_relu, 0)
    with pytest.raises(ValueError):
        pointwise_activation(f, complex_relu, 1.5)
    with pytest.raises(TypeError):
        pointwise_activation(_generalized(SignalType((2, 2)), 0), complex_relu)


# ---------------------------------------------------------------------------
# normalization and composition
# ---------------------------------------------------------------------------


def test_fragment_norm_equivariant_and_unit():
    s = ChannelStack([_generalized(SignalType((1, 2, 3)), k) for k in range(2)])
    stats = fragment_norms(s)
    out = fragment_norm(s, stats)
    for c in out:
        for frag in c.fragments:
            np.testing.assert_allclose(np.linalg.norm(frag, axis=0), 1.0)
    rho = random_rotation(5)
    rs = rotate_harmonic(s, rho)
    # norms are invariant, so normalizing commutes with rotation
    lhs = fragment_norm(rs, fragment_norms(rs))
    assert relative_error(lhs, rotate_harmonic(out, rho)) < 1e-13


def test_fragment_norm_validation():
    s = ChannelStack([_generalized(SignalType((1, 2)), 0)])
    with pytest.raises(ValueError):
        fragment_norm(s, [[np.ones(1), np.array([1.0, 0.0])]])
    with pytest.raises(ValueError):
        fragment_norm(s, [[np.ones(1), np.ones(3)]])
    with pytest.raises(ValueError):
        fragment_norm(s, [])


def test_compose_layer_order():
    f = random_signal(6, "sphere", 0)
    P = mixing_set(6, "mst")
    psi = HarmonicFilter.random(tensor_output_type(f.type, P), SignalType.sphere(6), 1)
    layer = LayerTriple(
        first=lambda x: x * 2.0,
        activation=lambda x: tensor_activation(x, P),
        second=lambda x: SphereHarmonic.from_generalized(generalized_conv(x, psi)),
    )
    out = compose_layer(layer, f)
    ref = generalized_conv(tensor_activation(f * 2.0, P), psi)
    assert relative_error(ref, out) == 0.0
    assert _equivariance(lambda x: compose_layer(layer, x), f, random_rotation(3)) < 1e-12
    assert compose_layer(LayerTriple(), f) is f
