"""Rotation-equivariant layer operators in harmonic space.

Linear operators act degree by degree: standard convolutions on S^2 and
SO(3), generalized convolutions mixing fragments of equal degree, and the
constrained three-factor variant. Nonlinear operators are the
Clebsch-Gordan tensor-product activation and pointwise activations
evaluated on an (optionally oversampled) grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp

from .mixing import MixingSet
from .sampling import S2Grid, SO3Grid, s2_pointwise, so3_pointwise
from .signals import ChannelStack, GeneralizedSignal, RotationHarmonic, SignalType, SphereHarmonic
from .so3 import clebsch_gordan

__all__ = [
    "HarmonicFilter",
    "ConstrainedFilterTriple",
    "LayerTriple",
    "conv_s2_to_so3",
    "conv_s2_axisym",
    "conv_so3",
    "generalized_conv",
    "tensor_activation",
    "tensor_output_type",
    "channelwise_tensor_activation",
    "constrained_conv",
    "constrained_as_unconstrained",
    "pointwise_activation",
    "complex_relu",
    "fragment_norm",
    "fragment_norms",
    "compose_layer",
    "identity",
]

_EIGHT_PI2 = 8.0 * np.pi**2


def _bump(counter, kind, flops):
    if counter is not None:
        counter.add(kind, flops)


# ---------------------------------------------------------------------------
# filter containers
# ---------------------------------------------------------------------------


class HarmonicFilter:
    """Per-degree complex matrices ``psi^l`` of shape ``tau_in[l] x tau_out[l]``."""

    def __init__(self, matrices: Sequence[np.ndarray]):
        mats = []
        for l, m in enumerate(matrices):
            m = np.asarray(m)
            if m.ndim != 2:
                raise ValueError(f"degree {l} filter must be a matrix, got shape {m.shape}")
            mats.append(m if np.iscomplexobj(m) else m.astype(np.complex128))
        self.matrices = mats

    @property
    def L(self) -> int:
        return len(self.matrices)

    @property
    def input_type(self) -> SignalType:
        return SignalType(tuple(m.shape[0] for m in self.matrices))

    @property
    def output_type(self) -> SignalType:
        return SignalType(tuple(m.shape[1] for m in self.matrices))

    def __getitem__(self, l):
        return self.matrices[l]

    def parameter_count(self) -> int:
        return sum(m.size for m in self.matrices)

    @classmethod
    def identity(cls, sig_type: SignalType) -> "HarmonicFilter":
        return cls([np.eye(t, dtype=np.complex128) for t in sig_type])

    @classmethod
    def random(cls, tau_in: SignalType, tau_out: SignalType, seed: int, dtype=np.complex128) -> "HarmonicFilter":
        """Filter with i.i.d. complex standard normal entries drawn degree by degree."""
        from ._rng import complex_normals

        sizes = [a * b for a, b in zip(tau_in, tau_out)]
        z = complex_normals(seed, sum(sizes))
        out, pos = [], 0
        for a, b, n in zip(tau_in, tau_out, sizes):
            out.append(z[pos : pos + n].reshape(a, b).astype(dtype))
            pos += n
        return cls(out)

    def astype(self, dtype) -> "HarmonicFilter":
        return HarmonicFilter([m.astype(dtype) for m in self.matrices])


@dataclass
class ConstrainedFilterTriple:
    """Factorized generalized convolution for ``K_in`` channels.

    Attributes
    ----------
    psi1 : list of ndarray
        ``psi1[l]`` of shape ``(tau_g[l], tau_h[l])``, shared by all channels.
    psi2 : list of ndarray
        ``psi2[l]`` of shape ``(K_in, tau_h[l], tau_h[l])``, one per channel.
    psi3 : list of ndarray
        ``psi3[l]`` of shape ``(K_in, K_out)`` mixing channels.
    """

    psi1: list
    psi2: list
    psi3: list

    def __post_init__(self):
        self.psi1 = [np.asarray(p) for p in self.psi1]
        self.psi2 = [np.asarray(p) for p in self.psi2]
        self.psi3 = [np.asarray(p) for p in self.psi3]
        if not len(self.psi1) == len(self.psi2) == len(self.psi3):
            raise ValueError("the three filters must cover the same degrees")
        for l, (a, b, c) in enumerate(zip(self.psi1, self.psi2, self.psi3)):
            if a.ndim != 2 or b.ndim != 3 or c.ndim != 2:
                raise ValueError(f"degree {l}: bad filter ranks {a.ndim}, {b.ndim}, {c.ndim}")
            if b.shape[1:] != (a.shape[1], a.shape[1]):
                raise ValueError(f"degree {l}: psi2 shape {b.shape} does not match psi1 output {a.shape[1]}")
            if b.shape[0] != c.shape[0]:
                raise ValueError(f"degree {l}: psi2 has {b.shape[0]} channels, psi3 expects {c.shape[0]}")

    @property
    def L(self) -> int:
        return len(self.psi1)

    @property
    def K_in(self) -> int:
        return self.psi3[0].shape[0]

    @property
    def K_out(self) -> int:
        return self.psi3[0].shape[1]

    def parameter_count(self) -> int:
        return sum(a.size + b.size + c.size for a, b, c in zip(self.psi1, self.psi2, self.psi3))

    def unconstrained_parameter_count(self) -> int:
        """Size of the single filter ``K_in tau_g x K_out tau_h`` it replaces."""
        return sum(self.K_in * a.shape[0] * self.K_out * a.shape[1] for a in self.psi1)

    @classmethod
    def random(cls, tau_g: SignalType, tau_h: SignalType, K_in: int, K_out: int, seed: int, dtype=np.complex128):
        from ._rng import complex_normals, derive_seed

        p1, p2, p3 = [], [], []
        for l, (a, b) in enumerate(zip(tau_g, tau_h)):
            p1.append(complex_normals(derive_seed(seed, 1, l), a * b).reshape(a, b).astype(dtype))
            p2.append(complex_normals(derive_seed(seed, 2, l), K_in * b * b).reshape(K_in, b, b).astype(dtype))
            p3.append(complex_normals(derive_seed(seed, 3, l), K_in * K_out).reshape(K_in, K_out).astype(dtype))
        return cls(p1, p2, p3)


def identity(f):
    """Identity operator, usable as any stage of a :class:`LayerTriple`."""
    return f


@dataclass
class LayerTriple:
    """``(L1, N, L2)``: linear operator, activation, linear operator."""

    first: Callable = identity
    activation: Callable = identity
    second: Callable = identity


def compose_layer(t: LayerTriple, f):
    """``L2(N(L1(f)))``."""
    return t.second(t.activation(t.first(f)))


# ---------------------------------------------------------------------------
# standard convolutions
# ---------------------------------------------------------------------------


def _check_same_L(f, psi):
    if f.L != psi.L:
        raise ValueError(f"bandlimit mismatch: {f.L} vs {psi.L}")


def conv_s2_to_so3(f: SphereHarmonic, psi: SphereHarmonic, normalize: bool = True) -> RotationHarmonic:
    """Sphere-to-rotation-group convolution ``(8 pi^2/(2l+1)) f^l conj(psi^l)^T``.

    Output azimuthal bandlimit is the full ``N = L``.
    """
    _check_same_L(f, psi)
    frags = []
    for l in range(f.L):
        c = _EIGHT_PI2 / (2 * l + 1) if normalize else 1.0
        frags.append((c * f.fragments[l]) @ psi.fragments[l].conj().T)
    return RotationHarmonic(frags, f.L)


def conv_s2_axisym(f: SphereHarmonic, psi: SphereHarmonic, normalize: bool = True, atol: float = 0.0) -> SphereHarmonic:
    """Convolution with an axisymmetric filter: ``sqrt(4 pi/(2l+1)) f^l_m conj(psi^l_0)``.

    Raises
    ------
    ValueError
        If ``psi`` has any ``|psi^l_n| > atol`` with ``n != 0``.
    """
    _check_same_L(f, psi)
    frags = []
    for l in range(f.L):
        p = psi.coefficients(l)
        off = np.delete(p, l)
        if off.size and np.max(np.abs(off)) > atol:
            raise ValueError(f"filter is not axisymmetric at degree {l}")
        c = np.sqrt(4 * np.pi / (2 * l + 1)) if normalize else 1.0
        frags.append(f.fragments[l] * (c * np.conj(p[l])))
    return SphereHarmonic(frags)


def conv_so3(f: RotationHarmonic, psi: RotationHarmonic, N_out: int | None = None) -> RotationHarmonic:
    """Rotation-group convolution ``(f * psi)^l_{mn} = sum_k f^l_{mk} conj(psi^l_{nk})``.

    Parameters
    ----------
    N_out : int, optional
        Azimuthal bandlimit of the output, i.e. the range of ``psi``'s first
        index that is kept. Defaults to ``L``.
    """
    _check_same_L(f, psi)
    L = f.L
    N_out = L if N_out is None else N_out
    frags = []
    for l in range(L):
        k = min(l, N_out - 1)
        F = f.full_block(l)
        P = psi.full_block(l)[l - k : l + k + 1]
        frags.append(F @ P.conj().T)
    return RotationHarmonic(frags, N_out)


# ---------------------------------------------------------------------------
# generalized convolutions
# ---------------------------------------------------------------------------


def generalized_conv(f: GeneralizedSignal, psi: HarmonicFilter, counter=None) -> GeneralizedSignal:
    """Per-degree fragment mixing ``f^l psi^l``."""
    if f.type != psi.input_type:
        raise ValueError(f"filter expects type {psi.input_type.tau}, got {f.type.tau}")
    out = []
    for l, (x, w) in enumerate(zip(f.fragments, psi.matrices)):
        out.append(x @ w.astype(x.dtype, copy=False))
        _bump(counter, "conv", 8 * x.shape[0] * w.shape[0] * w.shape[1])
    return GeneralizedSignal(out)


def constrained_conv(s: ChannelStack, w: ConstrainedFilterTriple, counter=None) -> ChannelStack:
    """Three-stage generalized convolution of a channel stack.

    ``h_k = g_k psi1``, then ``h_k <- h_k psi2[k]``, then output channel
    ``j`` is ``sum_k h_k psi3[k, j]``.
    """
    if s.K != w.K_in:
        raise ValueError(f"filter expects {w.K_in} channels, got {s.K}")
    if s.L != w.L:
        raise ValueError(f"bandlimit mismatch: {s.L} vs {w.L}")
    out = [[] for _ in range(w.K_out)]
    for l in range(s.L):
        p1, p2, p3 = w.psi1[l], w.psi2[l], w.psi3[l]
        G = np.stack([c.fragments[l] for c in s.channels])  # (K, 2l+1, tau_g)
        if G.shape[2] != p1.shape[0]:
            raise ValueError(f"degree {l}: psi1 expects {p1.shape[0]} fragments, got {G.shape[2]}")
        dt = G.dtype
        H = G @ p1.astype(dt, copy=False)
        H = np.einsum("kmt,kts->kms", H, p2.astype(dt, copy=False))
        Y = np.einsum("kms,kj->jms", H, p3.astype(dt, copy=False))
        d = 2 * l + 1
        a, b = p1.shape
        _bump(counter, "conv", 8 * d * (s.K * a * b + s.K * b * b + s.K * w.K_out * b))
        for j in range(w.K_out):
            out[j].append(Y[j])
    return ChannelStack([GeneralizedSignal(o) for o in out])


def constrained_as_unconstrained(w: ConstrainedFilterTriple) -> HarmonicFilter:
    """Assemble the equivalent single filter acting on concatenated channels.

    Entry ``[(k, t), (j, s)]`` equals ``sum_u psi1[t, u] psi2[k][u, s] psi3[k, j]``.
    """
    mats = []
    for p1, p2, p3 in zip(w.psi1, w.psi2, w.psi3):
        core = np.einsum("tu,kus->kts", p1, p2)
        full = np.einsum("kts,kj->ktjs", core, p3)
        K, a, J, b = full.shape
        mats.append(full.reshape(K * a, J * b))
    return HarmonicFilter(mats)


# ---------------------------------------------------------------------------
# tensor-product activations
# ---------------------------------------------------------------------------


def tensor_output_type(tau: SignalType, P: MixingSet) -> SignalType:
    """``tau_g[l] = sum_{(l1, l2) in P[l]} tau[l1] tau[l2]``."""
    return SignalType(tuple(sum(tau[a] * tau[b] for a, b in P[l]) for l in range(P.L)))


def _stacked_cg(pair: tuple[int, int], degrees: tuple[int, ...]) -> sp.csr_matrix:
    a, b = pair
    return sp.vstack([clebsch_gordan(a, b, l).matrix() for l in degrees], format="csr")


def tensor_activation(f: GeneralizedSignal, P: MixingSet, counter=None) -> GeneralizedSignal:
    """Clebsch-Gordan tensor-product activation.

    Degree-``l`` output fragments are ``(C^{l1 l2 l})^T (f^{l1}_{t1} (x) f^{l2}_{t2})``
    ordered by (pair index in ``P[l]``, ``t1``, ``t2``).
    """
    if P.L != f.L:
        raise ValueError(f"mixing set bandlimit {P.L} does not match signal bandlimit {f.L}")
    # group the work by input pair so each Kronecker product is formed once
    users: dict[tuple[int, int], list[int]] = {}
    for l, pairs in enumerate(P.pairs):
        for pair in pairs:
            users.setdefault(pair, []).append(l)
    blocks: dict[tuple[int, int, int], np.ndarray] = {}
    for (a, b), degrees in users.items():
        u, v = f.fragments[a], f.fragments[b]
        if u.shape[1] == 0 or v.shape[1] == 0:
            for l in degrees:
                blocks[(a, b, l)] = np.zeros((2 * l + 1, 0), f.dtype)
            continue
        kron = np.einsum("at,bs->abts", u, v).reshape(u.shape[0] * v.shape[0], -1)
        C = _stacked_cg((a, b), tuple(degrees))
        res = C.astype(_real(f.dtype)) @ kron
        _bump(counter, "activation", 10 * C.nnz * kron.shape[1])
        pos = 0
        for l in degrees:
            blocks[(a, b, l)] = res[pos : pos + 2 * l + 1]
            pos += 2 * l + 1
    out = []
    for l, pairs in enumerate(P.pairs):
        parts = [blocks[(a, b, l)] for a, b in pairs]
        out.append(np.concatenate(parts, axis=1) if parts else np.zeros((2 * l + 1, 0), f.dtype))
    return GeneralizedSignal(out)


def _real(dtype):
    return np.float32 if np.dtype(dtype) == np.complex64 else np.float64


def channelwise_tensor_activation(s: ChannelStack, P: MixingSet, counter=None) -> ChannelStack:
    """Tensor-product activation applied to each channel separately."""
    return s.map(lambda c: tensor_activation(c, P, counter))


# ---------------------------------------------------------------------------
# pointwise activations
# ---------------------------------------------------------------------------


def complex_relu(z: np.ndarray) -> np.ndarray:
    """ReLU applied independently to the real and imaginary parts."""
    return np.maximum(z.real, 0) + 1j * np.maximum(z.imag, 0)


def _fast_count(n: int) -> int:
    return sfft.next_fast_len(n)


def pointwise_activation(
    f,
    sigma: Callable[[np.ndarray], np.ndarray],
    oversample: int = 1,
    L_out: int | None = None,
    fast_grid: bool = True,
):
    """Apply ``sigma`` pointwise in real space: ``F(sigma(F^{-1} f))``.

    The signal is synthesized on a grid of bandlimit ``oversample * L``,
    ``sigma`` acts on every complex sample and the result is analysed back
    to bandlimit ``L_out`` (default ``L``).

    Parameters
    ----------
    f : SphereHarmonic or RotationHarmonic
    sigma : callable
        Elementwise map on complex arrays, e.g. :func:`complex_relu`.
    oversample : int
        Integer factor ``c >= 1``.
    L_out : int, optional
        Output bandlimit, at most ``c L``; ``2L - 1`` captures a square exactly
        when ``c >= 2``.
    fast_grid : bool
        Round the equispaced sample counts up to FFT-friendly lengths. Any
        count of at least ``2 cL - 1`` is exact.
    """
    if int(oversample) != oversample or oversample < 1:
        raise ValueError(f"oversample must be a positive integer, got {oversample}")
    c = int(oversample)
    L_out = f.L if L_out is None else int(L_out)
    if isinstance(f, SphereHarmonic):
        Lg = max(c * f.L, L_out)
        n_phi = _fast_count(2 * Lg - 1) if fast_grid else None
        return s2_pointwise(f, sigma, S2Grid(Lg, n_phi), L_out)
    if isinstance(f, RotationHarmonic):
        Lg = max(c * f.L, L_out)
        Ng = min(c * f.N, Lg)
        n_a = _fast_count(2 * Lg - 1) if fast_grid else None
        n_g = _fast_count(2 * Ng - 1) if fast_grid else None
        grid = SO3Grid(Lg, Ng, n_a, n_g)
        return so3_pointwise(f, sigma, grid, L_out, min(f.N, L_out))
    raise TypeError(f"pointwise activations need a sphere or rotation-group signal, got {type(f).__name__}")


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


def fragment_norms(s: ChannelStack) -> list[list[np.ndarray]]:
    """Euclidean norm of every fragment, indexed ``[k][l][t]``."""
    return [[np.linalg.norm(frag, axis=0) for frag in c.fragments] for c in s.channels]


def fragment_norm(s: ChannelStack, stats) -> ChannelStack:
    """Divide every fragment by its positive scale statistic (no shift).

    Parameters
    ----------
    stats : nested sequence
        ``stats[k][l]`` holds ``tau[l]`` positive reals for channel ``k``.
    """
    if len(stats) != s.K:
        raise ValueError(f"expected statistics for {s.K} channels, got {len(stats)}")
    out = []
    for c, st in zip(s.channels, stats):
        if len(st) != c.L:
            raise ValueError("statistics must cover every degree")
        frags = []
        for l, (frag, v) in enumerate(zip(c.fragments, st)):
            v = np.asarray(v, dtype=float).reshape(-1)
            if v.shape != (frag.shape[1],):
                raise ValueError(f"degree {l}: expected {frag.shape[1]} statistics, got {v.size}")
            if np.any(v <= 0) or not np.all(np.isfinite(v)):
                raise ValueError(f"degree {l}: statistics must be positive and finite")
            frags.append(frag / v.astype(_real(frag.dtype))[None, :])
        out.append(c._like(frags))
    return ChannelStack(out)
