"""Sampling grids and exact harmonic transforms on S^2 and SO(3).

Colatitudes (and the Euler angle beta) use Gauss-Legendre nodes; longitudes
(alpha, gamma) are equispaced. With ``L`` nodes and at least ``2L-1``
equispaced points the quadrature integrates products of two bandlimited
harmonics exactly, so forward and inverse transforms are exact inverses.

Transforms separate variables: an FFT over each equispaced angle followed by
a Legendre (S^2) or Wigner-d (SO(3)) sum over the polar nodes.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .signals import RotationHarmonic, SphereHarmonic
from .so3 import wigner_d_series

__all__ = [
    "gauss_legendre",
    "normalized_legendre",
    "spherical_harmonic",
    "S2Grid",
    "SO3Grid",
    "SampledS2",
    "SampledSO3",
    "sht_forward",
    "sht_inverse",
    "so3_forward",
    "so3_inverse",
    "s2_pointwise",
    "so3_pointwise",
]

_FOUR_PI = 4.0 * np.pi
_EIGHT_PI2 = 8.0 * np.pi**2


# ---------------------------------------------------------------------------
# quadrature and Legendre functions
# ---------------------------------------------------------------------------


def _legendre_pair(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(P_{n-1}(x), P_n(x))`` by the three-term recursion."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    return p0, p1


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[-1, 1]`` by Newton iteration.

    Nodes are returned in decreasing order so that ``arccos`` gives
    increasing colatitudes.
    """
    if n < 1:
        raise ValueError("need at least one node")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p0, p1 = _legendre_pair(n, x)
        dx = p1 / (n * (x * p1 - p0) / (x * x - 1))
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p0, p1 = _legendre_pair(n, x)
    dp = n * (x * p1 - p0) / (x * x - 1)
    w = 2.0 / ((1 - x * x) * dp * dp)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def normalized_legendre(L: int, theta) -> np.ndarray:
    """Orthonormal associated Legendre functions with Condon-Shortley phase.

    Returns ``lam[t, l, m] = N^l_m P^l_m(cos theta_t)`` for ``0 <= m <= l < L``
    (zero above the diagonal), so that ``Y^l_m = lam e^{i m phi}``.
    """
    theta = np.atleast_1d(np.asarray(theta, float))
    x = np.cos(theta)
    s = np.sin(theta)
    out = np.zeros((theta.size, L, L))
    if L == 0:
        return out
    diag = np.full(theta.size, 1.0 / np.sqrt(_FOUR_PI))
    for m in range(L):
        if m > 0:
            diag = -np.sqrt((2 * m + 1) / (2 * m)) * s * diag
        out[:, m, m] = diag
        if m + 1 < L:
            out[:, m + 1, m] = x * np.sqrt(2 * m + 3) * diag
        for l in range(m + 2, L):
            a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            out[:, l, m] = a * (x * out[:, l - 1, m] - b * out[:, l - 2, m])
    return out


def spherical_harmonic(l: int, m: int, theta, phi) -> np.ndarray:
    """``Y^l_m(theta, phi)`` evaluated pointwise (broadcasting)."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    lam = normalized_legendre(l + 1, theta.ravel())[:, l, abs(m)]
    if m < 0:
        lam = (-1) ** m * lam
    return (lam * np.exp(1j * m * phi.ravel())).reshape(theta.shape)


def _signed_legendre(L: int, theta) -> np.ndarray:
    """``lam[t, l, m + L - 1]`` for ``|m| < L`` including negative orders."""
    lam = normalized_legendre(L, theta)
    m = np.arange(-(L - 1), L)
    sign = np.where(m < 0, (-1.0) ** np.abs(m), 1.0)
    return lam[:, :, np.abs(m)] * sign


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


class S2Grid:
    """Gauss-Legendre grid on the sphere.

    Parameters
    ----------
    L : int
        Bandlimit; ``L`` colatitude nodes.
    n_phi : int, optional
        Number of longitudes, default ``2L - 1`` (the minimum for exactness).
    """

    def __init__(self, L: int, n_phi: int | None = None):
        if L < 1:
            raise ValueError("bandlimit must be positive")
        n_phi = 2 * L - 1 if n_phi is None else int(n_phi)
        if n_phi < 2 * L - 1:
            raise ValueError(f"need at least 2L-1={2 * L - 1} longitudes, got {n_phi}")
        x, w = gauss_legendre(L)
        self.L = L
        self.n_phi = n_phi
        self.thetas = np.arccos(x)
        self.weights = np.asarray(w)
        self.phis = 2 * np.pi * np.arange(n_phi) / n_phi

    @property
    def shape(self) -> tuple[int, int]:
        return (self.L, self.n_phi)

    def quadrature_weights(self) -> np.ndarray:
        """Per-sample weights, shape ``(L, n_phi)``; they sum to ``4 pi``."""
        return np.repeat(self.weights[:, None] * (2 * np.pi / self.n_phi), self.n_phi, axis=1)

    def __repr__(self):
        return f"S2Grid(L={self.L}, n_phi={self.n_phi})"


class SO3Grid:
    """Gauss-Legendre grid on SO(3) in (beta, alpha, gamma) order.

    Parameters
    ----------
    L : int
        Bandlimit; ``L`` beta nodes.
    N : int, optional
        Azimuthal bandlimit (default ``L``).
    n_alpha, n_gamma : int, optional
        Equispaced counts, default ``2L - 1`` and ``2N - 1``.
    """

    def __init__(self, L: int, N: int | None = None, n_alpha: int | None = None, n_gamma: int | None = None):
        if L < 1:
            raise ValueError("bandlimit must be positive")
        N = L if N is None else int(N)
        if not 1 <= N <= L:
            raise ValueError(f"azimuthal bandlimit must satisfy 1 <= N <= L, got {N}")
        n_alpha = 2 * L - 1 if n_alpha is None else int(n_alpha)
        n_gamma = 2 * N - 1 if n_gamma is None else int(n_gamma)
        if n_alpha < 2 * L - 1 or n_gamma < 2 * N - 1:
            raise ValueError("too few equispaced samples for exact quadrature")
        x, w = gauss_legendre(L)
        self.L, self.N = L, N
        self.n_alpha, self.n_gamma = n_alpha, n_gamma
        self.betas = np.arccos(x)
        self.weights = np.asarray(w)
        self.alphas = 2 * np.pi * np.arange(n_alpha) / n_alpha
        self.gammas = 2 * np.pi * np.arange(n_gamma) / n_gamma

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.L, self.n_alpha, self.n_gamma)

    def quadrature_weights(self) -> np.ndarray:
        """Per-sample Haar weights; they sum to ``8 pi^2``."""
        c = (2 * np.pi / self.n_alpha) * (2 * np.pi / self.n_gamma)
        return np.broadcast_to(self.weights[:, None, None] * c, self.shape).copy()

    def __repr__(self):
        return f"SO3Grid(L={self.L}, N={self.N}, n_alpha={self.n_alpha}, n_gamma={self.n_gamma})"


class SampledS2:
    """Samples on an :class:`S2Grid`, row-major ``(theta, phi)``."""

    def __init__(self, grid: S2Grid, values):
        values = np.asarray(values)
        if values.shape != grid.shape:
            raise ValueError(f"expected samples of shape {grid.shape}, got {values.shape}")
        self.grid = grid
        self.values = values


class SampledSO3:
    """Samples on an :class:`SO3Grid`, row-major ``(beta, alpha, gamma)``."""

    def __init__(self, grid: SO3Grid, values):
        values = np.asarray(values)
        if values.shape != grid.shape:
            raise ValueError(f"expected samples of shape {grid.shape}, got {values.shape}")
        self.grid = grid
        self.values = values


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _real_dtype(dtype):
    return np.float32 if np.dtype(dtype) == np.complex64 else np.float64


def _fft_flops(n: int, count: int) -> int:
    # conventional 5 n log2 n estimate per complex transform
    return int(round(5 * n * np.log2(max(n, 2)) * count))


def _bump(counter, kind: str, flops: int):
    if counter is not None:
        counter.add(kind, flops)


def _check_chunk(chunk: int | None, n: int) -> int:
    return n if chunk is None else max(1, min(int(chunk), n))


# ---------------------------------------------------------------------------
# S^2 transforms
# ---------------------------------------------------------------------------


def _s2_synthesis_rows(f: SphereHarmonic, grid: S2Grid, dtype) -> np.ndarray:
    """``G[t, m] = sum_l f^l_m lam^l_m(theta_t)`` for ``|m| < L``."""
    L = f.L
    lam = _signed_legendre(L, grid.thetas).astype(_real_dtype(dtype))
    F = np.zeros((L, 2 * L - 1), dtype)
    for l in range(L):
        F[l, L - 1 - l : L + l] = f.coefficients(l)
    return np.einsum("tlm,lm->tm", lam, F)


def _place(rows: np.ndarray, n: int, axis: int, half: int) -> np.ndarray:
    """Embed frequencies ``-half..half`` along ``axis`` into a length-``n`` FFT axis."""
    shape = list(rows.shape)
    shape[axis] = n
    out = np.zeros(shape, rows.dtype)
    idx = np.arange(-half, half + 1) % n
    sl = [slice(None)] * rows.ndim
    sl[axis] = idx
    out[tuple(sl)] = rows
    return out


def _take(spec: np.ndarray, axis: int, half: int) -> np.ndarray:
    idx = np.arange(-half, half + 1) % spec.shape[axis]
    return np.take(spec, idx, axis=axis)


def sht_inverse(f: SphereHarmonic, grid: S2Grid, counter=None) -> SampledS2:
    """Synthesize samples of ``sum f^l_m Y^l_m`` on ``grid``.

    The grid bandlimit may exceed the signal bandlimit (zero-padding).
    """
    if grid.L < f.L:
        raise ValueError(f"grid bandlimit {grid.L} is below the signal bandlimit {f.L}")
    dtype = f.dtype
    G = _s2_synthesis_rows(f, grid, dtype)
    _bump(counter, "legendre", 8 * grid.L * f.L * (2 * f.L - 1))
    vals = sfft.ifft(_place(G, grid.n_phi, 1, f.L - 1), axis=1, norm="forward")
    _bump(counter, "fft", _fft_flops(grid.n_phi, grid.L))
    return SampledS2(grid, vals.astype(dtype, copy=False))


def _s2_analysis(rows: np.ndarray, grid: S2Grid, L: int, dtype) -> SphereHarmonic:
    lam = _signed_legendre(L, grid.thetas).astype(_real_dtype(dtype))
    wt = (grid.weights * (2 * np.pi / grid.n_phi)).astype(_real_dtype(dtype))
    F = np.einsum("t,tlm,tm->lm", wt, lam, rows)
    return SphereHarmonic([F[l, L - 1 - l : L + l].astype(dtype) for l in range(L)])


def sht_forward(f: SampledS2, L: int | None = None, counter=None) -> SphereHarmonic:
    """Harmonic coefficients ``<f, Y^l_m>`` for ``l < L`` (default the grid bandlimit)."""
    grid = f.grid
    L = grid.L if L is None else int(L)
    if L > grid.L:
        raise ValueError(f"cannot analyse bandlimit {L} on a grid of bandlimit {grid.L}")
    dtype = f.values.dtype if np.iscomplexobj(f.values) else np.complex128
    rows = _take(sfft.fft(f.values.astype(dtype, copy=False), axis=1), 1, L - 1)
    _bump(counter, "fft", _fft_flops(grid.n_phi, grid.L))
    _bump(counter, "legendre", 8 * grid.L * L * (2 * L - 1))
    return _s2_analysis(rows, grid, L, dtype)


def s2_pointwise(
    f: SphereHarmonic,
    fn: Callable[[np.ndarray], np.ndarray],
    grid: S2Grid,
    L_out: int | None = None,
) -> SphereHarmonic:
    """``F(fn(F^{-1} f))`` evaluated on ``grid`` and truncated to ``L_out``."""
    L_out = f.L if L_out is None else L_out
    samples = sht_inverse(f, grid).values
    return sht_forward(SampledS2(grid, fn(samples)), L_out)


# ---------------------------------------------------------------------------
# SO(3) transforms
# ---------------------------------------------------------------------------

_TABLE_BUDGET = 160 * 2**20


@lru_cache(maxsize=4)
def _cached_tables(lmax: int, betas: bytes, N: int, dtype: str):
    b = np.frombuffer(betas)
    return tuple(_restrict(l, d, N) for l, d in wigner_d_series(lmax, b, np.dtype(dtype)))


def _restrict(l, d, N):
    k = min(l, N - 1)
    out = np.ascontiguousarray(d[:, :, l - k : l + k + 1])
    out.setflags(write=False)
    return out


def _wigner_tables(lmax: int, betas: np.ndarray, N: int, dtype):
    """Iterate ``d^l(betas)[:, :, |n| < N]`` for ``l <= lmax``; cached when small."""
    dtype = np.dtype(_real_dtype(dtype))
    size = sum(betas.size * (2 * l + 1) * (2 * min(l, N - 1) + 1) for l in range(lmax + 1))
    if size * dtype.itemsize <= _TABLE_BUDGET:
        yield from enumerate(_cached_tables(lmax, np.ascontiguousarray(betas, float).tobytes(), N, dtype.str))
    else:
        for l, d in wigner_d_series(lmax, betas, dtype):
            yield l, _restrict(l, d, N)


def _wigner_flops(n_beta: int, L: int, N: int) -> int:
    # one real x complex multiply-accumulate (4 flops) per table entry
    return 4 * sum(n_beta * (2 * l + 1) * (2 * min(l, N - 1) + 1) for l in range(L))


def _so3_synthesis_rows(g: RotationHarmonic, betas: np.ndarray, dtype) -> np.ndarray:
    """``H[j, m, n] = sum_l (2l+1)/(8 pi^2) g^l_{mn} d^l_{mn}(beta_j)``."""
    L, N = g.L, g.N
    H = np.zeros((betas.size, 2 * L - 1, 2 * N - 1), dtype)
    for l, d in _wigner_tables(L - 1, betas, N, dtype):
        k = min(l, N - 1)
        c = (2 * l + 1) / _EIGHT_PI2
        H[:, L - 1 - l : L + l, N - 1 - k : N + k] += d * (c * g.fragments[l])[None]
    return H


def _so3_analysis(H: np.ndarray, betas: np.ndarray, L: int, N: int, dtype) -> RotationHarmonic:
    """``g^l_{mn} = sum_j H[j, m, n] d^l_{mn}(beta_j)`` with weights folded into ``H``."""
    frags = []
    for l, d in _wigner_tables(L - 1, betas, N, dtype):
        k = min(l, N - 1)
        frags.append(np.einsum("jmn,jmn->mn", d, H[:, L - 1 - l : L + l, N - 1 - k : N + k]))
    return RotationHarmonic(frags, N)


def _so3_rings_inverse(H: np.ndarray, n_alpha: int, n_gamma: int) -> np.ndarray:
    """Partial 2D inverse FFT of ``H[j, m, n]`` onto ``(j, alpha, gamma)``."""
    Lh = (H.shape[1] - 1) // 2
    Nh = (H.shape[2] - 1) // 2
    A = sfft.ifft(_place(H, n_gamma, 2, Nh), axis=2, norm="forward")
    return sfft.ifft(_place(A, n_alpha, 1, Lh), axis=1, norm="forward")


def _so3_rings_forward(vals: np.ndarray, L: int, N: int) -> np.ndarray:
    """Partial 2D FFT keeping ``|m| < L`` and ``|n| < N``."""
    A = _take(sfft.fft(vals, axis=1), 1, L - 1)
    return _take(sfft.fft(A, axis=2), 2, N - 1)


def so3_inverse(g: RotationHarmonic, grid: SO3Grid, counter=None) -> SampledSO3:
    """Synthesize ``sum (2l+1)/(8 pi^2) g^l_{mn} conj(D^l_{mn})`` on ``grid``."""
    if grid.L < g.L or grid.N < g.N:
        raise ValueError(f"{grid} cannot represent a signal with L={g.L}, N={g.N}")
    dtype = g.dtype
    H = _so3_synthesis_rows(g, grid.betas, dtype)
    _bump(counter, "wigner", _wigner_flops(grid.L, g.L, g.N))
    vals = _so3_rings_inverse(H, grid.n_alpha, grid.n_gamma)
    _bump(counter, "fft", _fft_flops(grid.n_gamma, grid.L * (2 * g.L - 1)) + _fft_flops(grid.n_alpha, grid.L * grid.n_gamma))
    return SampledSO3(grid, vals.astype(dtype, copy=False))


def so3_forward(g: SampledSO3, L: int | None = None, N: int | None = None, counter=None) -> RotationHarmonic:
    """Coefficients ``<g, conj(D^l_{mn})>`` for ``l < L``, ``|n| < N``."""
    grid = g.grid
    L = grid.L if L is None else int(L)
    N = min(grid.N, L) if N is None else int(N)
    if L > grid.L or N > grid.N or N > L:
        raise ValueError(f"cannot analyse (L={L}, N={N}) on {grid}")
    dtype = g.values.dtype if np.iscomplexobj(g.values) else np.complex128
    H = _so3_rings_forward(g.values.astype(dtype, copy=False), L, N)
    _bump(counter, "fft", _fft_flops(grid.n_alpha, grid.L * grid.n_gamma) + _fft_flops(grid.n_gamma, grid.L * (2 * L - 1)))
    c = (2 * np.pi / grid.n_alpha) * (2 * np.pi / grid.n_gamma)
    H *= (grid.weights * c).astype(_real_dtype(dtype))[:, None, None]
    _bump(counter, "wigner", _wigner_flops(grid.L, L, N))
    return _so3_analysis(H, grid.betas, L, N, dtype)


def so3_pointwise(
    g: RotationHarmonic,
    fn: Callable[[np.ndarray], np.ndarray],
    grid: SO3Grid,
    L_out: int | None = None,
    N_out: int | None = None,
    chunk: int | None = 16,
) -> RotationHarmonic:
    """``F(fn(F^{-1} g))`` on ``grid``, streamed over beta rings.

    Only ``chunk`` rings of samples are held in memory at a time, which keeps
    heavily oversampled grids affordable.
    """
    L_out = g.L if L_out is None else L_out
    N_out = min(g.N, L_out) if N_out is None else N_out
    if grid.L < max(g.L, L_out) or grid.N < max(g.N, N_out):
        raise ValueError(f"{grid} is too small for this evaluation")
    dtype = g.dtype
    H = _so3_synthesis_rows(g, grid.betas, dtype)
    out = np.zeros((grid.L, 2 * L_out - 1, 2 * N_out - 1), dtype)
    step = _check_chunk(chunk, grid.L)
    for j0 in range(0, grid.L, step):
        vals = _so3_rings_inverse(H[j0 : j0 + step], grid.n_alpha, grid.n_gamma).astype(dtype, copy=False)
        out[j0 : j0 + step] = _so3_rings_forward(fn(vals), L_out, N_out)
    c = (2 * np.pi / grid.n_alpha) * (2 * np.pi / grid.n_gamma)
    out *= (grid.weights * c).astype(_real_dtype(dtype))[:, None, None]
    return _so3_analysis(out, grid.betas, L_out, N_out, dtype)
