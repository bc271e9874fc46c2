"""Harmonic filters built from weighted Dirac deltas on S^2 and SO(3).

A filter placed as deltas on rings of constant colatitude (or constant
``beta``) has coefficients that separate: a DFT over the equispaced
azimuthal positions of every ring, then a Legendre (or Wigner-d) weighting
per ring. Locality in real space is therefore encoded exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .sampling import _signed_legendre
from .signals import RotationHarmonic, SphereHarmonic
from .so3 import wigner_d_series

__all__ = [
    "DiracFilterS2",
    "DiracFilterSO3",
    "OverParameterizationWarning",
    "s2_dirac_to_harmonic",
    "so3_dirac_to_harmonic",
    "interpolate_ring",
]


class OverParameterizationWarning(UserWarning):
    """More deltas on a ring than the bandlimit can resolve."""


def interpolate_ring(anchors, n: int) -> np.ndarray:
    """Periodic linear interpolation of equispaced ring anchors to ``n`` points.

    ``anchors`` has shape ``(rings, n_anchor)``; anchor ``k`` sits at angle
    ``2 pi k / n_anchor``.
    """
    anchors = np.atleast_2d(np.asarray(anchors, float))
    na = anchors.shape[1]
    if na < 1 or n < 1:
        raise ValueError("need at least one anchor and one output point")
    xa = 2 * np.pi * np.arange(na) / na
    x = 2 * np.pi * np.arange(n) / n
    return np.stack([np.interp(x, xa, row, period=2 * np.pi) for row in anchors])


@dataclass(frozen=True)
class DiracFilterS2:
    """Weighted deltas at ``(thetas[i], 2 pi j / N_phi)``.

    Attributes
    ----------
    weights : ndarray
        Real ``(N_theta, N_phi)`` matrix.
    thetas : ndarray
        Ring colatitudes in ``[0, pi]``.
    """

    weights: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, float))
        t = np.atleast_1d(np.asarray(self.thetas, float))
        if w.ndim != 2 or w.shape[0] != t.size:
            raise ValueError(f"weights {w.shape} need one row per ring ({t.size})")
        if w.shape[1] < 1:
            raise ValueError("each ring needs at least one delta")
        if np.any(t < 0) or np.any(t > np.pi):
            raise ValueError("ring colatitudes must lie in [0, pi]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "thetas", t)

    @property
    def n_phi(self) -> int:
        return self.weights.shape[1]

    @property
    def phis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_phi) / self.n_phi

    @classmethod
    def from_anchors(cls, anchors, thetas, n_phi: int) -> "DiracFilterS2":
        """Ring weights linearly interpolated from fewer anchor values per ring."""
        return cls(interpolate_ring(anchors, n_phi), thetas)


@dataclass(frozen=True)
class DiracFilterSO3:
    """Weighted deltas at rotations ``(2 pi j / N_alpha, betas[i], 2 pi k / N_gamma)``.

    Attributes
    ----------
    weights : ndarray
        Real ``(N_beta, N_alpha, N_gamma)`` array.
    betas : ndarray
        Polar Euler angles in ``[0, pi]``.
    """

    weights: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, float)
        b = np.atleast_1d(np.asarray(self.betas, float))
        if w.ndim != 3 or w.shape[0] != b.size:
            raise ValueError(f"weights {w.shape} must be (N_beta, N_alpha, N_gamma) with N_beta={b.size}")
        if min(w.shape[1:]) < 1:
            raise ValueError("need at least one alpha and one gamma position")
        if np.any(b < 0) or np.any(b > np.pi):
            raise ValueError("beta nodes must lie in [0, pi]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "betas", b)

    @property
    def n_alpha(self) -> int:
        return self.weights.shape[1]

    @property
    def n_gamma(self) -> int:
        return self.weights.shape[2]

    def positions(self):
        """Euler angles ``(alpha, beta, gamma)`` of every delta, flattened in weight order."""
        a = 2 * np.pi * np.arange(self.n_alpha) / self.n_alpha
        g = 2 * np.pi * np.arange(self.n_gamma) / self.n_gamma
        B, A, G = np.meshgrid(self.betas, a, g, indexing="ij")
        return A.ravel(), B.ravel(), G.ravel()


def _warn_count(n: int, limit: int, what: str):
    if n > limit:
        warnings.warn(
            f"{n} deltas per {what} exceed the {limit} resolvable at this bandlimit",
            OverParameterizationWarning,
            stacklevel=3,
        )


def _dft_at(w: np.ndarray, orders: np.ndarray, axis: int) -> np.ndarray:
    """``sum_j w_j exp(-i m 2 pi j / n)`` for every ``m`` in ``orders`` along ``axis``."""
    n = w.shape[axis]
    spec = sfft.fft(w, axis=axis)
    return np.take(spec, np.mod(orders, n), axis=axis)


def s2_dirac_to_harmonic(d: DiracFilterS2, L: int) -> SphereHarmonic:
    """Coefficients ``psi^l_m = sum_i lam^l_m(theta_i) sum_j w_ij e^{-i m phi_j}``."""
    if L < 1:
        raise ValueError("bandlimit must be positive")
    _warn_count(d.n_phi, 2 * L - 1, "ring")
    m = np.arange(-(L - 1), L)
    ring = _dft_at(d.weights, m, axis=1)  # (N_theta, 2L-1)
    lam = _signed_legendre(L, d.thetas)  # (N_theta, L, 2L-1)
    full = np.einsum("tlm,tm->lm", lam, ring)
    return SphereHarmonic([full[l, L - 1 - l : L + l, None].copy() for l in range(L)])


def so3_dirac_to_harmonic(d: DiracFilterSO3, L: int, N: int | None = None) -> RotationHarmonic:
    """Coefficients ``psi^l_{mn} = sum_i d^l_{mn}(beta_i) sum_j e^{-i m alpha_j} sum_k w_ijk e^{-i n gamma_k}``.

    Equal to ``sum w D^l_{mn}(rho)`` over the delta rotations.
    """
    if L < 1:
        raise ValueError("bandlimit must be positive")
    N = L if N is None else int(N)
    if not 1 <= N <= L:
        raise ValueError(f"azimuthal bandlimit must lie in [1, L], got {N}")
    _warn_count(d.n_alpha, 2 * L - 1, "alpha ring")
    _warn_count(d.n_gamma, 2 * N - 1, "gamma ring")
    m = np.arange(-(L - 1), L)
    n = np.arange(-(N - 1), N)
    H = _dft_at(_dft_at(d.weights, m, axis=1), n, axis=2)  # (N_beta, 2L-1, 2N-1)
    frags = []
    for l, dl in wigner_d_series(L - 1, d.betas):
        k = min(l, N - 1)
        sub = dl[:, :, l - k : l + k + 1]
        h = H[:, L - 1 - l : L + l, N - 1 - k : N + k]
        frags.append(np.einsum("bmn,bmn->mn", sub, h))
    return RotationHarmonic(frags, N)
