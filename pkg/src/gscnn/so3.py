"""Representation-theoretic kernels for SO(3).

Wigner d/D matrices, Clebsch-Gordan coefficients and Gaunt coefficients.

Conventions
-----------
* Rotations use zyz Euler angles, ``R = Rz(alpha) Ry(beta) Rz(gamma)``.
* ``d^l(beta) = exp(-i beta J_y)`` with rows and columns ordered
  ``m = -l..l``; ``D^l_{mn}(alpha, beta, gamma) = e^{-i m alpha} d^l_{mn}(beta) e^{-i n gamma}``.
  With these choices ``D^l(R1 R2) = D^l(R1) D^l(R2)``.
* Clebsch-Gordan coefficients follow the Condon-Shortley phase, i.e.
  ``C^{l1 l2 l}_{l1, l-l1, l} > 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np
import scipy.sparse as sp
from scipy.spatial.transform import Rotation as _ScipyRotation
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

__all__ = [
    "Rotation",
    "WignerD",
    "CGBlock",
    "GauntBlock",
    "wigner_d",
    "wigner_d_series",
    "wigner_d_table",
    "wigner_D",
    "wigner_D_matrices",
    "clebsch_gordan",
    "gaunt",
    "check_triangle",
]

_TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Rotations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rotation:
    """A rotation given by zyz Euler angles in radians.

    Angles are normalized on construction so that ``alpha, gamma`` lie in
    ``[0, 2 pi)`` and ``beta`` in ``[0, pi]``.
    """

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        beta = float(self.beta)
        if not (-1e-12 <= beta <= np.pi + 1e-12):
            raise ValueError(f"beta must lie in [0, pi], got {beta}")
        object.__setattr__(self, "beta", min(max(beta, 0.0), np.pi))
        object.__setattr__(self, "alpha", float(self.alpha) % _TWO_PI)
        object.__setattr__(self, "gamma", float(self.gamma) % _TWO_PI)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, matrix) -> "Rotation":
        """Recover Euler angles from a 3x3 rotation matrix."""
        with warnings.catch_warnings():
            # gimbal lock at beta in {0, pi} is harmless: any split of the
            # z-rotation between alpha and gamma gives the same D-matrices
            warnings.simplefilter("ignore", UserWarning)
            a, b, g = _ScipyRotation.from_matrix(np.asarray(matrix, float)).as_euler("ZYZ")
        return cls(a, abs(b), g)

    def as_matrix(self) -> np.ndarray:
        return _ScipyRotation.from_euler(
            "ZYZ", [self.alpha, self.beta, self.gamma]
        ).as_matrix()

    def compose(self, other: "Rotation") -> "Rotation":
        """Return ``self o other``, i.e. apply ``other`` first."""
        return Rotation.from_matrix(self.as_matrix() @ other.as_matrix())

    def inverse(self) -> "Rotation":
        return Rotation(np.pi - self.gamma, self.beta, np.pi - self.alpha)

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return self.compose(other)


# ---------------------------------------------------------------------------
# Wigner d and D
# ---------------------------------------------------------------------------


def _edge_values(l: int, ii: np.ndarray, jj: np.ndarray, cb: np.ndarray, sb: np.ndarray):
    """Closed form of d^l_{mn} on the border max(|m|, |n|) = l."""
    m = (ii - l).astype(float)
    n = (jj - l).astype(float)
    a = np.abs(m + n)
    b = np.abs(m - n)
    logc = 0.5 * (gammaln(2 * l + 1) - gammaln(a + 1) - gammaln(2 * l - a + 1))
    sign = np.ones_like(m)
    m_dominant = np.abs(m) >= np.abs(n)
    sign = np.where(m_dominant & (m >= 0), (-1.0) ** (l - n), sign)
    sign = np.where(~m_dominant & (n < 0), (-1.0) ** (m + l), sign)
    return sign * np.exp(logc) * cb[:, None] ** a * sb[:, None] ** b


@lru_cache(maxsize=None)
def _border_indices(l: int):
    mask = np.zeros((2 * l + 1, 2 * l + 1), bool)
    mask[[0, -1], :] = True
    mask[:, [0, -1]] = True
    ii, jj = np.nonzero(mask)
    return ii, jj


@lru_cache(maxsize=None)
def _recursion_coefficients(l: int):
    """Coefficients of the three-term recursion producing degree l from l-1, l-2."""
    k = np.arange(-l, l + 1, dtype=float)
    m = k[:, None]
    n = k[None, :]
    inner = np.maximum(np.abs(m), np.abs(n)) < l
    with np.errstate(divide="ignore", invalid="ignore"):
        den = np.sqrt((l * l - m * m) * (l * l - n * n))
        a = np.where(inner, l * (2 * l - 1) / den, 0.0)
        j = l - 1
        if j > 0:
            shift = m * n / (j * (j + 1))
            b = l * np.sqrt(np.clip((j * j - m * m) * (j * j - n * n), 0, None)) / (j * den)
            b = np.where(inner, b, 0.0)
        else:
            shift = np.zeros_like(a)
            b = np.zeros_like(a)
    return a, shift, b


def wigner_d_series(lmax: int, betas, dtype=np.float64) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(l, d^l(betas))`` for ``l = 0..lmax``.

    Uses a three-term recursion in ``l`` seeded by closed forms on the
    border ``max(|m|, |n|) = l``. Each yielded array has shape
    ``(len(betas), 2l+1, 2l+1)`` and is a fresh allocation.
    """
    if lmax < 0:
        raise ValueError("lmax must be non-negative")
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    x = np.cos(betas)[:, None, None]
    cb = np.cos(betas / 2)
    sb = np.sin(betas / 2)
    nb = betas.size
    d_prev = np.zeros((nb, 0, 0))
    d_cur = np.ones((nb, 1, 1))
    yield 0, d_cur.astype(dtype, copy=True)
    for l in range(1, lmax + 1):
        a, shift, b = _recursion_coefficients(l)
        size = 2 * l + 1
        p1 = np.zeros((nb, size, size))
        p1[:, 1:-1, 1:-1] = d_cur
        new = a * (x - shift) * p1
        if l >= 2:
            p1[:] = 0.0
            p1[:, 2:-2, 2:-2] = d_prev
            new -= b * p1
        ii, jj = _border_indices(l)
        new[:, ii, jj] = _edge_values(l, ii, jj, cb, sb)
        d_prev, d_cur = d_cur, new
        yield l, new.astype(dtype, copy=False) if dtype != np.float64 else new


def wigner_d_table(lmax: int, betas, dtype=np.float64) -> list[np.ndarray]:
    """All ``d^l(betas)`` for ``l <= lmax`` as a list indexed by degree."""
    return [d for _, d in wigner_d_series(lmax, betas, dtype)]


def wigner_d(l: int, beta: float) -> np.ndarray:
    """Wigner small-d matrix ``d^l(beta)`` of shape ``(2l+1, 2l+1)``.

    Parameters
    ----------
    l : int
        Degree, non-negative.
    beta : float
        Polar Euler angle in ``[0, pi]``.
    """
    if l < 0:
        raise ValueError(f"degree must be non-negative, got {l}")
    if not (-1e-12 <= beta <= np.pi + 1e-12):
        raise ValueError(f"beta must lie in [0, pi], got {beta}")
    out = None
    for _, d in wigner_d_series(l, [beta]):
        out = d
    return out[0]


@dataclass(frozen=True)
class WignerD:
    """Wigner D-matrix of one degree.

    Attributes
    ----------
    degree : int
    entries : ndarray
        Complex ``(2l+1, 2l+1)`` matrix indexed by ``m, n = -l..l``.
    """

    degree: int
    entries: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _phases(l: int, angle: float) -> np.ndarray:
    return np.exp(-1j * np.arange(-l, l + 1) * angle)


def wigner_D(l: int, rho: Rotation) -> WignerD:
    """Wigner D-matrix ``D^l(rho)``."""
    d = wigner_d(l, rho.beta)
    return WignerD(l, _phases(l, rho.alpha)[:, None] * d * _phases(l, rho.gamma)[None, :])


def wigner_D_matrices(L: int, rho: Rotation) -> list[np.ndarray]:
    """``[D^0(rho), ..., D^{L-1}(rho)]`` computed in one recursion pass."""
    out = []
    if L <= 0:
        return out
    for l, d in wigner_d_series(L - 1, [rho.beta]):
        out.append(_phases(l, rho.alpha)[:, None] * d[0] * _phases(l, rho.gamma)[None, :])
    return out


# ---------------------------------------------------------------------------
# Clebsch-Gordan and Gaunt coefficients
# ---------------------------------------------------------------------------


def check_triangle(l1: int, l2: int, l: int) -> None:
    """Raise ``ValueError`` unless ``|l1 - l2| <= l <= l1 + l2``."""
    if min(l1, l2, l) < 0:
        raise ValueError(f"degrees must be non-negative: {(l1, l2, l)}")
    if not abs(l1 - l2) <= l <= l1 + l2:
        raise ValueError(f"triangle condition violated for {(l1, l2, l)}")


@lru_cache(maxsize=256)
def _cg_family(l1: int, l2: int) -> dict:
    """All CG tables for fixed ``(l1, l2)``, keyed by the coupled degree.

    For each ``m >= 0`` the coefficients ``C^{l1 l2 l}_{m1, m-m1, m}`` over
    ``l`` are the eigenvectors of ``J^2`` restricted to the ``m`` subspace,
    a symmetric tridiagonal matrix in the ``m1`` basis with eigenvalues
    ``l(l+1)``. The sign is pinned by positivity at the largest admissible
    ``m1``, where the Racah sum has a single positive term.
    """
    tables = {
        l: np.zeros((2 * l1 + 1, 2 * l + 1)) for l in range(abs(l1 - l2), l1 + l2 + 1)
    }
    base = l1 * (l1 + 1) + l2 * (l2 + 1)
    for m in range(0, l1 + l2 + 1):
        m1 = np.arange(max(-l1, m - l2), min(l1, m + l2) + 1)
        m2 = m - m1
        diag = base + 2.0 * m1 * m2
        # <m1+1, m2-1| J1+ J2- |m1, m2>
        off = np.sqrt(
            ((l1 - m1[:-1]) * (l1 + m1[:-1] + 1) * (l2 + m2[:-1]) * (l2 - m2[:-1] + 1)).astype(float)
        )
        if m1.size == 1:
            vecs = np.ones((1, 1))
        else:
            _, vecs = eigh_tridiagonal(diag, off)
        vecs = vecs * np.sign(vecs[-1])[None, :]
        lowest = max(m, abs(l1 - l2))
        for k in range(vecs.shape[1]):
            tables[lowest + k][m1 + l1, m + lowest + k] = vecs[:, k]
    for l, A in tables.items():
        sign = (-1.0) ** (l1 + l2 - l)
        for m in range(1, l + 1):
            A[:, -m + l] = sign * A[::-1, m + l]
        A.setflags(write=False)
    return tables


def _cg_array(l1: int, l2: int, l: int) -> np.ndarray:
    """Coefficient array ``A[m1 + l1, m + l] = C^{l1 l2 l}_{m1, m - m1, m}``."""
    check_triangle(l1, l2, l)
    return _cg_family(l1, l2)[l]


class _Coupling:
    """Sparse storage of a real coefficient tensor over ``m1 + m2 = m``."""

    def __init__(self, l1: int, l2: int, l: int, table: np.ndarray):
        self.l1, self.l2, self.l = l1, l2, l
        self.table = table

    @property
    def degrees(self) -> tuple[int, int, int]:
        return (self.l1, self.l2, self.l)

    def __repr__(self):
        return f"{type(self).__name__}{self.degrees}"

    def value(self, m1: int, m2: int, m: int) -> float:
        if m1 + m2 != m or abs(m1) > self.l1 or abs(m2) > self.l2 or abs(m) > self.l:
            return 0.0
        return float(self.table[m1 + self.l1, m + self.l])

    def dense(self) -> np.ndarray:
        """Dense tensor of shape ``(2l1+1, 2l2+1, 2l+1)``."""
        l1, l2, l = self.degrees
        out = np.zeros((2 * l1 + 1, 2 * l2 + 1, 2 * l + 1))
        m1 = np.arange(-l1, l1 + 1)[:, None]
        m = np.arange(-l, l + 1)[None, :]
        m2 = np.broadcast_to(m - m1, self.table.shape)
        ok = np.abs(m2) <= l2
        i1, im = np.nonzero(ok)
        out[i1, m2[ok] + l2, im] = self.table[ok]
        return out

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.table))

    def matrix(self) -> sp.csr_matrix:
        """``C^T`` as a sparse ``(2l+1) x (2l1+1)(2l2+1)`` matrix."""
        return _coupling_matrix(type(self), self.l1, self.l2, self.l)

    def contract(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """``C^T (u (x) v)`` for fragment blocks ``u``, ``v``.

        Parameters
        ----------
        u : ndarray, shape (2l1+1, t1)
        v : ndarray, shape (2l2+1, t2)

        Returns
        -------
        ndarray, shape (2l+1, t1*t2)
            Column ``i*t2 + j`` couples ``u[:, i]`` with ``v[:, j]``.
        """
        kron = np.einsum("at,bs->abts", u, v).reshape(u.shape[0] * v.shape[0], -1)
        out = self.matrix() @ kron
        return np.asarray(out, dtype=np.result_type(u, v))


def _build_matrix(block: _Coupling) -> sp.csr_matrix:
    l1, l2, l = block.degrees
    m1 = np.arange(-l1, l1 + 1)[:, None]
    m = np.arange(-l, l + 1)[None, :]
    m2 = np.broadcast_to(m - m1, block.table.shape)
    ok = (np.abs(m2) <= l2) & (block.table != 0)
    i1, im = np.nonzero(ok)
    cols = i1 * (2 * l2 + 1) + (m2[ok] + l2)
    return sp.csr_matrix(
        (block.table[ok], (im, cols)), shape=(2 * l + 1, (2 * l1 + 1) * (2 * l2 + 1))
    )


@lru_cache(maxsize=32768)
def _coupling_matrix(kind, l1, l2, l):
    return _build_matrix(kind._make(l1, l2, l))


class CGBlock(_Coupling):
    """Clebsch-Gordan coefficients ``C^{l1 l2 l}_{m1 m2 m}`` (Condon-Shortley)."""

    @staticmethod
    def _make(l1, l2, l):
        return clebsch_gordan(l1, l2, l)


class GauntBlock(_Coupling):
    """Gaunt coefficients ``int Y^{l1}_{m1} Y^{l2}_{m2} conj(Y^l_m)``."""

    @staticmethod
    def _make(l1, l2, l):
        return gaunt(l1, l2, l)


@lru_cache(maxsize=32768)
def clebsch_gordan(l1: int, l2: int, l: int) -> CGBlock:
    """Clebsch-Gordan block coupling degrees ``l1 (x) l2 -> l``.

    Raises
    ------
    ValueError
        If the triangle condition fails.
    """
    return CGBlock(l1, l2, l, _cg_array(l1, l2, l))


@lru_cache(maxsize=32768)
def gaunt(l1: int, l2: int, l: int) -> GauntBlock:
    """Gaunt block, the CG block scaled by
    ``sqrt((2l1+1)(2l2+1) / (4 pi (2l+1))) C^{l1 l2 l}_{000}``.

    The block vanishes identically when ``l1 + l2 + l`` is odd.
    """
    A = _cg_array(l1, l2, l)
    if (l1 + l2 + l) % 2:
        w = 0.0
    else:
        w = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) / (4 * math.pi * (2 * l + 1))) * A[l1, l]
    G = w * A
    G.setflags(write=False)
    return GauntBlock(l1, l2, l, G)
