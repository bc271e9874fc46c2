"""Generalized signals, channel stacks and rotations in harmonic space.

A generalized signal of bandlimit ``L`` stores, for every degree ``l < L``,
a complex matrix of shape ``(2l+1, tau[l])`` whose columns are the
fragments. Sphere signals have one fragment per degree; signals on the
rotation group with azimuthal bandlimit ``N`` store the coefficient block
``f^l_{mn}`` for ``|n| <= min(l, N-1)``, one fragment per ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _rng
from .so3 import Rotation, wigner_D_matrices

__all__ = [
    "SignalType",
    "GeneralizedSignal",
    "SphereHarmonic",
    "RotationHarmonic",
    "ChannelStack",
    "Rotation",
    "rotate_harmonic",
    "random_signal",
    "random_rotation",
    "relative_error",
    "invariant_readout",
]


@dataclass(frozen=True)
class SignalType:
    """Fragment counts per degree."""

    tau: tuple[int, ...]

    def __post_init__(self):
        tau = tuple(int(t) for t in self.tau)
        if any(t < 0 for t in tau):
            raise ValueError(f"fragment counts must be non-negative: {tau}")
        object.__setattr__(self, "tau", tau)

    @property
    def L(self) -> int:
        return len(self.tau)

    def __len__(self):
        return len(self.tau)

    def __getitem__(self, l):
        return self.tau[l]

    def __iter__(self):
        return iter(self.tau)

    @classmethod
    def sphere(cls, L: int) -> "SignalType":
        return cls((1,) * L)

    @classmethod
    def rotation(cls, L: int, N: int | None = None) -> "SignalType":
        N = L if N is None else N
        if not 1 <= N <= L:
            raise ValueError(f"azimuthal bandlimit must satisfy 1 <= N <= L, got N={N}, L={L}")
        return cls(tuple(min(2 * l + 1, 2 * N - 1) for l in range(L)))

    @classmethod
    def uniform(cls, L: int, t: int) -> "SignalType":
        return cls((t,) * L)

    def total(self) -> int:
        """Number of complex coefficients."""
        return sum((2 * l + 1) * t for l, t in enumerate(self.tau))


class GeneralizedSignal:
    """Element of the space of generalized signals.

    Parameters
    ----------
    fragments : sequence of ndarray
        ``fragments[l]`` has shape ``(2l+1, tau[l])``.
    """

    def __init__(self, fragments: Sequence[np.ndarray]):
        frags = []
        for l, f in enumerate(fragments):
            f = np.asarray(f)
            if f.ndim == 1:
                f = f[:, None]
            if f.ndim != 2 or f.shape[0] != 2 * l + 1:
                raise ValueError(f"degree {l} fragments must have {2 * l + 1} rows, got shape {f.shape}")
            if not np.iscomplexobj(f):
                f = f.astype(np.complex128)
            frags.append(f)
        self.fragments: list[np.ndarray] = frags

    # -- structure ---------------------------------------------------------
    @property
    def L(self) -> int:
        return len(self.fragments)

    @property
    def type(self) -> SignalType:
        return SignalType(tuple(f.shape[1] for f in self.fragments))

    @property
    def dtype(self):
        return self.fragments[0].dtype if self.fragments else np.dtype(np.complex128)

    def __getitem__(self, l: int) -> np.ndarray:
        return self.fragments[l]

    def __len__(self):
        return len(self.fragments)

    def __repr__(self):
        return f"{type(self).__name__}(L={self.L}, tau={self.type.tau})"

    @classmethod
    def zeros(cls, sig_type: SignalType, dtype=np.complex128) -> "GeneralizedSignal":
        return GeneralizedSignal([np.zeros((2 * l + 1, t), dtype) for l, t in enumerate(sig_type)])

    def _like(self, fragments) -> "GeneralizedSignal":
        """Same-kind signal with new fragments (used by arithmetic)."""
        return GeneralizedSignal(fragments)

    def map(self, fn) -> "GeneralizedSignal":
        return self._like([fn(f) for f in self.fragments])

    def to_generalized(self) -> "GeneralizedSignal":
        return GeneralizedSignal(self.fragments)

    def astype(self, dtype) -> "GeneralizedSignal":
        return self.map(lambda f: f.astype(dtype))

    def copy(self) -> "GeneralizedSignal":
        return self.map(np.copy)

    # -- arithmetic --------------------------------------------------------
    def _check(self, other: "GeneralizedSignal"):
        if self.type != other.type:
            raise ValueError(f"type mismatch: {self.type.tau} vs {other.type.tau}")

    def __add__(self, other):
        self._check(other)
        return self._like([a + b for a, b in zip(self.fragments, other.fragments)])

    def __sub__(self, other):
        self._check(other)
        return self._like([a - b for a, b in zip(self.fragments, other.fragments)])

    def __mul__(self, c):
        return self.map(lambda f: c * f)

    __rmul__ = __mul__

    def __neg__(self):
        return self.map(lambda f: -f)

    def degree_weights(self, norm: str = "coefficient") -> np.ndarray:
        """Per-degree weights of the squared norm.

        ``coefficient`` weighs every coefficient equally. ``l2`` gives the
        norm induced by the L2 inner product of the underlying function,
        which differs only for signals on SO(3).
        """
        if norm not in ("coefficient", "l2"):
            raise ValueError(f"unknown norm {norm!r}")
        return np.ones(self.L)

    def norm(self, norm: str = "coefficient") -> float:
        """Frobenius norm over all coefficients, optionally L2-weighted per degree."""
        w = self.degree_weights(norm)
        return float(np.sqrt(sum(wl * _sq(f) for wl, f in zip(w, self.fragments))))

    def flatten(self) -> np.ndarray:
        """Coefficients in (l, t, m) order."""
        if not self.fragments:
            return np.zeros(0, np.complex128)
        return np.concatenate([f.T.ravel() for f in self.fragments])

    def allclose(self, other, atol=1e-12) -> bool:
        return self.type == other.type and all(
            np.allclose(a, b, rtol=0, atol=atol) for a, b in zip(self.fragments, other.fragments)
        )


class SphereHarmonic(GeneralizedSignal):
    """Harmonic coefficients ``f^l_m`` of a signal on the sphere."""

    def __init__(self, fragments):
        super().__init__(fragments)
        if any(f.shape[1] != 1 for f in self.fragments):
            raise ValueError("sphere signals carry exactly one fragment per degree")

    def _like(self, fragments):
        return SphereHarmonic(fragments)

    def coefficients(self, l: int) -> np.ndarray:
        """``f^l_m`` for ``m = -l..l``."""
        return self.fragments[l][:, 0]

    @classmethod
    def from_generalized(cls, g: GeneralizedSignal) -> "SphereHarmonic":
        return cls(g.fragments)

    @classmethod
    def zeros(cls, L: int, dtype=np.complex128) -> "SphereHarmonic":
        return cls([np.zeros((2 * l + 1, 1), dtype) for l in range(L)])

    @classmethod
    def from_dict(cls, L: int, coeffs: dict, dtype=np.complex128) -> "SphereHarmonic":
        """Build from ``{(l, m): value}``."""
        out = cls.zeros(L, dtype)
        for (l, m), v in coeffs.items():
            out.fragments[l][m + l, 0] = v
        return out


class RotationHarmonic(GeneralizedSignal):
    """Harmonic coefficients ``g^l_{mn}`` of a signal on SO(3).

    Fragment ``t`` of degree ``l`` is the column ``n = t - min(l, N-1)``.
    """

    def __init__(self, fragments, N: int | None = None):
        super().__init__(fragments)
        L = self.L
        if N is None:
            N = max(((f.shape[1] + 1) // 2 for f in self.fragments), default=1)
        self.N = int(N)
        if self.type != SignalType.rotation(L, self.N):
            raise ValueError(f"fragment counts {self.type.tau} do not match an SO(3) signal with N={self.N}")

    def _like(self, fragments):
        return RotationHarmonic(fragments, self.N)

    def __repr__(self):
        return f"RotationHarmonic(L={self.L}, N={self.N})"

    def degree_weights(self, norm: str = "coefficient") -> np.ndarray:
        w = super().degree_weights(norm)
        if norm == "l2":
            w = (2 * np.arange(self.L) + 1) / (8 * np.pi**2)
        return w

    def block(self, l: int) -> np.ndarray:
        """``g^l_{mn}`` with rows ``m = -l..l`` and columns ``|n| <= min(l, N-1)``."""
        return self.fragments[l]

    def full_block(self, l: int) -> np.ndarray:
        """Square ``(2l+1, 2l+1)`` block, zero outside the azimuthal band."""
        k = min(l, self.N - 1)
        out = np.zeros((2 * l + 1, 2 * l + 1), self.dtype)
        out[:, l - k : l + k + 1] = self.fragments[l]
        return out

    @classmethod
    def from_full_blocks(cls, blocks: Iterable[np.ndarray], N: int | None = None) -> "RotationHarmonic":
        blocks = list(blocks)
        N = len(blocks) if N is None else N
        frags = []
        for l, b in enumerate(blocks):
            k = min(l, N - 1)
            frags.append(np.asarray(b)[:, l - k : l + k + 1])
        return cls(frags, N)

    @classmethod
    def from_generalized(cls, g: GeneralizedSignal, N: int | None = None) -> "RotationHarmonic":
        return cls(g.fragments, N)

    @classmethod
    def zeros(cls, L: int, N: int | None = None, dtype=np.complex128) -> "RotationHarmonic":
        sig = SignalType.rotation(L, N)
        return cls([np.zeros((2 * l + 1, t), dtype) for l, t in enumerate(sig)], L if N is None else N)


class ChannelStack:
    """``K`` generalized signals sharing one type."""

    def __init__(self, channels: Sequence[GeneralizedSignal]):
        channels = list(channels)
        if not channels:
            raise ValueError("a channel stack needs at least one channel")
        t0 = channels[0].type
        for k, c in enumerate(channels):
            if c.type != t0:
                raise ValueError(f"channel {k} has type {c.type.tau}, expected {t0.tau}")
        self.channels = channels

    @property
    def K(self) -> int:
        return len(self.channels)

    @property
    def type(self) -> SignalType:
        return self.channels[0].type

    @property
    def L(self) -> int:
        return self.channels[0].L

    def __len__(self):
        return len(self.channels)

    def __getitem__(self, k):
        return self.channels[k]

    def __iter__(self):
        return iter(self.channels)

    def map(self, fn) -> "ChannelStack":
        return ChannelStack([fn(c) for c in self.channels])

    def concatenated(self) -> GeneralizedSignal:
        """Single signal whose fragments are the channels' fragments side by side."""
        return GeneralizedSignal(
            [np.concatenate([c.fragments[l] for c in self.channels], axis=1) for l in range(self.L)]
        )

    def norm(self) -> float:
        return float(np.sqrt(sum(c.norm() ** 2 for c in self.channels)))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def rotate_harmonic(f, rho: Rotation):
    """Rotate a signal: every fragment is left-multiplied by ``D^l(rho)``.

    Works for ``GeneralizedSignal`` (and subclasses) and ``ChannelStack``.
    """
    if isinstance(f, ChannelStack):
        D = wigner_D_matrices(f.L, rho)
        return f.map(lambda c: _rotate_with(c, D))
    return _rotate_with(f, wigner_D_matrices(f.L, rho))


def _rotate_with(f: GeneralizedSignal, D: list[np.ndarray]):
    return f._like([(D[l].astype(frag.dtype) @ frag) for l, frag in enumerate(f.fragments)])


def random_signal(L: int, kind="sphere", seed: int = 0, N: int | None = None, dtype=np.complex128):
    """Random signal with i.i.d. complex standard normal coefficients.

    Parameters
    ----------
    L : int
        Bandlimit.
    kind : {"sphere", "so3"} or SignalType
        Sphere signal, rotation-group signal (with azimuthal bandlimit ``N``)
        or a generalized signal of the given type.
    seed : int
        64-bit seed. Coefficients are drawn in ``(l, t, m)`` order.
    """
    if isinstance(kind, SignalType):
        sig = kind
        if sig.L != L:
            raise ValueError(f"type length {sig.L} does not match L={L}")
    elif kind == "sphere":
        sig = SignalType.sphere(L)
    elif kind == "so3":
        sig = SignalType.rotation(L, N)
    else:
        raise ValueError(f"unknown signal kind {kind!r}")
    z = _rng.complex_normals(seed, sig.total())
    frags, pos = [], 0
    for l, t in enumerate(sig):
        n = (2 * l + 1) * t
        frags.append(z[pos : pos + n].reshape(t, 2 * l + 1).T.astype(dtype))
        pos += n
    if isinstance(kind, SignalType):
        return GeneralizedSignal(frags)
    if kind == "sphere":
        return SphereHarmonic(frags)
    return RotationHarmonic(frags, L if N is None else N)


def random_rotation(seed: int) -> Rotation:
    """Haar-uniform rotation: ``alpha, gamma ~ U[0, 2 pi)``, ``cos beta ~ U[-1, 1]``."""
    u = _rng.uniforms(seed, 3)
    return Rotation(2 * np.pi * u[0], float(np.arccos(np.clip(2 * u[1] - 1, -1, 1))), 2 * np.pi * u[2])


def relative_error(f, g, norm: str = "coefficient") -> float:
    """Relative distance ``||f - g|| / ||f||``.

    Parameters
    ----------
    f, g : GeneralizedSignal or ChannelStack
        Signals of matching type; ``f`` is the reference.
    norm : {"coefficient", "l2"}
        Unweighted coefficient norm, or the norm induced by the L2 inner
        product (weights ``(2l+1)/(8 pi^2)`` for signals on SO(3)).
    """
    if isinstance(f, ChannelStack):
        f, g = f.concatenated(), g.concatenated()
    if f.type != g.type:
        raise ValueError(f"type mismatch: {f.type.tau} vs {g.type.tau}")
    w = f.degree_weights(norm)
    ref = sum(wl * _sq(a) for wl, a in zip(w, f.fragments))
    if ref == 0:
        raise ValueError("reference signal has zero norm")
    diff = sum(
        wl * _sq(a.astype(np.complex128) - b.astype(np.complex128))
        for wl, a, b in zip(w, f.fragments, g.fragments)
    )
    return float(np.sqrt(diff / ref))


def _sq(a: np.ndarray) -> float:
    a = a.astype(np.complex128, copy=False)
    return float(np.vdot(a, a).real)


def invariant_readout(f: GeneralizedSignal) -> np.ndarray:
    """Degree-zero fragments flattened to a vector of rotation invariants."""
    if f.L == 0:
        return np.zeros(0, np.complex128)
    return f.fragments[0][0].copy()
