"""Deterministic random streams.

Uniforms come from numpy's Philox counter-based generator keyed directly by
a 64-bit seed; normals use the Box-Muller transform so the full chain is
easy to reproduce outside numpy.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, *path: int) -> int:
    """Child seed obtained by folding ``path`` into ``seed`` with SplitMix64."""
    s = int(seed) & _MASK
    for p in path:
        s = _splitmix64(s ^ _splitmix64(int(p) & _MASK))
    return s


def generator(seed: int) -> np.random.Generator:
    """Philox generator whose key is the 64-bit ``seed``."""
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK))


def uniforms(seed: int, n: int) -> np.ndarray:
    """``n`` doubles in ``[0, 1)``."""
    return generator(seed).random(n)


def complex_normals(seed: int, n: int) -> np.ndarray:
    """``n`` complex numbers with independent N(0, 1) real and imaginary parts.

    Uniform pairs ``(u0, u1)`` map to ``r e^{2 pi i u1}`` with
    ``r = sqrt(-2 log(1 - u0))``.
    """
    u = uniforms(seed, 2 * n).reshape(n, 2)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    return r * np.cos(theta) + 1j * (r * np.sin(theta))
