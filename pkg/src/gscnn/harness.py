"""Equivariance experiments and algebraic oracles.

The equivariance error of an operator ``A`` is the mean over random signals
``f_i`` and random rotations ``rho_j`` of

    || A(R f) - R(A f) || / || A(R f) ||,

measured with the norm induced by the L2 inner product of the output space.
Every signal gets its own random filter drawn the same way as the signals.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._rng import derive_seed
from .layers import (
    HarmonicFilter,
    complex_relu,
    conv_s2_axisym,
    conv_s2_to_so3,
    conv_so3,
    generalized_conv,
    pointwise_activation,
    tensor_activation,
    tensor_output_type,
)
from .mixing import mixing_set
from .signals import (
    SignalType,
    SphereHarmonic,
    random_rotation,
    random_signal,
    relative_error,
    rotate_harmonic,
)
from .so3 import gaunt

__all__ = [
    "EquivarianceConfig",
    "EquivarianceResult",
    "TableRow",
    "OPERATORS",
    "TABLE_D_ROWS",
    "DEFAULT_SO3_N",
    "equivariance_error",
    "gaunt_squaring",
    "pointwise_square",
    "run_table_d",
    "write_rows",
    "TABLE_COLUMNS",
]

#: default azimuthal bandlimit for rotation-group signals in the table
DEFAULT_SO3_N = 8

_DTYPES = {"single": np.complex64, "double": np.complex128}


@dataclass(frozen=True)
class EquivarianceConfig:
    """One equivariance experiment.

    Attributes
    ----------
    operator : str
        Key of :data:`OPERATORS`.
    L : int
        Bandlimit.
    N : int, optional
        Azimuthal bandlimit of rotation-group signals (default
        :data:`DEFAULT_SO3_N`, capped at ``L``).
    n_signals, n_rotations : int
    seed : int
    precision : {"single", "double"}
    oversample : int
        Oversampling factor for pointwise activations.
    threads : int
        Worker threads over signals; results do not depend on it.
    """

    operator: str
    L: int = 32
    N: int | None = None
    n_signals: int = 10
    n_rotations: int = 10
    seed: int = 0
    precision: str = "double"
    oversample: int = 1
    threads: int = 1

    def __post_init__(self):
        if self.n_signals < 1 or self.n_rotations < 1:
            raise ValueError("need at least one signal and one rotation")
        if self.precision not in _DTYPES:
            raise ValueError(f"precision must be 'single' or 'double', got {self.precision!r}")
        if self.operator not in OPERATORS:
            raise KeyError(f"unknown operator {self.operator!r}; known: {sorted(OPERATORS)}")

    @property
    def dtype(self):
        return _DTYPES[self.precision]

    @property
    def azimuthal(self) -> int:
        return min(self.L, DEFAULT_SO3_N if self.N is None else self.N)


@dataclass
class EquivarianceResult:
    """Mean relative error and the per-trial errors (signal-major order)."""

    config: EquivarianceConfig
    trials: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.trials))

    def per_signal(self) -> np.ndarray:
        return self.trials.reshape(self.config.n_signals, self.config.n_rotations)


# ---------------------------------------------------------------------------
# operator factories: (cfg, signal seed, filter seed) -> (input signal, operator)
# ---------------------------------------------------------------------------


def _sphere_input(cfg, s_seed):
    return random_signal(cfg.L, "sphere", s_seed, dtype=cfg.dtype)


def _so3_input(cfg, s_seed):
    return random_signal(cfg.L, "so3", s_seed, N=cfg.azimuthal, dtype=cfg.dtype)


def _op_s2_axisym(cfg, s_seed, f_seed):
    psi = random_signal(cfg.L, "sphere", f_seed, dtype=cfg.dtype)
    # keep only the m = 0 coefficients so the filter is axisymmetric
    psi = psi.map(lambda c: np.where(np.arange(c.shape[0])[:, None] == c.shape[0] // 2, c, 0).astype(c.dtype))
    return _sphere_input(cfg, s_seed), lambda f: conv_s2_axisym(f, psi)


def _op_s2_to_so3(cfg, s_seed, f_seed):
    psi = random_signal(cfg.L, "sphere", f_seed, dtype=cfg.dtype)
    return _sphere_input(cfg, s_seed), lambda f: conv_s2_to_so3(f, psi)


def _op_so3(cfg, s_seed, f_seed):
    psi = random_signal(cfg.L, "so3", f_seed, N=cfg.azimuthal, dtype=cfg.dtype)
    return _so3_input(cfg, s_seed), lambda f: conv_so3(f, psi, N_out=cfg.azimuthal)


def _tensor_gconv(kind):
    def factory(cfg, s_seed, f_seed):
        P = mixing_set(cfg.L, kind)
        tau_g = tensor_output_type(SignalType.sphere(cfg.L), P)
        psi = HarmonicFilter.random(tau_g, SignalType.sphere(cfg.L), f_seed, dtype=cfg.dtype)

        def op(f):
            return SphereHarmonic.from_generalized(generalized_conv(tensor_activation(f, P), psi))

        return _sphere_input(cfg, s_seed), op

    return factory


def _op_s2_relu(cfg, s_seed, f_seed):
    return _sphere_input(cfg, s_seed), lambda f: pointwise_activation(f, complex_relu, cfg.oversample)


def _op_so3_relu(cfg, s_seed, f_seed):
    return _so3_input(cfg, s_seed), lambda f: pointwise_activation(f, complex_relu, cfg.oversample)


OPERATORS: dict[str, Callable] = {
    "s2_to_s2_conv": _op_s2_axisym,
    "s2_to_so3_conv": _op_s2_to_so3,
    "so3_to_so3_conv": _op_so3,
    "tensor_gconv": _tensor_gconv("full"),
    "tensor_gconv_mst": _tensor_gconv("mst"),
    "s2_relu": _op_s2_relu,
    "so3_relu": _op_so3_relu,
}

#: (row label, operator, oversample factor) in table order
TABLE_D_ROWS: tuple[tuple[str, str, int], ...] = (
    ("S2 to S2 conv.", "s2_to_s2_conv", 1),
    ("S2 to SO(3) conv.", "s2_to_so3_conv", 1),
    ("SO(3) to SO(3) conv.", "so3_to_so3_conv", 1),
    ("Tensor-product activation -> Generalized conv.", "tensor_gconv", 1),
    ("S2 ReLU", "s2_relu", 1),
    ("S2 ReLU (2x oversampling)", "s2_relu", 2),
    ("S2 ReLU (4x oversampling)", "s2_relu", 4),
    ("S2 ReLU (8x oversampling)", "s2_relu", 8),
    ("SO(3) ReLU", "so3_relu", 1),
    ("SO(3) ReLU (2x oversampling)", "so3_relu", 2),
    ("SO(3) ReLU (4x oversampling)", "so3_relu", 4),
    ("SO(3) ReLU (8x oversampling)", "so3_relu", 8),
)

EXACT_ROWS = TABLE_D_ROWS[:4]


def _signal_trials(cfg: EquivarianceConfig, i: int, rotations) -> list[float]:
    f, op = OPERATORS[cfg.operator](cfg, derive_seed(cfg.seed, 0, i), derive_seed(cfg.seed, 1, i))
    Af = op(f)
    out = []
    for rho in rotations:
        lhs = op(rotate_harmonic(f, rho))
        out.append(relative_error(lhs, rotate_harmonic(Af, rho), norm="l2"))
    return out


def equivariance_error(cfg: EquivarianceConfig) -> EquivarianceResult:
    """Mean relative equivariance error over ``n_signals x n_rotations`` trials."""
    rotations = [random_rotation(derive_seed(cfg.seed, 2, j)) for j in range(cfg.n_rotations)]
    work = lambda i: _signal_trials(cfg, i, rotations)  # noqa: E731
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            rows = list(pool.map(work, range(cfg.n_signals)))
    else:
        rows = [work(i) for i in range(cfg.n_signals)]
    return EquivarianceResult(cfg, np.array(rows, dtype=float).ravel())


# ---------------------------------------------------------------------------
# squaring oracle
# ---------------------------------------------------------------------------


def gaunt_squaring(f: SphereHarmonic) -> SphereHarmonic:
    """Coefficients of ``f^2`` up to bandlimit ``2L - 1`` from Gaunt contractions alone.

    ``(f^2)^l = sum_{l1, l2} (G^{l1 l2 l})^T (f^{l1} (x) f^{l2})`` over all
    ordered input pairs; unordered pairs with ``l1 != l2`` appear twice.
    """
    L = f.L
    L_out = max(2 * L - 1, 1)
    out = [np.zeros((2 * l + 1, 1), np.result_type(f.dtype, np.complex128)) for l in range(L_out)]
    for a in range(L):
        for b in range(a, L):
            mult = 1.0 if a == b else 2.0
            for l in range(b - a, a + b + 1):
                if (a + b + l) % 2:
                    continue
                out[l] += mult * gaunt(a, b, l).contract(f.fragments[a], f.fragments[b])
    return SphereHarmonic(out)


def pointwise_square(f: SphereHarmonic, oversample: int = 2) -> SphereHarmonic:
    """``f^2`` computed in real space on an oversampled grid, bandlimit ``2L - 1``."""
    return pointwise_activation(f, np.square, oversample, L_out=max(2 * f.L - 1, 1))


# ---------------------------------------------------------------------------
# table reproduction
# ---------------------------------------------------------------------------

TABLE_COLUMNS = ("row_label", "mean_error", "n_signals", "n_rotations", "L", "precision", "seed")


@dataclass(frozen=True)
class TableRow:
    row_label: str
    mean_error: float
    n_signals: int
    n_rotations: int
    L: int
    precision: str
    seed: int
    operator: str = ""
    oversample: int = 1
    trials: tuple = field(default=(), repr=False, compare=False)

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in TABLE_COLUMNS}


def run_table_d(
    seed: int = 0,
    L: int = 32,
    n_signals: int = 10,
    n_rotations: int = 10,
    precision: str = "single",
    N: int | None = None,
    rows: Sequence[tuple[str, str, int]] = TABLE_D_ROWS,
    threads: int = 1,
) -> list[TableRow]:
    """Evaluate the equivariance table: exact layers and ReLU at four oversampling levels."""
    out = []
    for label, op, c in rows:
        cfg = EquivarianceConfig(op, L, N, n_signals, n_rotations, seed, precision, c, threads)
        res = equivariance_error(cfg)
        out.append(TableRow(label, res.mean, n_signals, n_rotations, L, precision, seed, op, c, tuple(res.trials)))
    return out


def write_rows(rows: Sequence[dict], path, fmt: str = "csv", columns: Sequence[str] | None = None) -> None:
    """Write report rows as CSV (canonical) or JSON with the same fields."""
    rows = [r.as_dict() if hasattr(r, "as_dict") else dict(r) for r in rows]
    columns = list(columns or (rows[0].keys() if rows else []))
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({c: _fmt(r[c]) for c in columns})
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump([{c: r[c] for c in columns} for r in rows], fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _fmt(v):
    return repr(v) if isinstance(v, float) else v
