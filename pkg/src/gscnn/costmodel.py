"""Analytical flop, memory and parameter counts for generalized layers.

The reference layer is a tensor-product activation followed by a generalized
convolution. Conventions:

* complex multiply = 6 flops, complex add = 2 flops, real-by-complex
  multiply = 2 flops;
* one CG term (``C * f1 * f2`` accumulated) = 6 + 2 + 2 = 10 flops;
* one complex multiply-accumulate in a convolution = 8 flops;
* memory holds input and output representations, the expanded
  intermediate, the filter weights, one gradient buffer each for the
  intermediate and the weights, and the CG coefficient tables used by the
  activation. Batch size 1.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .mixing import KINDS, edge_weight, mixing_set
from .signals import SignalType

__all__ = [
    "LayerCostSpec",
    "CostReport",
    "OpCounter",
    "count_activation_flops",
    "count_conv",
    "count_layer",
    "compare_efficient_vs_baseline",
    "efficiency_curve",
    "grid_sample_counts",
    "so3_transform_complexity",
    "FLOPS_PER_CG_TERM",
    "FLOPS_PER_CMAC",
    "ASSUMPTIONS",
]

FLOPS_PER_CG_TERM = 10
FLOPS_PER_CMAC = 8

ASSUMPTIONS = (
    "complex mul=6, complex add=2, real*complex=2 flops; CG term=10; conv MAC=8",
    "memory: representations in/out + expanded intermediate + weights, "
    "gradients for intermediate and weights, dense CG tables, batch 1",
)


class OpCounter:
    """Accumulates operation counts by category.

    Transforms and layer operators accept an optional counter and add the
    flops they perform.
    """

    def __init__(self):
        self.counts: Counter = Counter()

    def add(self, kind: str, flops: int) -> None:
        self.counts[kind] += int(flops)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, kind):
        return self.counts[kind]

    def reset(self) -> None:
        self.counts.clear()


@dataclass(frozen=True)
class LayerCostSpec:
    """Shape description of one activation + convolution layer.

    Attributes
    ----------
    L : int
        Bandlimit.
    K_in, K_out : int
        Channel counts.
    tau_in : SignalType
        Per-channel input type.
    tau_out : SignalType
        Per-channel output type of the convolution.
    mixing : str
        ``full``, ``mst`` or ``rmst``.
    conv : str
        ``unconstrained`` or ``constrained``.
    bytes_per_real : int
        4 for single precision, 8 for double.
    cg_storage : str
        ``dense`` stores every CG table densely in real precision,
        ``sparse`` stores only nonzero terms, ``none`` leaves them out.
    """

    L: int
    K_in: int
    K_out: int
    tau_in: SignalType
    tau_out: SignalType
    mixing: str = "full"
    conv: str = "unconstrained"
    bytes_per_real: int = 4
    cg_storage: str = "dense"

    def __post_init__(self):
        if self.mixing not in KINDS:
            raise ValueError(f"unknown mixing kind {self.mixing!r}")
        if self.conv not in ("unconstrained", "constrained"):
            raise ValueError(f"unknown convolution kind {self.conv!r}")
        if self.cg_storage not in ("dense", "sparse", "none"):
            raise ValueError(f"unknown CG storage {self.cg_storage!r}")
        if len(self.tau_in) != self.L or len(self.tau_out) != self.L:
            raise ValueError("types must have one entry per degree")
        if self.K_in < 1 or self.K_out < 1:
            raise ValueError("channel counts must be positive")

    def expanded_type(self) -> tuple[int, ...]:
        """``tau_g[l] = sum_P tau[l1] tau[l2]`` per channel."""
        P = mixing_set(self.L, self.mixing)
        return tuple(sum(self.tau_in[a] * self.tau_in[b] for a, b in P[l]) for l in range(self.L))


@dataclass(frozen=True)
class CostReport:
    flops: int
    memory_bytes: int = 0
    parameters: int = 0
    breakdown: dict = field(default_factory=dict, compare=False)


def count_activation_flops(spec: LayerCostSpec) -> int:
    """Flops of the (channel-wise) tensor-product activation."""
    P = mixing_set(spec.L, spec.mixing)
    per_channel = 0
    for l in range(spec.L):
        for a, b in P[l]:
            per_channel += spec.tau_in[a] * spec.tau_in[b] * edge_weight(a, b, l)
    return FLOPS_PER_CG_TERM * spec.K_in * per_channel


def _conv_shapes(spec: LayerCostSpec):
    tau_g = spec.expanded_type()
    return tau_g, spec.tau_out


def count_conv(spec: LayerCostSpec) -> CostReport:
    """Flops and parameters of the generalized convolution."""
    tau_g, tau_h = _conv_shapes(spec)
    K, J = spec.K_in, spec.K_out
    flops = params = 0
    for l in range(spec.L):
        d = 2 * l + 1
        g, h = tau_g[l], tau_h[l]
        if spec.conv == "unconstrained":
            p = K * g * J * h
            flops += FLOPS_PER_CMAC * d * p
        else:
            p = g * h + K * h * h + K * J
            flops += FLOPS_PER_CMAC * d * (K * g * h + K * h * h + K * J * h)
        params += p
    return CostReport(flops=flops, parameters=params)


def _cg_entries(spec: LayerCostSpec) -> int:
    if spec.cg_storage == "none":
        return 0
    P = mixing_set(spec.L, spec.mixing)
    total = 0
    for l in range(spec.L):
        for a, b in P[l]:
            if spec.cg_storage == "dense":
                total += (2 * a + 1) * (2 * b + 1) * (2 * l + 1)
            else:
                total += edge_weight(a, b, l)
    return total


def count_layer(spec: LayerCostSpec) -> CostReport:
    """Total flops, memory and parameters of activation + convolution."""
    act = count_activation_flops(spec)
    conv = count_conv(spec)
    tau_g, tau_h = _conv_shapes(spec)
    deg = [2 * l + 1 for l in range(spec.L)]
    rep_in = spec.K_in * sum(d * t for d, t in zip(deg, spec.tau_in))
    rep_out = spec.K_out * sum(d * t for d, t in zip(deg, tau_h))
    expanded = spec.K_in * sum(d * t for d, t in zip(deg, tau_g))
    complex_bytes = 2 * spec.bytes_per_real
    mem_rep = complex_bytes * (rep_in + rep_out + 2 * expanded)
    mem_w = complex_bytes * 2 * conv.parameters
    mem_cg = spec.bytes_per_real * _cg_entries(spec)
    return CostReport(
        flops=act + conv.flops,
        memory_bytes=mem_rep + mem_w + mem_cg,
        parameters=conv.parameters,
        breakdown={
            "activation_flops": act,
            "conv_flops": conv.flops,
            "representation_bytes": mem_rep,
            "weight_bytes": mem_w,
            "cg_bytes": mem_cg,
        },
    )


def baseline_spec(L: int, K: int, **kw) -> LayerCostSpec:
    """Single channel of type ``(K, ..., K)``, full mixing, unconstrained conv."""
    return LayerCostSpec(L, 1, 1, SignalType.uniform(L, K), SignalType.uniform(L, K), "full", "unconstrained", **kw)


def efficient_spec(L: int, K: int, **kw) -> LayerCostSpec:
    """``K`` channels of type ``(1, ..., 1)``, MST mixing, constrained conv."""
    one = SignalType.uniform(L, 1)
    return LayerCostSpec(L, K, K, one, one, "mst", "constrained", **kw)


def compare_efficient_vs_baseline(L: int, K: int, cg_storage: str = "dense") -> tuple[float, float]:
    """Flop and memory reduction factors of the efficient layer over the baseline."""
    row = _compare_row(L, K, cg_storage)
    return row["flop_factor"], row["mem_factor"]


def _compare_row(L: int, K: int, cg_storage: str = "dense") -> dict:
    base = count_layer(baseline_spec(L, K, cg_storage=cg_storage))
    eff = count_layer(efficient_spec(L, K, cg_storage=cg_storage))
    return {
        "L": L,
        "K": K,
        "flops_base": base.flops,
        "flops_eff": eff.flops,
        "flop_factor": base.flops / eff.flops,
        "mem_base": base.memory_bytes,
        "mem_eff": eff.memory_bytes,
        "mem_factor": base.memory_bytes / eff.memory_bytes,
    }


def efficiency_curve(Ls: Iterable[int], K: int, cg_storage: str = "dense") -> list[dict]:
    """One comparison row per bandlimit, ready for CSV output."""
    return [_compare_row(int(L), K, cg_storage) for L in Ls]


def grid_sample_counts(L: int, N: int | None = None, scheme: str = "mw", domain: str = "s2") -> int:
    """Number of samples of a sampling theorem.

    Parameters
    ----------
    scheme : {"mw", "dh"}
        McEwen-Wiaux (``L(2L-1)`` on the sphere) or Driscoll-Healy
        (``2L(2L-1)``, the equiangular ``2L`` colatitude variant).
    domain : {"s2", "so3"}
        On SO(3) the sphere count is multiplied by the ``2N-1`` samples of
        the third Euler angle.
    """
    if L < 1:
        raise ValueError("bandlimit must be positive")
    N = L if N is None else N
    if scheme == "mw":
        s2 = L * (2 * L - 1)
    elif scheme == "dh":
        s2 = 2 * L * (2 * L - 1)
    else:
        raise ValueError(f"unknown sampling scheme {scheme!r}")
    if domain == "s2":
        return s2
    if domain == "so3":
        return s2 * (2 * N - 1)
    raise ValueError(f"unknown domain {domain!r}")


def so3_transform_complexity(L: int, N: int) -> int:
    """Leading-order cost ``N L^3`` of an SO(3) transform with azimuthal bandlimit ``N``."""
    return N * L**3


def log2_ceil(x: int) -> int:
    return math.ceil(math.log2(x))
