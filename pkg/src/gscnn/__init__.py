"""Generalized spherical CNN building blocks.

Exact harmonic transforms on S^2 and SO(3), Clebsch-Gordan and Gaunt
couplings, tensor-product activations with sparse degree-mixing sets,
generalized convolutions, Dirac-delta filters, an analytic cost model and an
equivariance test harness.
"""

from .signals import (
    ChannelStack,
    GeneralizedSignal,
    RotationHarmonic,
    SignalType,
    SphereHarmonic,
    invariant_readout,
    random_rotation,
    random_signal,
    relative_error,
    rotate_harmonic,
)
from .so3 import Rotation, clebsch_gordan, gaunt, wigner_d, wigner_D

__version__ = "0.1.0"

__all__ = [
    "ChannelStack",
    "GeneralizedSignal",
    "RotationHarmonic",
    "SignalType",
    "SphereHarmonic",
    "Rotation",
    "clebsch_gordan",
    "gaunt",
    "invariant_readout",
    "random_rotation",
    "random_signal",
    "relative_error",
    "rotate_harmonic",
    "wigner_d",
    "wigner_D",
]
