"""Plain-text formats for harmonic coefficients and filter geometry.

Coefficient files are CSV with ``#``-prefixed header lines::

    # kind=sphere
    # L=4
    l,m,t,re,im
    0,0,0,0.123,-0.5
    ...

For ``kind=so3`` an ``# N=`` header follows ``L`` and the third column is
``n`` instead of the fragment index ``t``. Values are written with 17
significant digits so files round-trip exactly.

Filter geometry is a small JSON document::

    {"domain": "s2", "rings": [{"theta": 0.1, "weights": [1, 0.5, 0.5]}, ...]}
    {"domain": "so3", "betas": [...], "weights": [[[...]]]}

An S^2 ring may give ``"anchors"`` and ``"n_phi"`` instead of ``"weights"``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .filters import DiracFilterS2, DiracFilterSO3, interpolate_ring
from .signals import GeneralizedSignal, RotationHarmonic, SignalType, SphereHarmonic

__all__ = ["write_signal_csv", "read_signal_csv", "read_filter_config", "FormatError"]


class FormatError(ValueError):
    """Malformed coefficient or configuration file."""


def _g(x: float) -> str:
    return format(float(x), ".17g")


def write_signal_csv(f: GeneralizedSignal, path) -> None:
    """Write a sphere, SO(3) or generalized signal as coefficient CSV."""
    lines = []
    if isinstance(f, RotationHarmonic):
        lines += ["# kind=so3", f"# L={f.L}", f"# N={f.N}", "l,m,n,re,im"]
    else:
        kind = "sphere" if isinstance(f, SphereHarmonic) else "generalized"
        lines += [f"# kind={kind}", f"# L={f.L}", "# tau=" + " ".join(map(str, f.type)), "l,m,t,re,im"]
    for l, frag in enumerate(f.fragments):
        cols = frag.shape[1]
        shift = (cols - 1) // 2 if isinstance(f, RotationHarmonic) else 0
        for m in range(-l, l + 1):
            for t in range(cols):
                v = frag[m + l, t]
                lines.append(f"{l},{m},{t - shift},{_g(v.real)},{_g(v.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_signal_csv(path) -> GeneralizedSignal:
    """Inverse of :func:`write_signal_csv`."""
    meta, rows = {}, []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            meta[key.strip()] = val.strip()
        elif line[0].isalpha():
            continue
        else:
            rows.append(line.split(","))
    try:
        kind, L = meta["kind"], int(meta["L"])
        if kind == "so3":
            N = int(meta["N"])
            tau = SignalType.rotation(L, N)
        elif kind == "sphere":
            tau = SignalType.sphere(L)
        else:
            tau = SignalType([int(t) for t in meta["tau"].split()])
        frags = [np.zeros((2 * l + 1, t), complex) for l, t in enumerate(tau)]
        for r in rows:
            l, m, t = int(r[0]), int(r[1]), int(r[2])
            if kind == "so3":
                t += (tau[l] - 1) // 2
            frags[l][m + l, t] = float(r[3]) + 1j * float(r[4])
    except (KeyError, IndexError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if kind == "so3":
        return RotationHarmonic(frags, N)
    if kind == "sphere":
        return SphereHarmonic(frags)
    return GeneralizedSignal(frags)


def read_filter_config(path):
    """Parse a JSON filter-geometry file into a Dirac filter."""
    try:
        cfg = json.loads(Path(path).read_text())
        domain = cfg.get("domain", "s2")
        if domain == "s2":
            thetas, weights = [], []
            for ring in cfg["rings"]:
                thetas.append(float(ring["theta"]))
                if "weights" in ring:
                    weights.append(np.asarray(ring["weights"], float))
                else:
                    weights.append(interpolate_ring([ring["anchors"]], int(ring["n_phi"]))[0])
            if len({w.size for w in weights}) != 1:
                raise FormatError("all rings must hold the same number of deltas")
            return DiracFilterS2(np.stack(weights), thetas)
        if domain == "so3":
            return DiracFilterSO3(np.asarray(cfg["weights"], float), cfg["betas"])
        raise FormatError(f"unknown filter domain {domain!r}")
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
