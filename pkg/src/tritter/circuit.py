"""Interferometer unitaries: couplers, phase shifters and the tritter.

Matrices act on column vectors of input-mode amplitudes, ``U[out, in]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._validation import check_fraction, check_unitary


@dataclass(frozen=True)
class CircuitUnitary:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        u = check_unitary(self.matrix, name=f"unitary {self.label!r}" if self.label else "unitary")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def H(self) -> "CircuitUnitary":
        return CircuitUnitary(self.matrix.conj().T, label=f"{self.label}^dag")

    def __matmul__(self, other: "CircuitUnitary") -> "CircuitUnitary":
        return CircuitUnitary(self.matrix @ other.matrix, label=f"{self.label}*{other.label}")


def coupler_unitary(r: float, i: int, j: int, m: int) -> CircuitUnitary:
    """Directional coupler of reflectivity ``r`` between modes ``i`` and ``j``.

    ``r`` is the probability of staying in the same waveguide; the crossing
    amplitude carries a factor ``1j``.
    """
    r = check_fraction(r, "reflectivity")
    if i == j:
        raise ValueError("coupler needs two distinct modes")
    if not (0 <= i < m and 0 <= j < m):
        raise ValueError(f"coupler modes ({i}, {j}) outside [0, {m})")
    u = np.eye(m, dtype=complex)
    bar, cross = np.sqrt(r), 1j * np.sqrt(1.0 - r)
    u[i, i] = u[j, j] = bar
    u[i, j] = u[j, i] = cross
    return CircuitUnitary(u, label=f"DC({i},{j};{r:.6g})")


def phase_unitary(phi: float, k: int, m: int) -> CircuitUnitary:
    if not 0 <= k < m:
        raise ValueError(f"phase mode {k} outside [0, {m})")
    u = np.eye(m, dtype=complex)
    u[k, k] = np.exp(1j * phi)
    return CircuitUnitary(u, label=f"PS({k};{phi:.6g})")


def compose(elements: Sequence[CircuitUnitary], label: str = "") -> CircuitUnitary:
    """Serial composition; ``elements[0]`` is the first element light meets."""
    elements = list(elements)
    if not elements:
        raise ValueError("cannot compose an empty circuit")
    m = elements[0].m
    total = np.eye(m, dtype=complex)
    for el in elements:
        if el.m != m:
            raise ValueError(f"mode-count mismatch: {el.m} != {m}")
        total = el.matrix @ total
    return CircuitUnitary(total, label=label or " -> ".join(e.label for e in elements))


def ideal_tritter(m: int = 3) -> CircuitUnitary:
    """Symmetric ``m``-mode Fourier interferometer, ``exp(2i pi jk/m)/sqrt(m)``."""
    j, k = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    return CircuitUnitary(np.exp(2j * np.pi * j * k / m) / np.sqrt(m), label="ideal tritter")


@dataclass(frozen=True)
class TritterLayout:
    r1: float = 0.5
    r2: float = 1.0 / 3.0
    phi: float = np.pi / 2

    def __post_init__(self):
        check_fraction(self.r1, "r1")
        check_fraction(self.r2, "r2")


def build_tritter(layout: TritterLayout) -> CircuitUnitary:
    """Three couplers with a phase shifter on the middle waveguide.

    DC(0,1; r1) -> DC(1,2; r2) -> phase(1) -> DC(0,1; r1). At ``phi`` equal to
    pi/2 or 3pi/2 with the nominal reflectivities this reproduces the
    two-photon visibilities of :func:`ideal_tritter`.
    """
    return compose(
        [
            coupler_unitary(layout.r1, 0, 1, 3),
            coupler_unitary(layout.r2, 1, 2, 3),
            phase_unitary(layout.phi, 1, 3),
            coupler_unitary(layout.r1, 0, 1, 3),
        ],
        label=f"tritter(r1={layout.r1:.6g}, r2={layout.r2:.6g}, phi={layout.phi:.6g})",
    )


@dataclass(frozen=True)
class PhaseCalibration:
    """Measured (voltage, phase) pairs for a thermo-optic shifter."""

    voltages: tuple[float, ...]
    phases: tuple[float, ...]
    _v: np.ndarray = field(init=False, repr=False, compare=False)
    _p: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.voltages, dtype=float)
        p = np.asarray(self.phases, dtype=float)
        if v.ndim != 1 or v.shape != p.shape:
            raise ValueError("voltages and phases must be 1-D and equally long")
        if v.size < 2:
            raise ValueError("calibration needs at least two points")
        if np.any(np.diff(v) <= 0):
            raise ValueError("calibration voltages must be strictly increasing")
        if not (np.all(np.diff(p) >= 0) or np.all(np.diff(p) <= 0)):
            raise ValueError("calibration phases must be monotone in voltage")
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_p", p)

    @classmethod
    def from_pairs(cls, pairs) -> "PhaseCalibration":
        pairs = list(pairs)
        return cls(tuple(float(a) for a, _ in pairs), tuple(float(b) for _, b in pairs))


def phase_from_voltage(cal: PhaseCalibration, v: float) -> float:
    v = float(v)
    if not cal._v[0] <= v <= cal._v[-1]:
        raise ValueError(f"voltage {v} V outside calibrated range [{cal._v[0]}, {cal._v[-1]}] V")
    return float(np.interp(v, cal._v, cal._p))
