"""Unitary characterisation from classical-light data and two-photon visibilities."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_square, unitarity_residual
from .circuit import CircuitUnitary, ideal_tritter


@dataclass(frozen=True)
class IntensityData:
    """``I[k, j]``: fraction of light injected in input ``k`` leaving output ``j``."""

    I: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.I, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("intensity data must be square")
        if np.any(a < 0):
            raise ValueError("intensities must be non-negative")
        if np.any(np.abs(a.sum(axis=1) - 1) > 1e-6):
            raise ValueError("each input row must be normalized to 1")
        object.__setattr__(self, "I", a)

    @property
    def m(self) -> int:
        return self.I.shape[0]


@dataclass(frozen=True)
class FringeData:
    """Output-intensity fringes when inputs ``i < j`` are driven together.

    ``amplitude[i, j, k]`` and ``phase[i, j, k]`` describe output ``k`` as
    ``offset + amplitude * cos(theta + phase)`` versus the relative input
    phase ``theta``; only ``i < j`` entries are meaningful.
    """

    amplitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitude, dtype=float)
        p = np.asarray(self.phase, dtype=float)
        if a.ndim != 3 or a.shape != p.shape or not (a.shape[0] == a.shape[1] == a.shape[2]):
            raise ValueError("fringe arrays must both have shape (m, m, m)")
        if np.any(a < 0):
            raise ValueError("fringe amplitudes must be non-negative")
        p = np.angle(np.exp(1j * p))
        p[np.isclose(p, -np.pi)] = np.pi
        object.__setattr__(self, "amplitude", a)
        object.__setattr__(self, "phase", p)

    @property
    def m(self) -> int:
        return self.amplitude.shape[0]


def _fit_fringe(theta: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares ``y = c + a cos(theta + phi)``; returns ``(a, phi)``."""
    X = np.column_stack([np.ones_like(theta), np.cos(theta), -np.sin(theta)])
    c, acos, asin = np.linalg.lstsq(X, y, rcond=None)[0]
    return float(np.hypot(acos, asin)), float(np.arctan2(asin, acos))


def simulate_measurements(U: CircuitUnitary, noise: float = 0.0, seed=None,
                          n_phase_steps: int = 36) -> tuple[IntensityData, FringeData]:
    """Synthetic classical-light characterisation data for ``U``.

    Every recorded intensity is multiplied by ``1 + noise * N(0, 1)``. Fringes
    are sampled at ``n_phase_steps`` relative phases and fitted with a
    sinusoid, as done with a swept phase in the lab.
    """
    if noise < 0:
        raise ValueError("noise level must be non-negative")
    rng = np.random.default_rng(seed)
    u = U.matrix
    m = U.m

    def noisy(x):
        if noise == 0:
            return x
        return np.clip(x * (1.0 + noise * rng.standard_normal(np.shape(x))), 0.0, None)

    single = noisy(np.abs(u.T) ** 2)
    single = single / single.sum(axis=1, keepdims=True)

    theta = np.linspace(0.0, 2 * np.pi, n_phase_steps, endpoint=False)
    amp = np.zeros((m, m, m))
    phase = np.zeros((m, m, m))
    for i, j in itertools.combinations(range(m), 2):
        # equal-power beams into i and j with relative phase theta on j
        field = (u[:, i][:, None] + u[:, j][:, None] * np.exp(1j * theta)[None, :]) / np.sqrt(2)
        trace = noisy(np.abs(field) ** 2)
        for k in range(m):
            amp[i, j, k], phase[i, j, k] = _fit_fringe(theta, trace[k])
    return IntensityData(single), FringeData(amp, phase)


def _fix_gauge(u: np.ndarray) -> np.ndarray:
    """Rephase rows and columns so the first row and first column are real and >= 0."""
    col = u[:, 0]
    row_phase = np.where(np.abs(col) > 1e-15, np.exp(-1j * np.angle(col)), 1.0)
    u = row_phase[:, None] * u
    top = u[0, :]
    col_phase = np.where(np.abs(top) > 1e-15, np.exp(-1j * np.angle(top)), 1.0)
    col_phase[0] = 1.0
    return u * col_phase[None, :]


def nearest_unitary(w: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition ``w = U P``."""
    a, _, bh = np.linalg.svd(check_square(w))
    return a @ bh


@dataclass(frozen=True)
class Reconstruction:
    unitary: CircuitUnitary
    raw: np.ndarray
    residual: float
    consistent: bool


def reconstruct_unitary(data: tuple[IntensityData, FringeData], tol: float = 0.05) -> Reconstruction:
    """Rebuild ``U`` up to input/output phases from intensity and fringe data.

    Moduli come from the single-input intensities. With the gauge fixed to a
    real, non-negative first row and column, the phase of ``U[j, k]`` is the
    fringe phase of pair ``(0, k)`` at output ``j`` minus that at output 0.
    The raw estimate is projected onto the nearest unitary; a projection
    residual above ``tol`` marks the data as inconsistent (with a warning).
    """
    intens, fringes = data
    if intens.m != fringes.m:
        raise ValueError("intensity and fringe data describe different mode counts")
    m = intens.m
    mod = np.sqrt(intens.I.T)  # mod[out, in]
    arg = np.zeros((m, m))
    for k in range(1, m):
        arg[:, k] = fringes.phase[0, k, :] - fringes.phase[0, k, 0]
    raw = mod * np.exp(1j * arg)
    u = _fix_gauge(nearest_unitary(raw))
    residual = float(np.max(np.abs(u - _fix_gauge(raw))))
    consistent = residual <= tol
    if not consistent:
        warnings.warn(f"measurement data far from unitary (residual {residual:.3g})", RuntimeWarning, stacklevel=2)
    return Reconstruction(CircuitUnitary(u, label="reconstructed"), raw, residual, consistent)


@dataclass(frozen=True)
class VisibilityMatrix:
    """``values[a, b]`` for input pair ``input_pairs[a]`` and output pair ``output_pairs[b]``.

    Undefined entries (zero classical coincidence probability) are NaN.
    """

    values: np.ndarray
    input_pairs: tuple[tuple[int, int], ...]
    output_pairs: tuple[tuple[int, int], ...]

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def __getitem__(self, key) -> float:
        (i, j), (k, l) = key
        return float(self.values[self.input_pairs.index((i, j)), self.output_pairs.index((k, l))])


def visibility_matrix(U: CircuitUnitary | np.ndarray, atol: float = 1e-14) -> VisibilityMatrix:
    """Two-photon HOM-type visibilities ``(P_classical - P_quantum) / P_classical``."""
    u = U.matrix if isinstance(U, CircuitUnitary) else check_square(U)
    m = u.shape[0]
    pairs = tuple(itertools.combinations(range(m), 2))
    vals = np.full((len(pairs), len(pairs)), np.nan)
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            x = u[k, i] * u[l, j]
            y = u[l, i] * u[k, j]
            pc = abs(x) ** 2 + abs(y) ** 2
            if pc > atol:
                vals[a, b] = (pc - abs(x + y) ** 2) / pc
    return VisibilityMatrix(vals, pairs, pairs)


def _visibility_diff(v_exp: VisibilityMatrix, v_th: VisibilityMatrix) -> np.ndarray:
    if v_exp.input_pairs != v_th.input_pairs or v_exp.output_pairs != v_th.output_pairs:
        raise ValueError("visibility matrices cover different mode pairs")
    if not (v_exp.defined.all() and v_th.defined.all()):
        raise ValueError("fidelity undefined: visibility matrix has undefined entries")
    return np.abs(v_th.values - v_exp.values)


def fidelity(v_exp: VisibilityMatrix, v_th: VisibilityMatrix) -> float:
    """``1 - sum |V_th - V_exp| / 18``, the normalisation used for 3-mode chips."""
    return 1.0 - float(_visibility_diff(v_exp, v_th).sum()) / 18.0


def normalized_fidelity(v_exp: VisibilityMatrix, v_th: VisibilityMatrix) -> float:
    """``1 -`` mean absolute visibility difference."""
    return 1.0 - float(_visibility_diff(v_exp, v_th).mean())


class UnitaryReconstructor(BaseEstimator):
    """Estimator wrapper around :func:`reconstruct_unitary`.

    Parameters
    ----------
    tol : float
        Largest tolerated distance between raw estimate and its unitary
        projection before the data are flagged inconsistent.
    reference : array-like or None
        Target unitary for :meth:`score`; defaults to the ideal tritter.

    Attributes
    ----------
    unitary_ : CircuitUnitary
    residual_ : float
    visibility_ : VisibilityMatrix
    """

    def __init__(self, tol: float = 0.05, reference=None):
        self.tol = tol
        self.reference = reference

    def fit(self, intensities, fringes=None):
        if fringes is None:
            intensities, fringes = intensities
        if not isinstance(intensities, IntensityData):
            intensities = IntensityData(intensities)
        rec = reconstruct_unitary((intensities, fringes), tol=self.tol)
        self.unitary_ = rec.unitary
        self.residual_ = rec.residual
        self.consistent_ = rec.consistent
        self.visibility_ = visibility_matrix(rec.unitary)
        self.n_modes_ = intensities.m
        return self

    def _reference(self, m):
        if self.reference is None:
            return ideal_tritter(m)
        ref = self.reference
        return ref if isinstance(ref, CircuitUnitary) else CircuitUnitary(np.asarray(ref))

    def transform(self, X=None):
        """Return the reconstructed matrix as an ndarray."""
        check_is_fitted(self, "unitary_")
        return np.array(self.unitary_.matrix)

    def score(self, X=None, y=None):
        """Visibility fidelity of the fitted unitary to ``reference``."""
        check_is_fitted(self, "unitary_")
        return fidelity(self.visibility_, visibility_matrix(self._reference(self.n_modes_)))


__all__ = [
    "IntensityData", "FringeData", "Reconstruction", "VisibilityMatrix", "UnitaryReconstructor",
    "simulate_measurements", "reconstruct_unitary", "nearest_unitary", "visibility_matrix",
    "fidelity", "normalized_fidelity", "unitarity_residual",
]
