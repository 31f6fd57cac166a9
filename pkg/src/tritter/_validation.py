"""Input checks shared by the public functions and estimators."""
from __future__ import annotations

import numpy as np

UNITARY_ATOL = 1e-10
PSD_ATOL = 1e-10


def check_square(matrix, name="matrix") -> np.ndarray:
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def unitarity_residual(matrix) -> float:
    a = np.asarray(matrix, dtype=complex)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))))


def check_unitary(matrix, atol=UNITARY_ATOL, name="matrix") -> np.ndarray:
    a = check_square(matrix, name)
    res = unitarity_residual(a)
    if res > atol:
        raise ValueError(f"{name} is not unitary (max |U^dag U - I| = {res:.3e})")
    return a


def check_gram(matrix, atol=PSD_ATOL) -> np.ndarray:
    s = check_square(matrix, "Gram matrix")
    if np.max(np.abs(s - s.conj().T)) > atol:
        raise ValueError("Gram matrix is not Hermitian")
    if np.max(np.abs(np.diag(s) - 1)) > atol:
        raise ValueError("Gram matrix must have unit diagonal")
    if np.max(np.abs(s)) > 1 + atol:
        raise ValueError("Gram matrix entries must have modulus <= 1")
    lo = float(np.min(np.linalg.eigvalsh((s + s.conj().T) / 2)))
    if lo < -atol:
        raise ValueError(f"Gram matrix is not positive semidefinite (min eigenvalue {lo:.3e})")
    return s


def check_fraction(value, name) -> float:
    v = float(value)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return v


def check_probabilities(p, atol=1e-9, name="probabilities") -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if np.any(a < -atol):
        raise ValueError(f"{name} contain negative entries")
    if abs(a.sum() - 1.0) > atol:
        raise ValueError(f"{name} sum to {a.sum()}, not 1")
    return np.clip(a, 0.0, None)
