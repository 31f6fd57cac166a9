"""Multiphoton output statistics for partially distinguishable photons.

Photons are described by their input mode and a Gram matrix of pairwise
internal-state overlaps ``S[i, j] = <psi_i|psi_j>``. ``S`` equal to the all-ones
matrix gives bosonic statistics, the identity gives classical particles.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from typing import Mapping, Sequence

import numpy as np

from ._validation import check_fraction, check_gram
from .circuit import CircuitUnitary
from .fock import OccupationPattern, _patterns, pattern_multiplicity_factor

ZERO_CLAMP = 1e-12


@dataclass(frozen=True)
class GramMatrix:
    S: np.ndarray

    def __post_init__(self):
        s = check_gram(self.S).copy()
        s.setflags(write=False)
        object.__setattr__(self, "S", s)

    @property
    def n(self) -> int:
        return self.S.shape[0]

    @classmethod
    def indistinguishable(cls, n: int) -> "GramMatrix":
        return cls(np.ones((n, n), dtype=complex))

    @classmethod
    def distinguishable(cls, n: int) -> "GramMatrix":
        return cls(np.eye(n, dtype=complex))

    @classmethod
    def uniform(cls, n: int, overlap: complex) -> "GramMatrix":
        s = np.full((n, n), overlap, dtype=complex)
        np.fill_diagonal(s, 1.0)
        return cls(s)

    def scaled(self, lam: float) -> "GramMatrix":
        """Off-diagonal overlaps multiplied by ``lam``."""
        s = self.S * lam
        np.fill_diagonal(s, 1.0)
        return GramMatrix(s)


@dataclass(frozen=True)
class PhotonEnsemble:
    """Input photons: ``modes[j]`` is photon ``j``'s input port."""

    modes: tuple[int, ...]
    gram: GramMatrix
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        modes = tuple(int(k) for k in self.modes)
        object.__setattr__(self, "modes", modes)
        if not isinstance(self.gram, GramMatrix):
            object.__setattr__(self, "gram", GramMatrix(self.gram))
        if self.gram.n != len(modes):
            raise ValueError(f"Gram matrix is {self.gram.n}x{self.gram.n} for {len(modes)} photons")
        if any(k < 0 for k in modes):
            raise ValueError("negative input mode")
        labels = tuple(self.labels) or tuple(f"p{j}" for j in range(len(modes)))
        if len(labels) != len(modes):
            raise ValueError("one label per photon required")
        object.__setattr__(self, "labels", labels)
        seen = set()
        for j, key in enumerate(zip(modes, labels)):
            if key in seen:
                raise ValueError(f"two photons share mode and internal state {key}")
            seen.add(key)
        S = self.gram.S
        for i, j in itertools.combinations(range(len(modes)), 2):
            if labels[i] == labels[j] and abs(abs(S[i, j]) - 1) > 1e-9:
                raise ValueError(f"photons {i} and {j} share label {labels[i]!r} but |S_ij| != 1")

    @property
    def n(self) -> int:
        return len(self.modes)

    @classmethod
    def indistinguishable(cls, modes: Sequence[int]) -> "PhotonEnsemble":
        return cls(tuple(modes), GramMatrix.indistinguishable(len(modes)), labels=("qd",) * len(modes))

    @classmethod
    def distinguishable(cls, modes: Sequence[int]) -> "PhotonEnsemble":
        return cls(tuple(modes), GramMatrix.distinguishable(len(modes)))


@dataclass(frozen=True)
class SourceModel:
    """Per-pulse emission statistics of the demultiplexed source.

    ``g2`` is the effective zero-delay autocorrelation, ``m_near`` and
    ``m_far`` the two-photon indistinguishabilities for the shortest and
    longest separation between the interfering photons.
    """

    p1_qd: float = 0.07
    g2: float = 0.0
    m_near: float = 1.0
    m_far: float = 1.0

    def __post_init__(self):
        check_fraction(self.p1_qd, "p1_qd")
        if not 0.0 <= self.g2 < 1.0:
            raise ValueError(f"g2 must lie in [0, 1), got {self.g2}")
        check_fraction(self.m_near, "m_near")
        check_fraction(self.m_far, "m_far")
        if self.m_far > self.m_near:
            raise ValueError("m_far cannot exceed m_near")

    @property
    def p1_laser(self) -> float:
        # single residual-laser photon, multi-photon laser terms neglected
        return 0.5 * self.g2 * self.p1_qd

    @property
    def p0(self) -> float:
        p, pl = self.p1_qd, self.p1_laser
        return 1.0 - p - pl - p * pl

    def gram(self, n: int = 3) -> GramMatrix:
        """QD-photon Gram matrix: neighbours get ``m_near``, all others ``m_far``."""
        s = np.eye(n)
        for i, j in itertools.combinations(range(n), 2):
            s[i, j] = s[j, i] = np.sqrt(self.m_near if j - i == 1 else self.m_far)
        return GramMatrix(s)


class OutputDistribution:
    """Probabilities over :func:`~tritter.fock.enumerate_patterns` order."""

    def __init__(self, n: int, m: int, probs, label: str = "", atol: float = 1e-9):
        p = np.asarray(probs, dtype=float).copy()
        self.n, self.m, self.label = int(n), int(m), label
        self.patterns = [OccupationPattern(c) for c in _patterns(self.n, self.m)]
        if p.shape != (len(self.patterns),):
            raise ValueError(f"expected {len(self.patterns)} probabilities, got shape {p.shape}")
        if np.any(p < -atol):
            raise ValueError(f"negative probability {p.min():.3e}")
        p[p < 0] = 0.0
        if abs(p.sum() - 1.0) > atol:
            raise ValueError(f"probabilities sum to {p.sum():.12g}")
        p.setflags(write=False)
        self.probs = p
        self._index = {pt.counts: i for i, pt in enumerate(self.patterns)}

    def __getitem__(self, pattern) -> float:
        key = pattern.counts if isinstance(pattern, OccupationPattern) else tuple(pattern)
        return float(self.probs[self._index[key]])

    def __len__(self):
        return len(self.patterns)

    def __iter__(self):
        return iter(zip(self.patterns, self.probs))

    def __repr__(self):
        body = ", ".join(f"{p}: {q:.4g}" for p, q in self)
        return f"OutputDistribution(n={self.n}, m={self.m}, {{{body}}})"

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {p.counts: float(q) for p, q in self}

    def bins_of_type(self, shape: Sequence[int]) -> np.ndarray:
        """Indices of patterns whose sorted occupations equal ``shape``."""
        target = tuple(sorted(shape, reverse=True))
        return np.array([i for i, p in enumerate(self.patterns)
                         if tuple(sorted(p.counts, reverse=True)) == target], dtype=int)

    def mean_of_type(self, shape: Sequence[int]) -> float:
        return float(self.probs[self.bins_of_type(shape)].mean())

    def total_variation(self, other: "OutputDistribution") -> float:
        return 0.5 * float(np.abs(self.probs - other.probs).sum())


def _finalize(n, m, raw, label) -> OutputDistribution:
    raw = np.asarray(raw, dtype=float)
    raw[np.abs(raw) < ZERO_CLAMP] = 0.0
    return OutputDistribution(n, m, raw, label=label)


# -- permanents -------------------------------------------------------------

def permanent(a) -> complex:
    """Ryser's formula with Gray-code subset updates, O(2^n n)."""
    a = np.asarray(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0
    row_sums = np.zeros(n, dtype=a.dtype if np.iscomplexobj(a) else float)
    total = 0.0
    sign = -1.0 if n % 2 else 1.0  # (-1)^(n - |subset|), subset starts empty
    gray_prev = 0
    for k in range(1, 2 ** n):
        gray = k ^ (k >> 1)
        changed = gray ^ gray_prev
        col = changed.bit_length() - 1
        if gray & changed:
            row_sums = row_sums + a[:, col]
        else:
            row_sums = row_sums - a[:, col]
        sign = -sign
        total += sign * np.prod(row_sums)
        gray_prev = gray
    return total


@lru_cache(maxsize=None)
def _perm_table(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=int).reshape(-1, n)


def _submatrices(U: np.ndarray, modes: Sequence[int], n: int):
    pats = _patterns(n, U.shape[0])
    d = np.array([[k for k, c in enumerate(t) for _ in range(c)] for t in pats], dtype=int).reshape(len(pats), n)
    r = np.asarray(modes, dtype=int)
    # M[t, j, p] = U[d_j, r_p]: photon p entering r_p, j-th output slot of pattern t
    M = U[d[:, :, None], r[None, None, :]]
    mult = np.array([pattern_multiplicity_factor(t) for t in pats], dtype=float)
    return pats, M, mult


def _input_norm(ens: PhotonEnsemble) -> float:
    """<in|in> for the unnormalized product of creation operators."""
    r = np.asarray(ens.modes)
    perms = _perm_table(ens.n)
    same = (r[None, :] == r[perms]).all(axis=1)
    S = ens.gram.S
    terms = S[np.arange(ens.n)[None, :], perms].prod(axis=1)
    return float(np.real(terms[same].sum()))


def _check_inputs(U: CircuitUnitary, ens: PhotonEnsemble):
    if any(k >= U.m for k in ens.modes):
        raise ValueError(f"input mode outside the {U.m}-mode circuit")


def distribution(U: CircuitUnitary, ens: PhotonEnsemble) -> OutputDistribution:
    """Exact output distribution by the double permutation sum.

    ``P(t) = sum_{s,r} prod_j S[r_j, s_j] M[j, s_j] conj(M[j, r_j]) / prod_k t_k!``
    with ``M[j, p] = U[d_j, mode_p]`` for the canonical labeling ``d`` of ``t``.
    The fully indistinguishable and fully distinguishable limits use
    permanents instead.
    """
    _check_inputs(U, ens)
    n, S = ens.n, ens.gram.S
    pats, M, mult = _submatrices(U.matrix, ens.modes, n)
    norm = _input_norm(ens)
    if n == 0:
        return OutputDistribution(0, U.m, [1.0])
    if np.array_equal(S, np.ones_like(S)):
        raw = [abs(permanent(Mt)) ** 2 for Mt in M]
    elif np.array_equal(S, np.eye(n)):
        raw = [np.real(permanent(np.abs(Mt) ** 2)) for Mt in M]
    else:
        P = _perm_table(n)
        # W[s, r] = prod_j S[r_j, s_j]
        W = S.T[P[:, None, :], P[None, :, :]].prod(axis=-1)
        A = M[:, np.arange(n)[None, :], P].prod(axis=-1)
        raw = np.real(np.einsum("ks,sr,kr->k", A, W, A.conj()))
    return _finalize(n, U.m, np.asarray(raw, dtype=float) / mult / norm, label=U.label)


# -- independent oracle ------------------------------------------------------

def _psd_cholesky(S: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Lower-triangular ``L`` with ``S = L L^dag``; zero pivots allowed."""
    n = S.shape[0]
    L = np.zeros((n, n), dtype=complex)
    for j in range(n):
        d = S[j, j].real - np.sum(np.abs(L[j, :j]) ** 2)
        if d > tol:
            L[j, j] = np.sqrt(d)
            for i in range(j + 1, n):
                L[i, j] = (S[i, j] - np.sum(L[i, :j] * L[j, :j].conj())) / L[j, j]
    return L


def _composite_probabilities(U: np.ndarray, modes, vectors: np.ndarray, max_terms: int):
    """Spatial-pattern probabilities of prod_j (sum_{s,a} U[s, r_j] v_j[a] c^dag_{s,a}) |0>."""
    m, n = U.shape[0], len(modes)
    dim = vectors.shape[1]
    big = m * dim
    if big ** n > max_terms:
        raise ValueError(f"oracle expansion too large ({big}^{n} terms)")
    coeffs = [np.outer(U[:, r], v).ravel() for r, v in zip(modes, vectors)]
    amp = np.ones(1, dtype=complex)
    for c in coeffs:
        amp = np.multiply.outer(amp, c).ravel()
    idx = np.stack(np.unravel_index(np.arange(big ** n), (big,) * n), axis=1)
    idx.sort(axis=1)
    keys = (idx * big ** np.arange(n)[::-1]).sum(axis=1)
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    summed = (np.bincount(inverse, weights=amp.real, minlength=uniq.size)
              + 1j * np.bincount(inverse, weights=amp.imag, minlength=uniq.size))
    rows = idx[first]
    occ_fact = np.ones(uniq.size)
    spatial = np.zeros((uniq.size, m), dtype=int)
    for u, row in enumerate(rows):
        _, counts = np.unique(row, return_counts=True)
        occ_fact[u] = np.prod([factorial(c) for c in counts])
        np.add.at(spatial[u], row // dim, 1)
    probs = np.abs(summed) ** 2 * occ_fact
    out: dict[tuple[int, ...], float] = {}
    for t, p in zip(map(tuple, spatial), probs):
        out[t] = out.get(t, 0.0) + p
    return out


def oracle_distribution(U: CircuitUnitary, ens: PhotonEnsemble, max_terms: int = 2 * 10 ** 7) -> OutputDistribution:
    """Brute-force distribution over the enlarged (spatial x internal) mode space.

    Each photon becomes a single excitation of spatial mode ``r_j`` with an
    explicit internal vector reproducing the Gram matrix, the creation
    operators are multiplied out term by term and probabilities are summed
    over internal states. Uses no permanents.
    """
    _check_inputs(U, ens)
    n = ens.n
    if n == 0:
        return OutputDistribution(0, U.m, [1.0])
    vectors = _psd_cholesky(np.asarray(ens.gram.S)).conj()
    out = _composite_probabilities(U.matrix, ens.modes, vectors, max_terms)
    norm = sum(_composite_probabilities(np.eye(U.m), ens.modes, vectors, max_terms).values())
    raw = [out.get(t, 0.0) / norm for t in _patterns(n, U.m)]
    return _finalize(n, U.m, raw, label=f"oracle {U.label}")


# -- source model ------------------------------------------------------------

def gram_from_pairwise(overlaps: Mapping[tuple[int, int], float], n: int | None = None) -> GramMatrix:
    """Real Gram matrix with ``S_ij = sqrt(M_ij)`` from pairwise indistinguishabilities."""
    if n is None:
        n = 1 + max((max(p) for p in overlaps), default=0)
    s = np.eye(n)
    for (i, j), m in overlaps.items():
        if i == j:
            raise ValueError("pairwise overlap needs two distinct photons")
        m = check_fraction(m, f"M[{i},{j}]")
        s[i, j] = s[j, i] = np.sqrt(m)
    missing = [(i, j) for i, j in itertools.combinations(range(n), 2)
               if (i, j) not in overlaps and (j, i) not in overlaps]
    if missing:
        raise ValueError(f"missing pairwise overlaps for {missing}")
    try:
        return GramMatrix(s)
    except ValueError as exc:
        raise ValueError(f"inconsistent pairwise overlaps: {exc}") from None


def g2_from_chi(chi: float) -> float:
    return chi * (2.0 + chi) / (1.0 + chi) ** 2


def chi_from_g2(g2: float) -> float:
    """Laser-to-QD mean photon ratio producing a given ``g2`` (non-negative root)."""
    if not 0.0 <= g2 < 1.0:
        raise ValueError(f"g2 must lie in [0, 1), got {g2}")
    return (1.0 - g2) ** -0.5 - 1.0


@dataclass(frozen=True)
class MixtureTerm:
    weight: float
    ensemble: PhotonEnsemble
    occupation: tuple[str, ...] = field(default=())


def mixture_terms(src: SourceModel, gram_qd: GramMatrix) -> list[MixtureTerm]:
    """Three-photon input states with their (unnormalized) weights.

    Every input port independently holds vacuum, a QD photon, a laser photon or
    both. Only states with exactly one photon per port on average (``m``
    photons in ``m`` ports) and at most one laser photon are kept.
    """
    m = gram_qd.n
    p, pl, p0 = src.p1_qd, src.p1_laser, src.p0
    choices = {"0": p0, "Q": p, "L": pl, "QL": p * pl}
    terms = []
    for occ in itertools.product(choices, repeat=m):
        n_qd = sum("Q" in o for o in occ)
        n_l = sum("L" in o for o in occ)
        if n_qd + n_l != m or n_l > 1:
            continue
        weight = float(np.prod([choices[o] for o in occ]))
        modes, labels, qd_port = [], [], []
        for port, o in enumerate(occ):
            if "Q" in o:
                modes.append(port); labels.append(f"qd{port}"); qd_port.append(port)
            if "L" in o:
                modes.append(port); labels.append("laser"); qd_port.append(None)
        s = np.eye(m, dtype=complex)
        for i, j in itertools.permutations(range(m), 2):
            if qd_port[i] is not None and qd_port[j] is not None:
                s[i, j] = gram_qd.S[qd_port[i], qd_port[j]]
        terms.append(MixtureTerm(weight, PhotonEnsemble(tuple(modes), GramMatrix(s), tuple(labels)), occ))
    return terms


def mixture_distribution(U: CircuitUnitary, src: SourceModel, gram_qd: GramMatrix | None = None) -> OutputDistribution:
    """Distribution for QD photons contaminated by residual excitation laser.

    Laser photons are orthogonal to everything else. The result is
    conditioned on exactly ``m`` photons entering the circuit.
    """
    if gram_qd is None:
        gram_qd = src.gram(U.m)
    if gram_qd.n != U.m:
        raise ValueError("QD Gram matrix must have one row per input port")
    terms = mixture_terms(src, gram_qd)
    total = sum(t.weight for t in terms)
    acc = np.zeros(len(_patterns(U.m, U.m)))
    for t in terms:
        if t.weight:
            acc += t.weight * distribution(U, t.ensemble).probs
    return _finalize(U.m, U.m, acc / total, label=f"mixture {U.label}")
