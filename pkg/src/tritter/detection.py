"""Pseudo number-resolving detection with split binary detectors.

Each output mode feeds a small splitter tree ending on three click/no-click
detectors. Bunched photons are under-counted, so raw triple-click
frequencies are biased; :func:`estimate_distribution` undoes the bias.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import nnls
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fraction
from .fock import _patterns
from .interference import OutputDistribution
from .io import dumps_csv, parse_pattern, pattern_str, read_csv

DEFAULT_SPLITS = (0.5, 0.25, 0.25)
DEFAULT_EFFICIENCY = 0.30


@dataclass(frozen=True)
class DetectorTree:
    split_probs: tuple[float, ...] = DEFAULT_SPLITS
    eta: float = DEFAULT_EFFICIENCY
    dark_rate: float = 0.0
    window: float = 2e-9

    def __post_init__(self):
        q = tuple(float(x) for x in self.split_probs)
        if not q or any(x < 0 for x in q) or abs(sum(q) - 1) > 1e-9:
            raise ValueError(f"split probabilities {q} must be non-negative and sum to 1")
        object.__setattr__(self, "split_probs", q)
        check_fraction(self.eta, "detector efficiency")
        if self.dark_rate < 0 or self.window < 0:
            raise ValueError("dark rate and coincidence window must be non-negative")

    @property
    def n_detectors(self) -> int:
        return len(self.split_probs)

    @property
    def p_dark(self) -> float:
        """Probability that an unlit detector fires inside the coincidence window."""
        return float(-np.expm1(-self.dark_rate * self.window))


@lru_cache(maxsize=4096)
def _click_table(k: int, tree: DetectorTree) -> np.ndarray:
    d = tree.n_detectors
    # each photon ends on detector 0..d-1 or is lost (index d)
    weights = np.append(np.asarray(tree.split_probs) * tree.eta, 1.0 - tree.eta)
    out = np.zeros(d + 1)
    for route in itertools.product(range(d + 1), repeat=k):
        w = np.prod(weights[list(route)]) if k else 1.0
        if w == 0:
            continue
        lit = len({r for r in route if r < d})
        dark = np.array([math.comb(d - lit, j) * tree.p_dark ** j * (1 - tree.p_dark) ** (d - lit - j)
                         for j in range(d - lit + 1)])
        out[lit:lit + dark.size] += w * dark
    out.setflags(write=False)
    return out


def click_probability(k: int, tree: DetectorTree, c: int) -> float:
    """Probability that ``k`` photons in one mode produce exactly ``c`` clicks."""
    if k < 0:
        raise ValueError("photon number must be non-negative")
    if not 0 <= c <= tree.n_detectors:
        return 0.0
    return float(_click_table(int(k), tree)[c])


def _trees_for(trees, m) -> tuple[DetectorTree, ...]:
    if trees is None:
        return (DetectorTree(),) * m
    if isinstance(trees, DetectorTree):
        return (trees,) * m
    trees = tuple(trees)
    if len(trees) != m:
        raise ValueError(f"need one detector tree per output mode ({m}), got {len(trees)}")
    return trees


def response_matrix(n: int, m: int, trees=None) -> np.ndarray:
    """``R[c, t]``: probability that true pattern ``t`` is recorded as click pattern ``c``.

    Rows and columns both follow :func:`~tritter.fock.enumerate_patterns`
    order; only ``n``-click records are included.
    """
    trees = _trees_for(trees, m)
    pats = _patterns(n, m)
    R = np.zeros((len(pats), len(pats)))
    for b, t in enumerate(pats):
        for a, c in enumerate(pats):
            R[a, b] = np.prod([click_probability(tk, tr, ck) for tk, tr, ck in zip(t, trees, c)])
    return R


@dataclass
class ClickPatternCounts:
    """Recorded ``n``-fold coincidences keyed by clicks per output mode."""

    n: int
    m: int
    counts: np.ndarray
    n_generated: int | None = None
    integration_time: float | None = None
    patterns: list = field(init=False, repr=False)

    def __post_init__(self):
        self.patterns = list(_patterns(self.n, self.m))
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (len(self.patterns),) or np.any(c < 0):
            raise ValueError("counts must be one non-negative integer per click pattern")
        self.counts = c

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, pattern) -> int:
        return int(self.counts[self.patterns.index(tuple(pattern))])

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return {p: int(c) for p, c in zip(self.patterns, self.counts)}

    def __add__(self, other: "ClickPatternCounts") -> "ClickPatternCounts":
        if (self.n, self.m) != (other.n, other.m):
            raise ValueError("cannot merge counts of different shapes")
        gen = None if self.n_generated is None or other.n_generated is None else self.n_generated + other.n_generated
        return ClickPatternCounts(self.n, self.m, self.counts + other.counts, gen)

    def to_csv(self) -> str:
        return dumps_csv(["pattern", "count"], ((pattern_str(p), int(c)) for p, c in zip(self.patterns, self.counts)))

    @classmethod
    def from_csv(cls, path) -> "ClickPatternCounts":
        _, rows = read_csv(path)
        data = {parse_pattern(r[0]): int(r[1]) for r in rows}
        if not data:
            raise ValueError(f"{path}: no counts")
        first = next(iter(data))
        n, m = sum(first), len(first)
        pats = _patterns(n, m)
        extra = set(data) - set(pats)
        if extra:
            raise ValueError(f"{path}: patterns {sorted(extra)} do not have {n} clicks over {m} modes")
        return cls(n, m, [data.get(p, 0) for p in pats])


def simulate_counts(dist: OutputDistribution, trees=None, n_events: int = 10 ** 6, seed=None,
                    target_triples: int | None = None, batch: int = 1 << 18) -> ClickPatternCounts:
    """Monte Carlo of the detection stage.

    Output patterns are drawn from ``dist``; every photon is routed to one of
    its mode's detectors (or lost) at random and dark clicks are added. Only
    events with exactly ``n`` clicks in total are kept. With
    ``target_triples`` set, events are generated until that many coincidences
    are recorded and ``n_events`` is ignored.
    """
    if target_triples is None and n_events <= 0:
        raise ValueError("n_events must be positive")
    n, m = dist.n, dist.m
    trees = _trees_for(trees, m)
    rng = np.random.default_rng(seed)
    pats = _patterns(n, m)
    assign = np.array([[k for k, c in enumerate(t) for _ in range(c)] for t in pats], dtype=int).reshape(len(pats), n)
    n_det = max(tr.n_detectors for tr in trees)
    cum_split = np.zeros((m, n_det))
    for k, tr in enumerate(trees):
        cum_split[k, :tr.n_detectors] = np.cumsum(tr.split_probs)
        cum_split[k, tr.n_detectors:] = 1.0
    eta = np.array([tr.eta for tr in trees])
    p_dark = np.array([tr.p_dark for tr in trees])
    valid_det = np.array([[d < tr.n_detectors for d in range(n_det)] for tr in trees])

    base = n_det + 1
    lut = np.full(base ** m, -1, dtype=np.int64)
    for i, p in enumerate(pats):
        if max(p) < base:
            lut[np.dot(p, base ** np.arange(m))] = i
    weights = base ** np.arange(m)

    counts = np.zeros(len(pats), dtype=np.int64)
    generated = 0
    remaining = n_events if target_triples is None else None
    while target_triples is None and remaining > 0 or target_triples is not None and counts.sum() < target_triples:
        size = batch if remaining is None else min(batch, remaining)
        which = rng.choice(len(pats), size=size, p=dist.probs)
        modes = assign[which]  # (size, n)
        detected = rng.random((size, n)) < eta[modes]
        det = (rng.random((size, n))[..., None] >= cum_split[modes]).sum(axis=-1)
        det = np.minimum(det, n_det - 1)
        hits = np.zeros((size, m, n_det), dtype=bool)
        rows = np.repeat(np.arange(size), n)
        hits[rows, modes.ravel(), det.ravel()] |= detected.ravel()
        if np.any(p_dark > 0):
            hits |= (rng.random((size, m, n_det)) < p_dark[None, :, None]) & valid_det[None]
        clicks = hits.sum(axis=-1)  # (size, m)
        keep = np.flatnonzero(clicks.sum(axis=1) == n)
        if remaining is None:
            need = target_triples - int(counts.sum())
            if keep.size >= need:
                keep = keep[:need]
                size = int(keep[-1]) + 1
        else:
            remaining -= size
        generated += size
        counts += np.bincount(lut[clicks[keep] @ weights], minlength=len(pats))
    return ClickPatternCounts(n, m, counts, n_generated=generated)


@dataclass
class DistributionEstimate:
    """Efficiency-corrected estimate plus the raw click frequencies."""

    distribution: OutputDistribution
    uncorrected: OutputDistribution
    std: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    uncorrected_std: np.ndarray
    n_triples: int
    n_bootstrap: int

    def to_dict(self) -> dict:
        rows = []
        for i, p in enumerate(self.distribution.patterns):
            rows.append({
                "pattern": list(p.counts),
                "probability": float(self.distribution.probs[i]),
                "std": float(self.std[i]),
                "ci_low": float(self.lower[i]),
                "ci_high": float(self.upper[i]),
                "uncorrected": float(self.uncorrected.probs[i]),
                "uncorrected_std": float(self.uncorrected_std[i]),
            })
        return {"n_triples": self.n_triples, "n_bootstrap": self.n_bootstrap, "bins": rows}


def _solve(R: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    x, _ = nnls(R, freqs)
    s = x.sum()
    if s <= 0:
        return np.full_like(x, 1.0 / x.size)
    return x / s


def estimate_distribution(counts: ClickPatternCounts, trees=None, n_bootstrap: int = 1000,
                          seed=0, confidence: float = 0.95) -> DistributionEstimate:
    """Invert the detection response by non-negative least squares.

    Solves ``R x ~ f`` with ``x >= 0`` for the observed click frequencies
    ``f`` and normalises ``x``. Uncertainties come from a multinomial
    bootstrap of the counts. For bins never observed the upper limit also
    covers three counts in the corresponding click pattern.
    """
    if counts.total <= 0:
        raise ValueError("no recorded coincidences")
    trees = _trees_for(trees, counts.m)
    R = response_matrix(counts.n, counts.m, trees)
    sv = np.linalg.svd(R, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise np.linalg.LinAlgError("detection response matrix is singular (zero efficiency?)")
    N = counts.total
    f = counts.counts / N
    est = _solve(R, f)

    rng = np.random.default_rng(seed)
    boot_counts = rng.multinomial(N, f, size=n_bootstrap) if n_bootstrap > 0 else np.empty((0, f.size))
    boots = np.array([_solve(R, b / N) for b in boot_counts]).reshape(-1, f.size)
    alpha = 0.5 * (1.0 - confidence)
    if n_bootstrap > 1:
        std = boots.std(axis=0, ddof=1)
        lower, upper = np.quantile(boots, [alpha, 1 - alpha], axis=0)
        raw_std = (boot_counts / N).std(axis=0, ddof=1)
    else:
        std = raw_std = np.zeros(f.size)
        lower, upper = est.copy(), est.copy()
    for i in np.flatnonzero(counts.counts == 0):
        bumped = counts.counts.astype(float)
        bumped[i] = 3.0
        upper = upper.copy()
        upper = np.maximum(upper, np.where(np.arange(f.size) == i, _solve(R, bumped / bumped.sum()), 0.0))
    n, m = counts.n, counts.m
    return DistributionEstimate(
        distribution=OutputDistribution(n, m, est, label="estimated"),
        uncorrected=OutputDistribution(n, m, f, label="raw clicks"),
        std=std, lower=np.minimum(lower, est), upper=np.maximum(upper, est),
        uncorrected_std=raw_std, n_triples=N, n_bootstrap=n_bootstrap,
    )


class ClickDistributionEstimator(BaseEstimator):
    """Estimate the output distribution from coincidence click counts.

    Parameters
    ----------
    split_probs, eta, dark_rate, window
        Detector-tree description shared by all output modes; ignored when
        ``trees`` is given.
    trees : sequence of DetectorTree, optional
    n_bootstrap : int
    random_state : int or None
    """

    def __init__(self, split_probs=DEFAULT_SPLITS, eta=DEFAULT_EFFICIENCY, dark_rate=0.0, window=2e-9,
                 trees=None, n_bootstrap=1000, random_state=0):
        self.split_probs = split_probs
        self.eta = eta
        self.dark_rate = dark_rate
        self.window = window
        self.trees = trees
        self.n_bootstrap = n_bootstrap
        self.random_state = random_state

    def _trees(self, m):
        if self.trees is not None:
            return _trees_for(self.trees, m)
        return (DetectorTree(tuple(self.split_probs), self.eta, self.dark_rate, self.window),) * m

    def fit(self, counts: ClickPatternCounts, y=None):
        est = estimate_distribution(counts, self._trees(counts.m), n_bootstrap=self.n_bootstrap,
                                    seed=self.random_state)
        self.estimate_ = est
        self.distribution_ = est.distribution
        self.std_ = est.std
        self.uncorrected_ = est.uncorrected
        return self

    def transform(self, X=None):
        check_is_fitted(self, "distribution_")
        return np.array(self.distribution_.probs)

    def score(self, X, y=None):
        """Negative total-variation distance to a reference distribution ``X``."""
        check_is_fitted(self, "distribution_")
        return -self.distribution_.total_variation(X)
