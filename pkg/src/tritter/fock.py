"""Fock-state bookkeeping: occupation patterns and photon-to-mode labelings."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, prod
from typing import Sequence


@dataclass(frozen=True, order=False)
class OccupationPattern:
    """Photon number per mode, e.g. ``(2, 1, 0)`` for two photons in mode 0."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 1:
            raise ValueError("an occupation pattern needs at least one mode")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative occupation in {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def m(self) -> int:
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, k):
        return self.counts[k]

    def __str__(self):
        return "|" + ",".join(str(c) for c in self.counts) + ">"

    def mode_assignment(self) -> tuple[int, ...]:
        """Canonical labeling: photons sorted by non-decreasing mode index."""
        return tuple(k for k, c in enumerate(self.counts) for _ in range(c))

    @classmethod
    def from_assignment(cls, modes: Sequence[int], m: int) -> "OccupationPattern":
        counts = [0] * m
        for k in modes:
            if not 0 <= k < m:
                raise ValueError(f"mode index {k} outside [0, {m})")
            counts[k] += 1
        return cls(tuple(counts))


def _as_counts(p) -> tuple[int, ...]:
    return p.counts if isinstance(p, OccupationPattern) else tuple(int(c) for c in p)


@lru_cache(maxsize=None)
def _patterns(n: int, m: int) -> tuple[tuple[int, ...], ...]:
    if m == 1:
        return ((n,),)
    out = []
    for first in range(n, -1, -1):
        for rest in _patterns(n - first, m - 1):
            out.append((first,) + rest)
    return tuple(out)


def enumerate_patterns(n: int, m: int) -> list[OccupationPattern]:
    """All ways of placing ``n`` photons in ``m`` modes.

    Ordered lexicographically with the first mode descending, so ``(n, 0, ...)``
    comes first and ``(0, ..., n)`` last.
    """
    if n < 0:
        raise ValueError("photon number must be non-negative")
    if m < 1:
        raise ValueError("need at least one mode")
    return [OccupationPattern(c) for c in _patterns(n, m)]


def pattern_multiplicity_factor(p) -> int:
    """Product of factorials of the occupations."""
    return prod(factorial(c) for c in _as_counts(p))


def pattern_index(n: int, m: int) -> dict[tuple[int, ...], int]:
    """Map from counts tuple to position in :func:`enumerate_patterns` order."""
    return {c: i for i, c in enumerate(_patterns(n, m))}
