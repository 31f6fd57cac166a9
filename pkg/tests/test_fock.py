import itertools
from math import comb

import pytest
from hypothesis import given, strategies as st

from tritter.fock import OccupationPattern, enumerate_patterns, pattern_multiplicity_factor


def brute_force_patterns(n, m):
    return {t for t in itertools.product(range(n + 1), repeat=m) if sum(t) == n}


def test_three_photons_three_modes():
    pats = enumerate_patterns(3, 3)
    assert len(pats) == 10
    assert pats[0].counts == (3, 0, 0)
    assert pats[-1].counts == (0, 0, 3)
    assert [p.counts for p in pats][4] == (1, 1, 1)


def test_vacuum():
    assert [p.counts for p in enumerate_patterns(0, 3)] == [(0, 0, 0)]


def test_two_photons_four_modes():
    pats = enumerate_patterns(2, 4)
    assert len(pats) == len(brute_force_patterns(2, 4)) == 10


def test_order_is_descending_lexicographic():
    pats = [p.counts for p in enumerate_patterns(3, 4)]
    assert pats == sorted(pats, reverse=True)


@given(st.integers(0, 6), st.integers(1, 5))
def test_enumeration_matches_brute_force(n, m):
    pats = [p.counts for p in enumerate_patterns(n, m)]
    assert len(pats) == comb(n + m - 1, n)
    assert len(set(pats)) == len(pats)
    assert set(pats) == brute_force_patterns(n, m)


@pytest.mark.parametrize("counts, expected", [((1, 1, 1), 1), ((3, 0, 0), 6), ((2, 1, 0), 2)])
def test_multiplicity(counts, expected):
    assert pattern_multiplicity_factor(OccupationPattern(counts)) == expected
    assert pattern_multiplicity_factor(counts) == expected


@given(st.lists(st.integers(0, 4), min_size=1, max_size=5))
def test_assignment_round_trip(counts):
    p = OccupationPattern(tuple(counts))
    modes = p.mode_assignment()
    assert list(modes) == sorted(modes)
    assert OccupationPattern.from_assignment(modes, len(counts)) == p
    shuffled = list(reversed(modes))
    assert OccupationPattern.from_assignment(shuffled, len(counts)) == p


def test_invalid_patterns():
    with pytest.raises(ValueError):
        OccupationPattern((1, -1))
    with pytest.raises(ValueError):
        OccupationPattern.from_assignment([0, 3], 3)
    with pytest.raises(ValueError):
        enumerate_patterns(-1, 2)
    with pytest.raises(ValueError):
        enumerate_patterns(2, 0)
