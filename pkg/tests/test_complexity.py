from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from pwthermo import catalog
from pwthermo.complexity import (complexity_beginning, complexity_end, complexity_profile,
                                 max_overlap_1d)
from pwthermo.cylinders import cylinders_meeting
from pwthermo.maps import Weight
from pwthermo.potential import PotentialSpec
from pwthermo.pressure import level_sum

JAC = Weight.det_jacobian_power(-1)
ONE = Weight.constant(1)
FIB = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_doubling_beginning():
    assert complexity_beginning(catalog.doubling(), 5) == 2


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_beta_2d_beginning_stays_bounded(n):
    # two dyadic closures per axis meet at a corner
    assert complexity_beginning(catalog.beta_2d_diag_2_3(), n) == 4


def test_unit_weight_matches_count(catalog_map):
    for n in (1, 3):
        assert complexity_beginning(catalog_map, n, PotentialSpec.unit()) == \
            complexity_beginning(catalog_map, n)


@pytest.mark.parametrize("n", range(1, 9))
def test_doubling_end(n):
    assert complexity_end(catalog.doubling(), n) == 2 ** n


def test_golden_end():
    assert complexity_end(catalog.golden_beta(), 4) == 8


def test_beta_2d_end():
    assert complexity_end(catalog.beta_2d_diag_2_3(), 2) == 36


def test_beginning_recurrence(catalog_map):
    prev = complexity_beginning(catalog_map, 1)
    for n in range(2, 6):
        cur = complexity_beginning(catalog_map, n)
        touching = len(cylinders_meeting(catalog_map, n, "boundary"))
        assert cur <= max(prev, touching)
        prev = cur


@pytest.mark.parametrize("pot", [PotentialSpec.unit(), PotentialSpec(JAC, t=0.3, p=2, q=2),
                                 PotentialSpec(ONE, t=0.4, p=2, q=1)],
                         ids=["unit", "jac-t0.3", "one-t0.4"])
def test_weighted_beginning_below_boundary_sum(catalog_map, pot):
    for n in range(1, 7):
        weighted = float(complexity_beginning(catalog_map, n, pot))
        boundary = math.exp(level_sum(catalog_map, n, pot, "boundary").log_upper)
        assert weighted <= boundary * (1 + 1e-12)


def test_submultiplicative_counts(catalog_map):
    db = {n: complexity_beginning(catalog_map, n) for n in range(1, 7)}
    de = {n: complexity_end(catalog_map, n) for n in range(1, 7)}
    for a in range(1, 4):
        for b in range(1, 7 - a):
            assert db[a + b] <= db[a] * db[b]
            assert de[a + b] <= de[a] * de[b]


def test_profile_csv():
    prof = complexity_profile(catalog.golden_beta(), 6)
    assert prof.de_n == tuple(FIB[2:8])
    assert prof.de_fekete <= prof.rates(prof.de_n)[0]
    lines = prof.to_csv().splitlines()
    assert lines[0].startswith("n,Db_n,De_n")
    assert len(lines) == 7


intervals = st.lists(st.tuples(st.integers(0, 20), st.integers(0, 6)).map(lambda t: (t[0], t[0] + t[1])),
                     min_size=1, max_size=12)


@given(intervals, st.data())
def test_overlap_sweep_matches_brute_force(ivs, data):
    weights = data.draw(st.lists(st.integers(1, 5), min_size=len(ivs), max_size=len(ivs)))
    points = [x / 2 for x in range(0, 53)]
    brute = max(sum(1 for a, b in ivs if a <= x <= b) for x in points)
    brute_w = max(sum(w for (a, b), w in zip(ivs, weights) if a <= x <= b) for x in points)
    assert max_overlap_1d(ivs) == brute
    assert max_overlap_1d(ivs, weights) == brute_w
