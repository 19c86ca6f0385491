from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pwthermo import catalog
from pwthermo.cylinders import (boundary_set, cylinder_count, cylinder_inf, cylinder_of,
                                cylinder_sup, cylinders_meeting, enumerate_cylinders, extend)
from pwthermo.errors import EmptyCylinder
from pwthermo.maps import Weight, smallest_expansion
from pwthermo.potential import PotentialSpec

F = Fraction
JAC = Weight.det_jacobian_power(-1)
ONE = Weight.constant(1)


class TestEnumeration:
    def test_doubling_dyadic(self):
        cyls = enumerate_cylinders(catalog.doubling(), 5)
        assert len(cyls) == 32
        assert all(c.region.widths() == (F(1, 32),) for c in cyls)

    def test_golden_fibonacci(self):
        m = catalog.golden_beta()
        assert [cylinder_count(m, n) for n in range(1, 9)] == [2, 3, 5, 8, 13, 21, 34, 55]

    def test_beta_2d_full_shift(self):
        assert cylinder_count(catalog.beta_2d_diag_2_3(), 3) == 216

    def test_golden_forbidden_word(self):
        with pytest.raises(EmptyCylinder):
            cylinder_of(catalog.golden_beta(), (1, 1))

    @pytest.mark.parametrize("name", ["doubling", "golden_beta", "slopes_2_3", "tent"])
    def test_volumes_sum_to_one(self, name):
        m = catalog.get(name)
        for n in (1, 3, 5):
            total = sum(c.region.volume() for c in enumerate_cylinders(m, n))
            assert float(total) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("name", sorted(catalog.CATALOG))
    def test_refinement(self, name):
        m = catalog.get(name)
        parents = {c.word: c for c in enumerate_cylinders(m, 2)}
        for c in enumerate_cylinders(m, 3):
            parent = parents[c.word[:2]].region
            assert all(a >= b - 1e-12 for a, b in zip(c.region.lo, parent.lo))
            assert all(a <= b + 1e-12 for a, b in zip(c.region.hi, parent.hi))

    @pytest.mark.parametrize("name", ["doubling", "slopes_2_3", "tent"])
    def test_fast_path_matches_generic_extension(self, name):
        m = catalog.get(name)
        level = enumerate_cylinders(m, 1)
        for _ in range(3):
            level = [e for c in level for j in m.alphabet if (e := extend(m, c, j)) is not None]
        fast = enumerate_cylinders(m, 4)
        assert sorted((c.word, c.region.lo, c.region.hi) for c in level) == \
            sorted((c.word, c.region.lo, c.region.hi) for c in fast)


class TestSups:
    def test_doubling_jacobian_sup(self):
        pot = PotentialSpec(JAC, t=0, p=2, q=1)
        for c in enumerate_cylinders(catalog.doubling(), 4):
            assert cylinder_sup(catalog.doubling(), c, pot).upper == F(1, 4)

    def test_doubling_unit_weight_with_expansion(self):
        m = catalog.doubling()
        pot = PotentialSpec(ONE, t=F(1, 2), p=2, q=1)
        for c in enumerate_cylinders(m, 2):
            assert cylinder_sup(m, c, pot).upper == 1

    def test_unit_potential(self, catalog_map):
        c = enumerate_cylinders(catalog_map, 2)[0]
        assert cylinder_sup(catalog_map, c, PotentialSpec.unit()).upper == 1

    def test_inf_below_sup(self, catalog_map):
        pot = PotentialSpec(JAC, t=0.2, p=2, q=2)
        for c in enumerate_cylinders(catalog_map, 2):
            assert cylinder_inf(catalog_map, c, pot).lower <= cylinder_sup(catalog_map, c, pot).upper


def _submultiplicative(m, pot, u, v):
    try:
        whole = cylinder_of(m, u + v)
    except EmptyCylinder:
        return True
    lhs = cylinder_sup(m, whole, pot).log_upper
    rhs = cylinder_sup(m, cylinder_of(m, u), pot).log_upper + \
        cylinder_sup(m, cylinder_of(m, v), pot).log_upper
    return lhs <= rhs + 1e-12


@pytest.mark.parametrize("name", ["doubling", "golden_beta", "slopes_2_3", "tent"])
@given(data=st.data())
def test_sup_submultiplicative(name, data):
    m = catalog.get(name)
    letters = st.sampled_from(list(m.alphabet))
    u = tuple(data.draw(st.lists(letters, min_size=1, max_size=4)))
    v = tuple(data.draw(st.lists(letters, min_size=1, max_size=4)))
    t = data.draw(st.sampled_from([0, 0.2, 0.45]))
    pot = PotentialSpec(JAC, t=t, p=2, q=2)
    assert _submultiplicative(m, pot, u, v)


def test_nu_tilde_bracket(catalog_map):
    lam = float(catalog_map.lam)
    for n in (1, 2, 3):
        for c in enumerate_cylinders(catalog_map, n):
            e = smallest_expansion(catalog_map, c.word)
            assert float(e.nu) <= float(e.nu_tilde) + 1e-15
            assert float(e.nu_tilde) <= lam ** -n * (1 + 1e-12)


class TestBoundary:
    def test_doubling_boundary_cylinders(self):
        m = catalog.doubling()
        # closures meeting {0, 1/2, 1}: the two ends plus the two sides of 1/2
        assert len(cylinders_meeting(m, 4, "boundary")) == 4

    def test_whole_space_target(self, catalog_map):
        assert len(cylinders_meeting(catalog_map, 2, None)) == cylinder_count(catalog_map, 2)

    def test_beta_2d_boundary_counts(self):
        m = catalog.beta_2d_diag_2_3()
        # at depth 2 every column of the 4 x 9 grid touches x in {0, 1/2, 1}
        assert len(cylinders_meeting(m, 2, "boundary")) == 36
        # depth 3: 4 of 8 columns or 6 of 27 rows touch a face, 216 - 4 * 21
        assert len(cylinders_meeting(m, 3, "boundary")) == 132

    @pytest.mark.parametrize("name", ["doubling", "golden_beta", "slopes_2_3"])
    def test_layers_monotone(self, name):
        sizes = boundary_set(catalog.get(name), 3).layer_sizes
        assert list(sizes) == sorted(sizes)
