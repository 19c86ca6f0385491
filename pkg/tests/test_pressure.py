from __future__ import annotations

import math
from fractions import Fraction

import pytest

from pwthermo import catalog
from pwthermo.cylinders import cylinder_sup, enumerate_cylinders
from pwthermo.errors import ParameterOutOfRange
from pwthermo.maps import AffineBranch, Box, Piece, PiecewiseMap, Weight, product_map
from pwthermo.potential import PotentialSpec
from pwthermo.pressure import (FAILS, HOLDS, INCONCLUSIVE, PressureEstimate, PressureRow,
                               blocked_pressure, boundary_pressure, boundary_pressure_curve,
                               lambda_top_exterior, level_sum, pressure_estimate,
                               small_boundary_check, small_boundary_verdict, trivial_sandwich)

F = Fraction
JAC = Weight.det_jacobian_power(-1)
ONE = Weight.constant(1)
LOG2 = math.log(2)


class TestLevelSums:
    @pytest.mark.parametrize("n", range(1, 11))
    def test_doubling_unit(self, n):
        ls = level_sum(catalog.doubling(), n, PotentialSpec.unit())
        assert ls.exact == 2 ** n
        assert ls.count == 2 ** n

    @pytest.mark.parametrize("name", ["doubling", "tent", "beta_2d_diag_2_3"])
    def test_inverse_jacobian_sums_to_one(self, name):
        for n in range(1, 7):
            assert level_sum(catalog.get(name), n, PotentialSpec(JAC)).exact == 1

    def test_inverse_jacobian_sums_are_image_volumes(self):
        # each term is the volume of T^n(O_i); images cover M at most D^e_n times
        from pwthermo.complexity import complexity_end

        m = catalog.slopes_2_3()
        for n in range(1, 7):
            total = level_sum(m, n, PotentialSpec(JAC)).exact
            assert 1 <= total <= complexity_end(m, n)

    def test_golden_inverse_jacobian(self):
        est = pressure_estimate(catalog.golden_beta(), PotentialSpec(JAC), n_max=12)
        # sum of cylinder sups of beta^-n is F_{n+2} / beta^n, bounded
        assert all(abs(r.rate) < 1.0 / r.n for r in est.per_n)

    def test_beta_2d_entropy(self):
        est = pressure_estimate(catalog.beta_2d_diag_2_3(), PotentialSpec.unit(), n_max=4)
        assert all(r.rate == pytest.approx(math.log(6), abs=1e-15) for r in est.per_n)

    def test_subadditive(self, catalog_map):
        pot = PotentialSpec(JAC, t=0.3, p=2, q=2)
        a = {r.n: r.a_n for r in pressure_estimate(catalog_map, pot, n_max=6).per_n}
        for m in range(1, 4):
            for n in range(1, 7 - m):
                assert a[m + n] <= a[m] + a[n] + 1e-12

    def test_fekete_is_minimum(self, catalog_map):
        est = pressure_estimate(catalog_map, PotentialSpec.unit(), n_max=6)
        assert est.fekete_upper == min(r.rate for r in est.per_n)
        assert est.upper <= est.fekete_upper


class TestBoundary:
    def test_doubling_count(self):
        bp = boundary_pressure(catalog.doubling(), PotentialSpec.unit(), n_max=6)
        assert all(r.count == 4 for r in bp.per_n[1:])

    def test_golden_vanishing_rate(self):
        bp = boundary_pressure(catalog.golden_beta(), PotentialSpec.unit(), n_max=12)
        assert bp.per_n[-1].rate < 0.35
        assert bp.per_n[-1].rate < bp.per_n[2].rate

    def test_monotone_in_pullback_depth(self):
        curve = boundary_pressure_curve(catalog.slopes_2_3(), PotentialSpec.unit(), K_max=2, n_max=5)
        for lower, higher in zip(curve, curve[1:]):
            for a, b in zip(lower.per_n, higher.per_n):
                assert a.a_n <= b.a_n + 1e-12

    def test_affine_boundary_bound(self, catalog_map):
        pot = PotentialSpec(JAC, t=0.2, p=2, q=2)
        unit = boundary_pressure(catalog_map, PotentialSpec.unit(), n_max=5)
        weighted = boundary_pressure(catalog_map, pot, n_max=5)
        sup1 = max(cylinder_sup(catalog_map, c, pot).log_upper for c in enumerate_cylinders(catalog_map, 1))
        for u, w in zip(unit.per_n, weighted.per_n):
            assert w.a_n <= u.n * sup1 + u.a_n + 1e-12


class TestSmallBoundary:
    def test_doubling_holds(self):
        verdict, full, bnd = small_boundary_verdict(catalog.doubling(), PotentialSpec.unit(), n_max=8)
        assert verdict.verdict == HOLDS
        assert full.measure_lower == pytest.approx(LOG2)

    def test_fails_and_inconclusive(self):
        rows = (PressureRow(1, 1.0, 1.0, 1.0, 2),)
        full = PressureEstimate(rows, 1.0, "full", "unit", measure_lower=0.9)
        high = PressureEstimate(rows, 2.0, "boundary", "unit", measure_lower=1.5)
        mid = PressureEstimate(rows, 0.95, "boundary", "unit")
        assert small_boundary_check(full, high).verdict == FAILS
        assert small_boundary_check(full, mid).verdict == INCONCLUSIVE


class TestSandwich:
    def test_constant_data_is_tight(self):
        s = trivial_sandwich(catalog.doubling(), PotentialSpec(JAC, t=0, p=2, q=2), n_max=6)
        assert s.lower == pytest.approx(s.upper, rel=1e-14)
        assert s.estimate == pytest.approx(s.lower, rel=1e-14)

    def test_slopes_strict(self):
        s = trivial_sandwich(catalog.slopes_2_3(), PotentialSpec(ONE, t=0, p=2, q=1), n_max=8)
        assert s.lower < s.estimate < s.upper

    def test_holds_everywhere(self, catalog_map):
        assert trivial_sandwich(catalog_map, PotentialSpec(JAC, t=0.3, p=2, q=2), n_max=5).holds


class TestExterior:
    def test_one_dimensional(self):
        assert lambda_top_exterior(catalog.doubling()) == 1.0

    def test_beta_2d(self):
        assert lambda_top_exterior(catalog.beta_2d_diag_2_3()) == pytest.approx(3.0)

    def test_isotropic(self):
        m = product_map([catalog.doubling(), catalog.doubling()])
        assert lambda_top_exterior(m) == pytest.approx(2.0)


class TestBlocking:
    @pytest.mark.parametrize("block", [1, 2, 3])
    def test_doubling_blocked_matches(self, block):
        m = catalog.doubling()
        pot = PotentialSpec(JAC, t=0.2, p=2, q=2)
        direct = {r.n: r.rate for r in pressure_estimate(m, pot, n_max=9).per_n}
        blocked = blocked_pressure(m, pot, block, 9 // block)
        for r in blocked.per_n:
            assert r.rate / block == pytest.approx(direct[r.n * block], abs=1e-12)


def test_potential_parameter_checks():
    with pytest.raises(ParameterOutOfRange):
        PotentialSpec(JAC, t=0.2, s=0.3)
    with pytest.raises(ParameterOutOfRange):
        PotentialSpec(JAC, p=2, q=3)
