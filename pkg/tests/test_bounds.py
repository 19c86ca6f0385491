from __future__ import annotations

import math

import pytest

from pwthermo import catalog
from pwthermo.bounds import (bound_sweep_csv, check_parameters, compare_bounds, conjugate,
                             essential_bound, essential_bound_split,
                             essential_bound_split_boundary, ly_coefficient, ly_rate,
                             one_dimensional_bound, relaxed_bounds, spectral_radius_lp_bound,
                             end_complexity_bound, variational_bound)
from pwthermo.errors import NoMeasures, ParameterOutOfRange
from pwthermo.maps import Weight

JAC = Weight.det_jacobian_power(-1)
ONE = Weight.constant(1)


def numeric(b):
    return b.lower, b.upper, b.value, b.per_n


class TestEssentialBound:
    def test_doubling(self):
        b = essential_bound(catalog.doubling(), JAC, 0.4, 2)
        assert b.value == pytest.approx(2 ** -0.4, abs=1e-12)
        assert b.lower == pytest.approx(2 ** -0.4, abs=1e-12)
        # the upper end carries the D^b slack (log 2) / n_max / p
        assert b.upper == pytest.approx(2 ** (-0.4 + 0.05), abs=1e-12)

    def test_beta_2d(self):
        b = essential_bound(catalog.beta_2d_diag_2_3(), JAC, 0.3, 2)
        assert b.value == pytest.approx(2 ** -0.3, abs=1e-9)

    def test_unit_weight_radius(self):
        # g = 1 on the doubling map: L_1 has spectral radius 2 on every L_p
        b = spectral_radius_lp_bound(catalog.doubling(), ONE, 2)
        assert b.value == pytest.approx(2.0, abs=1e-12)

    def test_strictly_decreasing_in_t(self):
        m = catalog.doubling()
        values = [essential_bound(m, JAC, t, 2, n_max=8).value for t in (0.0, 0.1, 0.2, 0.3, 0.45)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values == pytest.approx([2 ** -t for t in (0.0, 0.1, 0.2, 0.3, 0.45)], abs=1e-12)

    def test_below_relaxed_forms(self, catalog_map):
        b = essential_bound(catalog_map, JAC, 0.2, 2, n_max=6)
        for relaxed in relaxed_bounds(catalog_map, JAC, 0.2, 2, n_max=6):
            assert all(x <= y * (1 + 1e-12) for x, y in zip(b.per_n, relaxed.per_n))
            assert b.upper <= relaxed.upper * (1 + 1e-12)

    @pytest.mark.parametrize("t, p, s", [(0.8, 2, 0), (0.1, 1, 0), (-0.1, 2, 0), (0.2, 2, 0.3)])
    def test_parameter_errors(self, t, p, s):
        with pytest.raises(ParameterOutOfRange):
            check_parameters(JAC, t, p, s)

    def test_holder_exponent_caps_t(self):
        rough = Weight("constant", value=1, alpha=0.2)
        with pytest.raises(ParameterOutOfRange):
            essential_bound(catalog.doubling(), rough, 0.3, 2)

    def test_conjugate_exact(self):
        assert conjugate(3) == pytest.approx(1.5) and conjugate(3).denominator == 2


class TestSplit:
    def test_zero_split_is_bit_exact(self, catalog_map):
        a = essential_bound(catalog_map, JAC, 0.3, 2, n_max=6)
        b = essential_bound_split(catalog_map, JAC, 0.3, 0, 2, n_max=6)
        assert numeric(a) == numeric(b)

    def test_doubling_full_split(self):
        # moving nu^t into the complexity term loses the t/p share
        b = essential_bound_split(catalog.doubling(), JAC, 0.4, 0.4, 2)
        assert b.value == pytest.approx(2 ** -0.2, abs=1e-12)

    def test_split_boundary_dominates(self):
        m = catalog.doubling()
        a = essential_bound_split(m, JAC, 0.3, 0.2, 2, n_max=6)
        b = essential_bound_split_boundary(m, JAC, 0.3, 0.2, 2, n_max=6)
        assert a.upper <= b.upper * (1 + 1e-12)


class TestOtherBounds:
    def test_doubling_relaxed_equal(self):
        for b in relaxed_bounds(catalog.doubling(), JAC, 0.4, 2):
            assert b.value == pytest.approx(2 ** -0.4, abs=1e-12)

    def test_beta_2d_relaxed_entropy(self):
        _, entropy_form = relaxed_bounds(catalog.beta_2d_diag_2_3(), JAC, 0.3, 2, n_max=6)
        assert entropy_form.value == pytest.approx(2 ** -0.3, abs=1e-9)

    def test_one_dimensional_matches_relaxed_entropy(self, catalog_map):
        if catalog_map.dimension != 1:
            pytest.skip("interval maps only")
        d1 = one_dimensional_bound(catalog_map, JAC, 0.2, 2, n_max=6)
        _, relaxed = relaxed_bounds(catalog_map, JAC, 0.2, 2, n_max=6)
        assert d1.value == pytest.approx(relaxed.value, rel=1e-12)

    def test_end_complexity_doubling(self):
        b = end_complexity_bound(catalog.doubling(), ONE, 0.2, 2)
        # D^e factor 2^(1/2), D^b factor 2^(1/2n), sup 2^(1/2 - 0.2)
        assert b.value == pytest.approx(2 ** (0.5 + 0.05 + 0.5 - 0.2), abs=1e-12)

    def test_variational_values(self):
        m = catalog.doubling()
        assert variational_bound(m, JAC, 0.4, 2, 1).lower == pytest.approx(2 ** 0.1, abs=1e-12)
        assert variational_bound(m, JAC, 0.4, 2, 2).lower == pytest.approx(2 ** -0.4, abs=1e-12)

    def test_variational_without_measures(self):
        with pytest.raises(NoMeasures):
            variational_bound(catalog.doubling(), JAC, 0.4, 2, 2, measures=[])

    def test_variational_below_essential(self):
        for name in ("doubling", "golden_beta", "slopes_2_3"):
            m = catalog.get(name)
            v = variational_bound(m, JAC, 0.2, 2, 2, n_max=8, k_max=2, L_max=5)
            assert v.upper <= essential_bound(m, JAC, 0.2, 2, n_max=8).upper * (1 + 1e-9)


class TestLasotaYorke:
    def test_doubling_coefficient(self):
        assert ly_coefficient(catalog.doubling(), JAC, 0.4, 2, 6) == \
            pytest.approx(6 * 2 ** 0.5 * 2 ** -2.4, rel=1e-12)

    def test_first_step(self, catalog_map):
        from pwthermo.complexity import complexity_beginning
        from pwthermo.pressure import level_sum
        from pwthermo.potential import PotentialSpec

        pot = PotentialSpec(JAC, 0.2, 2, 2)
        db = complexity_beginning(catalog_map, 1)
        total = math.exp(level_sum(catalog_map, 1, pot).log_upper)
        assert ly_coefficient(catalog_map, JAC, 0.2, 2, 1) == pytest.approx(db ** 0.5 * total ** 0.5)

    @pytest.mark.xfail(strict=True, reason="the polynomial prefactor n^(1/n) decays too slowly")
    def test_root_near_bound_by_twelve(self):
        rate = ly_rate(catalog.doubling(), JAC, 0.4, 2, 12)
        assert abs(rate - essential_bound(catalog.doubling(), JAC, 0.4, 2).value) <= 0.05

    def test_root_decreases_towards_bound(self):
        m = catalog.doubling()
        rates = [ly_rate(m, JAC, 0.4, 2, n) for n in (4, 8, 14)]
        assert rates[0] > rates[1] > rates[2] > 2 ** -0.4


class TestReport:
    def test_beta_maps_tie_with_end_complexity(self):
        rep = compare_bounds(catalog.doubling(), JAC, 0.3, 2, n_max=8)
        assert rep.r_t_p.value == pytest.approx(rep.r_end_complexity.value * 2 ** (-1 / 16), rel=1e-12)
        assert all(rep.ordering().values())

    def test_slopes_improvement(self):
        rep = compare_bounds(catalog.slopes_2_3(), JAC, 0.3, 2, n_max=8)
        assert rep.improves_on_end_complexity

    def test_sweep_csv(self):
        rep = compare_bounds(catalog.doubling(), JAC, 0.2, 2, n_max=6)
        lines = bound_sweep_csv([rep]).splitlines()
        assert len(lines) == 2 and lines[1].startswith("doubling")
