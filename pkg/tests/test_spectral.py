from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from pwthermo import catalog
from pwthermo.bounds import spectral_radius_lp_bound
from pwthermo.complexity import complexity_end
from pwthermo.errors import NotMarkov
from pwthermo.maps import Weight, load_map
from pwthermo.spectral import (GRID_QUADRATURE, MARKOV_EXACT, assemble_ulam, density_csv,
                               dominant_spectrum, push_forward_indicator, spectral_gap_report)

JAC = Weight.det_jacobian_power(-1)
ONE = Weight.constant(1)
BETA = catalog.GOLDEN


class TestAssembly:
    def test_golden_matrix(self):
        op = assemble_ulam(catalog.golden_beta(), JAC, ("markov", 1))
        expected = np.array([[1 / BETA, 1 / BETA], [1 / BETA, 0.0]])
        assert np.allclose(op.matrix.toarray(), expected, atol=1e-15)

    def test_doubling_exact_entries(self):
        op = assemble_ulam(catalog.doubling(), JAC, ("markov", 3))
        assert op.mode == MARKOV_EXACT
        assert set(op.exact_entries.values()) == {Fraction(1, 2)}

    def test_unit_weight_doubles(self):
        a = assemble_ulam(catalog.doubling(), JAC, ("markov", 3)).matrix.toarray()
        b = assemble_ulam(catalog.doubling(), ONE, ("markov", 3)).matrix.toarray()
        assert np.array_equal(b, 2 * a)

    @pytest.mark.parametrize("name", sorted(catalog.CATALOG))
    def test_mass_conserved(self, name):
        op = assemble_ulam(catalog.get(name), JAC, ("grid", 6))
        assert op.mode == GRID_QUADRATURE
        assert op.mass_defect() < 1e-12

    def test_not_markov(self):
        doc = {"pieces": [{"region": [0, "3/5"], "affine": {"A": "5/3", "b": 0}},
                          {"region": ["3/5", 1], "affine": {"A": "5/3", "b": -1}}]}
        m, _ = load_map(doc)
        with pytest.raises(NotMarkov):
            assemble_ulam(m, JAC, ("markov", 1))


class TestSpectrum:
    @pytest.mark.parametrize("depth", [1, 3, 5])
    def test_doubling_inverse_jacobian(self, depth):
        dom, sub = dominant_spectrum(assemble_ulam(catalog.doubling(), JAC, ("markov", depth)))
        assert dom.modulus == pytest.approx(1.0, abs=1e-10)
        assert sub.modulus <= 1e-10
        assert np.allclose(dom.vector, 1.0)

    def test_doubling_unit_weight(self):
        dom, sub = dominant_spectrum(assemble_ulam(catalog.doubling(), ONE, ("markov", 4)))
        assert dom.modulus == pytest.approx(2.0, abs=1e-10)
        assert sub.modulus / dom.modulus <= 1e-10

    def test_golden_density_and_subdominant(self):
        op = assemble_ulam(catalog.golden_beta(), JAC, ("markov", 1))
        dom, sub = dominant_spectrum(op)
        hand = np.array([[1 / BETA, 1 / BETA], [1 / BETA, 0.0]])
        vals, vecs = np.linalg.eig(hand)
        order = np.argsort(-np.abs(vals))
        stationary = np.abs(vecs[:, order[0]])
        stationary /= stationary @ np.array([1 / BETA, 1 / BETA ** 2])
        assert dom.modulus == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(dom.vector, stationary, atol=1e-10)
        assert sub.modulus == pytest.approx(abs(vals[order[1]]), abs=1e-10)

    def test_bracket_contains_estimate(self):
        dom, _ = dominant_spectrum(assemble_ulam(catalog.slopes_2_3(), JAC, ("grid", 30)))
        assert dom.bracket[0] <= dom.modulus <= dom.bracket[1]

    @pytest.mark.parametrize("name", ["doubling", "golden_beta", "slopes_2_3"])
    def test_below_lp_radius_bound(self, name):
        m = catalog.get(name)
        dom = dominant_spectrum(assemble_ulam(m, ONE, ("markov", 2)), k=1)[0]
        assert dom.modulus <= spectral_radius_lp_bound(m, ONE, 2, n_max=8).upper + 1e-9

    def test_density_csv(self):
        op = assemble_ulam(catalog.doubling(), JAC, ("markov", 2))
        dom = dominant_spectrum(op, k=1)[0]
        lines = density_csv(op, dom.vector).splitlines()
        assert len(lines) == 5


class TestPushForward:
    @pytest.mark.parametrize("name", sorted(catalog.CATALOG))
    def test_equals_complexity_end(self, name):
        m = catalog.get(name)
        for n in range(1, 7):
            assert push_forward_indicator(m, n) == complexity_end(m, n)

    def test_doubling(self):
        assert push_forward_indicator(catalog.doubling(), 7) == 128

    def test_beta_2d_one_step(self):
        assert push_forward_indicator(catalog.beta_2d_diag_2_3(), 1) == 6


def test_gap_report_rows():
    rows = spectral_gap_report(catalog.golden_beta(), JAC, [("markov", 1), ("grid", 50)],
                               essential_upper=0.5)
    assert [r.size for r in rows] == [2, 50]
    assert rows[0].ratio == pytest.approx(1 / BETA ** 2, abs=1e-10)
    assert all(r.dominant == pytest.approx(1.0, abs=1e-9) for r in rows)
    assert all(r.consistent is not None for r in rows)
