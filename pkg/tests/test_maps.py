from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from pwthermo import catalog
from pwthermo.errors import InvalidMap, NoPiece, UnsupportedGeometry, WordMismatch
from pwthermo.maps import (BOUNDARY, AffineBranch, Box, Piece, PiecewiseMap, Weight,
                           birkhoff_weight, evaluate_map, expansion_data, load_map, parse_weight,
                           smallest_expansion)

HERE = Path(__file__).parent
F = Fraction


def smooth_map():
    return load_map(json.loads((HERE / "smooth_map.json").read_text()))


class TestEvaluate:
    def test_doubling_interior_point(self):
        ev = evaluate_map(catalog.doubling(), F(3, 10))
        assert ev.piece == 0
        assert ev.image == (F(3, 5),)
        assert ev.jacobian == (2,)

    def test_doubling_boundary_point(self):
        assert evaluate_map(catalog.doubling(), F(1, 2)) is BOUNDARY

    def test_beta_2d_point(self):
        ev = evaluate_map(catalog.beta_2d_diag_2_3(), (F(7, 10), F(2, 5)))
        assert ev.image == (F(2, 5), F(1, 5))
        assert ev.jacobian == (2, 3)

    def test_outside_raises(self):
        with pytest.raises(NoPiece):
            evaluate_map(catalog.doubling(), F(3, 2))


class TestBirkhoff:
    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_doubling_inverse_jacobian(self, n):
        m = catalog.doubling()
        g = Weight.det_jacobian_power(-1)
        assert birkhoff_weight(m, g, (0,) * n, F(1, 10 ** 4)) == F(1, 2 ** n)

    def test_golden_three_steps(self):
        m = catalog.golden_beta()
        g = Weight.det_jacobian_power(-1)
        val = birkhoff_weight(m, g, (0, 0, 0), 0.01)
        assert val == pytest.approx(catalog.GOLDEN ** -3, rel=1e-14)

    def test_slopes_2_3_word(self):
        m = catalog.slopes_2_3()
        g = Weight.det_jacobian_power(-1)
        cyl_point = F(1, 2) * F(1, 2) + F(1, 100)  # T maps it into piece 1
        assert birkhoff_weight(m, g, (0, 1), cyl_point) == F(1, 6)

    def test_unit_weight(self):
        m = catalog.tent()
        assert birkhoff_weight(m, Weight.constant(1), (0, 1, 1), F(5, 16)) == 1

    def test_word_mismatch(self):
        with pytest.raises(WordMismatch):
            birkhoff_weight(catalog.doubling(), Weight.constant(1), (1,), F(1, 10))


class TestExpansion:
    def test_doubling(self):
        assert smallest_expansion(catalog.doubling(), (0, 1, 1, 0)).nu == F(1, 16)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_beta_2d_slowest_axis(self, n):
        m = catalog.beta_2d_diag_2_3()
        assert smallest_expansion(m, (0,) * n).nu == F(1, 2 ** n)

    def test_slopes_2_3(self):
        assert smallest_expansion(catalog.slopes_2_3(), (0, 1, 1)).nu == F(1, 18)

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=4),
           st.lists(st.integers(0, 1), min_size=1, max_size=4))
    def test_multiplicative_in_dimension_one(self, u, v):
        m = catalog.doubling()
        nu = smallest_expansion(m, tuple(u) + tuple(v)).nu
        assert nu == smallest_expansion(m, u).nu * smallest_expansion(m, v).nu

    def test_expansion_data_proxy(self):
        data = expansion_data(catalog.slopes_2_3(), 4)
        assert data.nu_star == pytest.approx(0.5)
        assert len(data.words) == len(data.nu_n)

    def test_smooth_nu_tilde_dominates(self):
        m, _ = smooth_map()
        e = smallest_expansion(m, (0, 1))
        assert e.nu <= e.nu_tilde <= float(m.lam) ** -2 + 1e-12


class TestConstruction:
    def test_overlapping_pieces_rejected(self):
        pieces = (Piece(0, Box((F(0),), (F(2, 3),)), AffineBranch((F(3, 2),), (F(0),))),
                  Piece(1, Box((F(1, 3),), (F(1),)), AffineBranch((F(3, 2),), (F(-1, 2),))))
        with pytest.raises(InvalidMap):
            PiecewiseMap(pieces)

    def test_declared_lambda_too_large(self):
        doc = {"lambda": 3, "pieces": [{"region": [0, 0.5], "affine": {"A": 2, "b": 0}},
                                       {"region": [0.5, 1], "affine": {"A": 2, "b": -1}}]}
        with pytest.raises(InvalidMap):
            load_map(doc)

    def test_non_diagonal_rejected(self):
        doc = {"dimension": 2, "pieces": [
            {"region": [[0, 1], [0, 1]], "affine": {"A": [[2, 1], [0, 2]], "b": [0, 0]}}]}
        with pytest.raises(UnsupportedGeometry):
            load_map(doc)

    def test_json_product_detected(self):
        m = catalog.beta_2d_diag_2_3()
        assert m.factors is not None and len(m.factors) == 2

    def test_smooth_fixture(self):
        m, w = smooth_map()
        assert not m.is_affine
        assert w.kind == "det_jacobian_power" and w.value == -1
        assert float(m.lam) == pytest.approx(1.48)

    def test_parse_weight_kinds(self):
        assert parse_weight({"kind": "constant", "value": "1/3"}).value == F(1, 3)
        w = parse_weight({"kind": "piecewise_constant", "values": [1, 2], "alpha": 0.5})
        assert w.values == (1, 2) and w.alpha == 0.5
        with pytest.raises(InvalidMap):
            parse_weight({"kind": "mystery"})
