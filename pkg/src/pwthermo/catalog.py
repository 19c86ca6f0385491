"""Worked example systems used throughout the tests and the CLI."""

from __future__ import annotations

import math
from fractions import Fraction as F

from .maps import AffineBranch, Box, Piece, PiecewiseMap, product_map

#: Golden mean; the golden beta-map has irrational data and runs in float mode.
GOLDEN = (1 + math.sqrt(5)) / 2


def _interval_map(spec, name, lam=None) -> PiecewiseMap:
    pieces = tuple(
        Piece(k, Box((lo,), (hi,)), AffineBranch((a,), (b,)))
        for k, (lo, hi, a, b) in enumerate(spec)
    )
    return PiecewiseMap(pieces, lam=lam, name=name)


def doubling() -> PiecewiseMap:
    """``x -> 2x mod 1`` on ``[0, 1]``."""
    return _interval_map([(F(0), F(1, 2), F(2), F(0)),
                          (F(1, 2), F(1), F(2), F(-1))], "doubling")


def tripling() -> PiecewiseMap:
    return _interval_map([(F(0), F(1, 3), F(3), F(0)),
                          (F(1, 3), F(2, 3), F(3), F(-1)),
                          (F(2, 3), F(1), F(3), F(-2))], "tripling")


def golden_beta() -> PiecewiseMap:
    """``x -> beta x mod 1`` with ``beta`` the golden mean (Markov, not full branched)."""
    b = GOLDEN
    return _interval_map([(0.0, 1.0 / b, b, 0.0),
                          (1.0 / b, 1.0, b, -1.0)], "golden_beta")


def slopes_2_3() -> PiecewiseMap:
    """Markov map with slope 2 on ``(0, 1/2)`` and slope 3 on the two other pieces.

    ``0`` is a fixed point of slope 2; the last branch is not onto
    (its image is the first piece).
    """
    return _interval_map([(F(0), F(1, 2), F(2), F(0)),
                          (F(1, 2), F(5, 6), F(3), F(-3, 2)),
                          (F(5, 6), F(1), F(3), F(-5, 2))], "slopes_2_3")


def tent() -> PiecewiseMap:
    return _interval_map([(F(0), F(1, 2), F(2), F(0)),
                          (F(1, 2), F(1), F(-2), F(2))], "tent")


def beta_2d_diag_2_3() -> PiecewiseMap:
    """``(x, y) -> (2x mod 1, 3y mod 1)`` on the unit square."""
    return product_map([doubling(), tripling()], name="beta_2d_diag_2_3")


CATALOG = {
    "doubling": doubling,
    "golden_beta": golden_beta,
    "slopes_2_3": slopes_2_3,
    "beta_2d_diag_2_3": beta_2d_diag_2_3,
    "tent": tent,
}

#: Catalog maps whose partition is Markov.
MARKOV_CATALOG = ("doubling", "golden_beta", "beta_2d_diag_2_3", "slopes_2_3", "tent")


def get(name: str) -> PiecewiseMap:
    try:
        return CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown catalog map {name!r}; available: {sorted(CATALOG)}") from None
