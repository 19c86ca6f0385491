"""The potential family ``f_n = (|g^(n)| |det DT^n|^(1/p) nu_n^t)^q``."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from fractions import Fraction

from .errors import ParameterOutOfRange
from .maps import Weight
from .numeric import Number, as_integer, parse_number


def _num(x):
    return parse_number(x) if isinstance(x, str) else x


@dataclass(frozen=True)
class PotentialSpec:
    """Submultiplicative potential sequence built from a weight.

    With ``p = inf`` the Jacobian factor is dropped, so
    ``PotentialSpec(G, t=t)`` is the family ``|G^(n)| nu_n^t`` and
    ``PotentialSpec(Weight.constant(1))`` is ``f_n = 1``.  ``s`` is only
    carried for the split bound and does not enter :attr:`exponents`.
    """

    weight: Weight
    t: Number = 0
    p: Number = math.inf
    q: Number = 1
    s: Number = 0

    def __post_init__(self):
        for name in ("t", "p", "q", "s"):
            object.__setattr__(self, name, _num(getattr(self, name)))
        if self.t < 0:
            raise ParameterOutOfRange(f"t = {self.t} must be >= 0")
        if not 0 <= self.s <= self.t:
            raise ParameterOutOfRange(f"s = {self.s} must lie in [0, t = {self.t}]")
        if self.p < 1:
            raise ParameterOutOfRange(f"p = {self.p} must be >= 1")
        if self.q < 1:
            raise ParameterOutOfRange(f"q = {self.q} must be >= 1")
        if self.p != math.inf and self.p > 1:
            qmax = self.p / (self.p - 1)
            if self.q > qmax * (1 + 1e-12):
                raise ParameterOutOfRange(f"q = {self.q} exceeds p/(p-1) = {qmax}")

    @classmethod
    def unit(cls) -> "PotentialSpec":
        return cls(Weight.constant(1))

    @property
    def inv_p(self) -> Number:
        if self.p == math.inf:
            return 0
        return Fraction(1) / self.p if isinstance(self.p, Fraction) else 1.0 / self.p

    @cached_property
    def exponents(self):
        """``(e_g, e_det, e_nu)`` with ``log f = e_g log|g| + e_det log|det| + e_nu log nu``."""
        q = self.q
        return q, q * self.inv_p, q * self.t

    @property
    def is_unit(self) -> bool:
        e_g, e_det, e_nu = self.exponents
        w = self.weight
        trivial_g = e_g == 0 or (w.kind == "constant" and abs(w.value) == 1) or \
            (w.kind == "det_jacobian_power" and w.value == 0)
        return trivial_g and e_det == 0 and e_nu == 0

    @cached_property
    def _integral(self):
        ints = [as_integer(x) for x in self.exponents]
        if any(i is None for i in ints):
            return None
        return tuple(ints)

    def integral_exponents(self):
        """Integer exponents for exact evaluation, or ``None``."""
        return self._integral

    def with_(self, **kw) -> "PotentialSpec":
        return replace(self, **kw)

    def describe(self) -> str:
        w = self.weight
        wdesc = {
            "constant": f"const({w.value})",
            "det_jacobian_power": f"|det DT|^({w.value})",
            "piecewise_constant": "piecewise_const",
            "exp_affine": "exp_affine",
        }[w.kind]
        p = "inf" if self.p == math.inf else str(self.p)
        return f"g={wdesc},t={self.t},p={p},q={self.q}"
