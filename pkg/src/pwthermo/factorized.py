"""Sums and extrema over product cylinders without materialising them.

For a product of one-dimensional affine maps every ``n``-cylinder is a tuple
of factor cylinders, and a separable potential factorises except for the
``nu_n`` term, which couples the axes only through the smallest slope.  Each
axis contributes a list of ``(slope, value)`` items; the coupled sum

    sum over tuples of  h(min_k slope_k) * prod_k value_k

is evaluated by splitting on which axis first attains the minimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .cylinders import BoundarySet, boundary_set, enumerate_cylinders, touches
from .maps import PiecewiseMap
from .numeric import MINUS_INFINITY, Number, as_integer, log_abs, logsumexp
from .potential import PotentialSpec

Item = Tuple[Number, Number]  # (|slope|, value) in exact mode, (log|slope|, log value) in log mode


@dataclass(frozen=True)
class AxisItems:
    """Per-axis ``(slope key, value)`` items, split by target contact."""

    touching: Tuple[Item, ...]
    other: Tuple[Item, ...]

    @property
    def all(self) -> Tuple[Item, ...]:
        return self.touching + self.other


def product_supported(m: PiecewiseMap, potential: PotentialSpec) -> bool:
    return m.factors is not None and potential.weight.separable


def _exact_mode(m: PiecewiseMap, potential: PotentialSpec) -> bool:
    if not all(f.exact for f in m.factors):
        return False
    e_g, e_det, e_nu = potential.exponents
    w = potential.weight
    if as_integer(e_nu) is None:
        return False
    if w.kind == "det_jacobian_power":
        return as_integer(e_g * w.value + e_det) is not None
    if w.value == 0:
        return False
    return as_integer(e_det) is not None and as_integer(e_g) is not None


def axis_items(m: PiecewiseMap, n: int, potential: PotentialSpec, target) -> Tuple[List[AxisItems], bool]:
    """Factor items for every axis and whether they are exact.

    Exact items are ``(|slope|, value)`` Fractions; otherwise both entries are
    logarithms.  ``target`` is ``None`` or a pullback depth ``K`` of the
    boundary set, applied per axis.
    """
    e_g, e_det, e_nu = potential.exponents
    w = potential.weight
    exact = _exact_mode(m, potential)
    if w.kind == "det_jacobian_power":
        axis_exp = e_g * w.value + e_det
        const_log = 0.0
    else:
        axis_exp = e_det
        const_log = n * log_abs(w.value) * float(e_g) if e_g else 0.0
    out = []
    for k, f in enumerate(m.factors):
        bset = None if target is None else boundary_set(f, target)
        touching, other = [], []
        for c in enumerate_cylinders(f, n):
            s = abs(c.slope[0])
            if exact:
                v = s ** as_integer(axis_exp)
                if k == 0 and w.kind == "constant":
                    v = v * abs(Fraction(w.value)) ** (as_integer(e_g) * n)
                item = (s, v)
            else:
                ls = log_abs(s)
                lv = float(axis_exp) * ls if axis_exp else 0.0
                if k == 0:
                    lv += const_log
                item = (ls, lv)
            (touching if bset is not None and touches(f, c, bset) else other).append(item)
        out.append(AxisItems(tuple(touching), tuple(other)))
    return out, exact


def _group(items: Sequence[Item], exact: bool) -> Dict[Number, Number]:
    """Aggregate values sharing a slope key (sum, or logsumexp in log mode)."""
    acc: Dict[Number, list] = {}
    for s, v in items:
        acc.setdefault(s, []).append(v)
    if exact:
        return {s: sum(vs, Fraction(0)) for s, vs in acc.items()}
    return {s: logsumexp(vs) for s, vs in acc.items()}


def coupled_sum(axes: Sequence[Sequence[Item]], e_nu: Number, exact: bool) -> Number:
    """``sum over tuples of nu^e_nu * prod value_k`` with ``nu = 1/min slope``.

    Returns a Fraction in exact mode and a logarithm otherwise.
    """
    if any(len(a) == 0 for a in axes):
        return Fraction(0) if exact else MINUS_INFINITY
    groups = [_group(a, exact) for a in axes]
    if e_nu == 0:
        if exact:
            return math.prod((sum(g.values(), Fraction(0)) for g in groups), start=Fraction(1))
        return math.fsum(logsumexp(g.values()) for g in groups)
    keys = sorted(set().union(*groups))
    d = len(groups)
    # suffix aggregates: strictly greater than / at least each key
    total_terms = []
    exact_total = Fraction(0)
    for u in keys:
        above = []
        atleast = []
        for g in groups:
            gt = [v for s, v in g.items() if s > u]
            ge = gt + ([g[u]] if u in g else [])
            if exact:
                above.append(sum(gt, Fraction(0)))
                atleast.append(sum(ge, Fraction(0)))
            else:
                above.append(logsumexp(gt) if gt else MINUS_INFINITY)
                atleast.append(logsumexp(ge) if ge else MINUS_INFINITY)
        for k in range(d):
            if u not in groups[k]:
                continue
            if exact:
                term = groups[k][u] / u ** as_integer(e_nu)
                for j in range(d):
                    if j != k:
                        term *= above[j] if j < k else atleast[j]
                exact_total += term
            else:
                parts = [groups[k][u], -float(e_nu) * u]
                parts += [above[j] if j < k else atleast[j] for j in range(d) if j != k]
                if all(p > MINUS_INFINITY for p in parts):
                    total_terms.append(math.fsum(parts))
    if exact:
        return exact_total
    return logsumexp(total_terms) if total_terms else MINUS_INFINITY


def coupled_extreme(axes: Sequence[Sequence[Item]], e_nu: Number, exact: bool, mode: str = "max") -> Number:
    """``max`` (or ``min``) over tuples of ``nu^e_nu * prod value_k``."""
    if any(len(a) == 0 for a in axes):
        return None
    pick = max if mode == "max" else min
    best = None
    keys = sorted({s for a in axes for s, _ in a})
    for u in keys:
        # tuples whose smallest slope is exactly u
        for k in range(len(axes)):
            cand_k = [v for s, v in axes[k] if s == u]
            if not cand_k:
                continue
            vals = [pick(cand_k)]
            ok = True
            for j, a in enumerate(axes):
                if j == k:
                    continue
                pool = [v for s, v in a if s >= u]
                if not pool:
                    ok = False
                    break
                vals.append(pick(pool))
            if not ok:
                continue
            if exact:
                val = math.prod(vals, start=Fraction(1)) / u ** as_integer(e_nu)
            else:
                val = math.fsum(vals) - float(e_nu) * u
            best = val if best is None else pick(best, val)
    return best


def product_level_sum(m: PiecewiseMap, n: int, potential: PotentialSpec, target_depth: Optional[int]):
    """``(value, exact)`` of ``sum sup f_n`` over cylinders meeting the target.

    ``target_depth`` ``None`` means the whole space, otherwise the boundary set
    pulled back that many times.  A product cylinder meets it iff some axis
    cylinder does, so the sum splits over the nonempty sets of touching axes.
    """
    items, exact = axis_items(m, n, potential, target_depth)
    e_nu = potential.exponents[2]
    if target_depth is None:
        return coupled_sum([a.all for a in items], e_nu, exact), exact
    d = len(items)
    parts = []
    for mask in itertools.product((False, True), repeat=d):
        if not any(mask):
            continue
        axes = [a.touching if on else a.other for a, on in zip(items, mask)]
        parts.append(coupled_sum(axes, e_nu, exact))
    if exact:
        return sum(parts, Fraction(0)), exact
    finite = [p for p in parts if p > MINUS_INFINITY]
    return (logsumexp(finite) if finite else MINUS_INFINITY), exact


def product_level_extreme(m: PiecewiseMap, n: int, potential: PotentialSpec, mode: str = "max"):
    items, exact = axis_items(m, n, potential, None)
    return coupled_extreme([a.all for a in items], potential.exponents[2], exact, mode), exact


def product_level_count(m: PiecewiseMap, n: int, target_depth: Optional[int]) -> int:
    """Number of product cylinders meeting the target."""
    total = 1
    none_touch = 1
    for f in m.factors:
        cyls = enumerate_cylinders(f, n)
        total *= len(cyls)
        if target_depth is not None:
            b = boundary_set(f, target_depth)
            none_touch *= sum(1 for c in cyls if not touches(f, c, b))
    return total if target_depth is None else total - none_touch
