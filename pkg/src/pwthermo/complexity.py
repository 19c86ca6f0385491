"""Complexity at the beginning (cylinder closure overlaps) and at the end
(branch image overlaps), plain and weighted."""

from __future__ import annotations

import bisect
import heapq
import csv
import io
import itertools
import math
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from gmpy2 import mpq

from .cylinders import Cylinder, cylinder_sup, enumerate_cylinders, register_cache
from .errors import UnsupportedGeometry
from .factorized import _exact_mode, coupled_sum
from .maps import Box, PiecewiseMap
from .numeric import MINUS_INFINITY, Number, fmt_number, log_abs
from .potential import PotentialSpec


def covering_sets_1d(intervals: Sequence[Tuple[Number, Number]], eps: float = 0):
    """Indices of the closed intervals containing each distinct left endpoint."""
    order = sorted(range(len(intervals)), key=lambda i: intervals[i][0])
    active = []
    out = []
    k = 0
    for c in sorted({iv[0] for iv in intervals}):
        while k < len(order) and intervals[order[k]][0] <= c + eps:
            heapq.heappush(active, (intervals[order[k]][1], order[k]))
            k += 1
        while active and active[0][0] < c - eps:
            heapq.heappop(active)
        out.append(sorted(i for _, i in active))
    return out


def _fast_keys(values):
    """Exact values as ``mpq`` (fast C comparisons); floats unchanged."""
    if values and all(isinstance(v, Fraction) for v in values):
        return [mpq(v.numerator, v.denominator) for v in values]
    return list(values)


def max_overlap_1d(intervals: Sequence[Tuple[Number, Number]], weights=None, eps: float = 0):
    """Maximum over points of the (weighted) number of closed intervals containing it.

    The maximum of a sum of closed-interval indicators is attained at some
    left endpoint, so only those are swept.
    """
    if not intervals:
        return 0
    lo_keys = _fast_keys([iv[0] for iv in intervals])
    hi_keys = _fast_keys([iv[1] for iv in intervals])
    los = sorted(range(len(intervals)), key=lo_keys.__getitem__)
    his = sorted(range(len(intervals)), key=hi_keys.__getitem__)
    lo_vals = [lo_keys[i] for i in los]
    hi_vals = [hi_keys[i] for i in his]
    if weights is None:
        best = 0
        for c in sorted(set(lo_vals)):
            started = bisect.bisect_right(lo_vals, c + eps)
            ended = bisect.bisect_left(hi_vals, c - eps)
            best = max(best, started - ended)
        return best
    zero = weights[0] * 0
    lo_pref = list(itertools.accumulate((weights[i] for i in los), initial=zero))
    hi_pref = list(itertools.accumulate((weights[i] for i in his), initial=zero))
    best = None
    for c in sorted(set(lo_vals)):
        started = bisect.bisect_right(lo_vals, c + eps)
        ended = bisect.bisect_left(hi_vals, c - eps)
        val = lo_pref[started] - hi_pref[ended]
        best = val if best is None else max(best, val)
    return best


def max_overlap_boxes(boxes: Sequence[Box], weights=None, eps: float = 0, chunk: int = 4096):
    """Maximum (weighted) closed-box overlap by a grid of candidate corners.

    A maximal clique of closed boxes meets at a point whose coordinates are
    all lower endpoints, so the candidates are the per-axis lower endpoints.
    """
    if not boxes:
        return 0
    d = boxes[0].dimension
    if d == 1:
        return max_overlap_1d([(b.lo[0], b.hi[0]) for b in boxes], weights, eps)
    lo = np.array([[float(v) for v in b.lo] for b in boxes])
    hi = np.array([[float(v) for v in b.hi] for b in boxes])
    w = None if weights is None else np.array([float(x) for x in weights])
    axes = [np.unique(lo[:, k]) for k in range(d)]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(d, -1).T
    best = 0 if w is None else -math.inf
    for start in range(0, len(grid), chunk):
        pts = grid[start:start + chunk]
        inside = np.ones((len(pts), len(boxes)), dtype=bool)
        for k in range(d):
            inside &= (lo[None, :, k] <= pts[:, None, k] + eps) & (pts[:, None, k] <= hi[None, :, k] + eps)
        vals = inside.sum(axis=1) if w is None else inside @ w
        best = max(best, vals.max())
    return int(best) if w is None else float(best)


def _weights(m: PiecewiseMap, cyls: Sequence[Cylinder], potential: PotentialSpec):
    vals = [cylinder_sup(m, c, potential).upper for c in cyls]
    if all(isinstance(v, Fraction) for v in vals):
        return vals
    return [float(v) for v in vals]


def _product_weighted_db(m: PiecewiseMap, n: int, potential: PotentialSpec):
    """Weighted beginning complexity of a product map from per-axis overlap classes."""
    e_g, e_det, e_nu = potential.exponents
    exact = _exact_mode(m, potential)
    from .factorized import axis_items

    items, _ = axis_items(m, n, potential, None)
    classes = []
    for f, ax in zip(m.factors, items):
        cyls = enumerate_cylinders(f, n)
        per_axis = set()
        # with no target every item sits in ``other``, in cylinder order
        for cover in covering_sets_1d([(c.region.lo[0], c.region.hi[0]) for c in cyls], f.eps):
            per_axis.add(tuple(sorted(ax.other[i] for i in cover)))
        classes.append(sorted(per_axis))
    best = None
    for combo in itertools.product(*classes):
        val = coupled_sum(combo, e_nu, exact)
        if not exact:
            val = math.exp(val) if val > MINUS_INFINITY else 0.0
        best = val if best is None else max(best, val)
    return best


_DB_CACHE: "weakref.WeakKeyDictionary[PiecewiseMap, dict]" = weakref.WeakKeyDictionary()
register_cache(_DB_CACHE)


def complexity_beginning(m: PiecewiseMap, n: int, potential: Optional[PotentialSpec] = None):
    """``D^b_n``: max number of closed ``n``-cylinders containing a point.

    With a potential, each cylinder counts with weight ``sup f_n`` over it;
    the unit potential returns the integer count.
    """
    if potential is None or potential.is_unit:
        memo = _DB_CACHE.setdefault(m, {})
        if n not in memo:
            if m.factors is not None:
                memo[n] = math.prod(complexity_beginning(f, n) for f in m.factors)
            else:
                memo[n] = max_overlap_boxes([c.region for c in enumerate_cylinders(m, n)], eps=m.eps)
        return memo[n]
    if m.factors is not None and potential.weight.separable:
        return _product_weighted_db(m, n, potential)
    cyls = enumerate_cylinders(m, n)
    return max_overlap_boxes([c.region for c in cyls], _weights(m, cyls, potential), eps=m.eps)


def complexity_end(m: PiecewiseMap, n: int) -> int:
    """``D^e_n``: max number of closed depth-``n`` branch images covering a point."""
    if m.factors is not None:
        return math.prod(complexity_end(f, n) for f in m.factors)
    return max_overlap_boxes([c.image for c in enumerate_cylinders(m, n)], eps=m.eps)


def _rate(value, n: int) -> float:
    if value == 0:
        return MINUS_INFINITY
    return log_abs(value) / n


@dataclass(frozen=True)
class ComplexityProfile:
    """Per-depth complexity data with last-depth rates and Fekete infima."""

    depths: Tuple[int, ...]
    db_n: Tuple[int, ...]
    de_n: Tuple[int, ...]
    db_weighted_n: Tuple[Number, ...]
    potential: str

    def rates(self, seq) -> List[float]:
        return [_rate(v, n) for n, v in zip(self.depths, seq)]

    @property
    def db_rate(self) -> float:
        return self.rates(self.db_n)[-1]

    @property
    def de_rate(self) -> float:
        return self.rates(self.de_n)[-1]

    @property
    def db_fekete(self) -> float:
        return min(self.rates(self.db_n))

    @property
    def de_fekete(self) -> float:
        return min(self.rates(self.de_n))

    @property
    def db_weighted_fekete(self) -> float:
        return min(self.rates(self.db_weighted_n))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "Db_n", "De_n", "Db_n_weighted", "rate_Db", "rate_De", "rate_Db_weighted"])
        rb, re_, rw = self.rates(self.db_n), self.rates(self.de_n), self.rates(self.db_weighted_n)
        for k, n in enumerate(self.depths):
            w.writerow([n, self.db_n[k], self.de_n[k], fmt_number(self.db_weighted_n[k]),
                        fmt_number(rb[k]), fmt_number(re_[k]), fmt_number(rw[k])])
        return buf.getvalue()


def complexity_profile(m: PiecewiseMap, n_max: int,
                       potential: Optional[PotentialSpec] = None) -> ComplexityProfile:
    depths = tuple(range(1, n_max + 1))
    db = tuple(complexity_beginning(m, n) for n in depths)
    de = tuple(complexity_end(m, n) for n in depths)
    if potential is None or potential.is_unit:
        dw = db
    else:
        dw = tuple(complexity_beginning(m, n, potential) for n in depths)
    desc = "unit" if potential is None else potential.describe()
    return ComplexityProfile(depths, db, de, dw, desc)
