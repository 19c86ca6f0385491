"""Finite-depth subadditive pressures on the whole space and on boundary sets.

Every pressure is reported as a bracket: the per-depth values
``a_n = log sum sup f_n``, the Fekete upper bound ``min_n a_n / n`` and, when
available, a lower bound coming from invariant measures.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .cylinders import (DEFAULT_BUDGET, BoundarySet, Target, boundary_set, cylinder_inf,
                        cylinder_sup, cylinders_meeting, enumerate_cylinders, resolve_target,
                        target_descriptor)
from .errors import UnsupportedGeometry
from .factorized import product_level_count, product_level_extreme, product_level_sum, product_supported
from .maps import AffineBranch, Box, Piece, PiecewiseMap, Weight
from .numeric import MINUS_INFINITY, Number, fmt_number, log_abs, logsumexp
from .potential import PotentialSpec


@dataclass(frozen=True)
class LevelSum:
    """``sum sup f_n`` over the depth-``n`` cylinders meeting the target.

    ``log_upper`` uses certified sups, ``log_lower`` sampled ones; ``exact`` is
    the rational sum when every term is rational.
    """

    n: int
    log_upper: float
    log_lower: float
    count: int
    exact: Optional[Fraction] = None


def _product_depth(target) -> Tuple[bool, Optional[int]]:
    if target is None:
        return True, None
    if isinstance(target, BoundarySet):
        return True, target.pullback_depth
    return False, None


def level_sum(m: PiecewiseMap, n: int, potential: PotentialSpec, target: Target = None,
              budget: int = DEFAULT_BUDGET) -> LevelSum:
    """Sum of ``sup f_n`` over cylinders whose closure meets ``target``."""
    target = resolve_target(m, target) if isinstance(target, str) else target
    ok, depth = _product_depth(target)
    if ok and product_supported(m, potential):
        value, exact = product_level_sum(m, n, potential, depth)
        count = product_level_count(m, n, depth)
        if exact:
            lv = log_abs(value)
            return LevelSum(n, lv, lv, count, value)
        return LevelSum(n, value, value, count)
    cyls = cylinders_meeting(m, n, target, budget)
    sups = [cylinder_sup(m, c, potential) for c in cyls]
    if sups and all(s.exact is not None for s in sups):
        total = sum((s.exact for s in sups), Fraction(0))
        lv = log_abs(total)
        return LevelSum(n, lv, lv, len(sups), total)
    return LevelSum(n, logsumexp(s.log_upper for s in sups),
                    logsumexp(s.log_lower for s in sups), len(sups))


def level_extremes(m: PiecewiseMap, n: int, potential: PotentialSpec, target: Target = None):
    """``(log inf f_n, log sup f_n)`` over the cylinders meeting ``target``.

    The inf end is certified from below and the sup end from above.
    """
    target = resolve_target(m, target) if isinstance(target, str) else target
    if target is None and product_supported(m, potential):
        hi, exact = product_level_extreme(m, n, potential, "max")
        lo, _ = product_level_extreme(m, n, potential, "min")
        if exact:
            return log_abs(lo), log_abs(hi)
        return lo, hi
    cyls = cylinders_meeting(m, n, target)
    if not cyls:
        return MINUS_INFINITY, MINUS_INFINITY
    lo = min(cylinder_inf(m, c, potential).log_lower for c in cyls)
    hi = max(cylinder_sup(m, c, potential).log_upper for c in cyls)
    return lo, hi


@dataclass(frozen=True)
class PressureRow:
    n: int
    a_n: float
    rate: float
    a_n_lower: float
    count: int
    exact_sum: Optional[Fraction] = None


@dataclass(frozen=True)
class PressureEstimate:
    """Bracketed finite-depth pressure.

    ``fekete_upper`` is ``min_n a_n / n``.  ``transfer_upper`` is a
    Collatz-Wielandt bound on the log spectral radius of the weighted
    transition matrix, set only for Markov maps with locally constant data.
    ``measure_lower`` is the best measure objective found by
    :mod:`pwthermo.varprinciple`.
    """

    per_n: Tuple[PressureRow, ...]
    fekete_upper: float
    target_set: str
    potential: str
    measure_lower: Optional[float] = None
    transfer_upper: Optional[float] = None

    @property
    def upper(self) -> float:
        if self.transfer_upper is None:
            return self.fekete_upper
        return min(self.fekete_upper, self.transfer_upper)

    @property
    def lower(self) -> Optional[float]:
        return self.measure_lower

    @property
    def gap(self) -> Optional[float]:
        if self.measure_lower is None:
            return None
        return self.upper - self.measure_lower

    @property
    def last_rate(self) -> float:
        return self.per_n[-1].rate

    def rate(self, n: int) -> float:
        return self.row(n).rate

    def row(self, n: int) -> PressureRow:
        for r in self.per_n:
            if r.n == n:
                return r
        raise KeyError(n)

    def with_measure_lower(self, value: Optional[float]) -> "PressureEstimate":
        return replace(self, measure_lower=value)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "a_n", "a_n_over_n", "a_n_lower", "count", "exact_sum"])
        for r in self.per_n:
            w.writerow([r.n, fmt_number(r.a_n), fmt_number(r.rate), fmt_number(r.a_n_lower),
                        r.count, "" if r.exact_sum is None else str(r.exact_sum)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "target_set": self.target_set,
            "potential": self.potential,
            "fekete_upper": fmt_number(self.fekete_upper),
            "transfer_upper": None if self.transfer_upper is None else fmt_number(self.transfer_upper),
            "upper": fmt_number(self.upper),
            "measure_lower": None if self.measure_lower is None else fmt_number(self.measure_lower),
            "last_rate": fmt_number(self.last_rate),
        }


def _rate(a: float, n: int) -> float:
    return a / n if a != MINUS_INFINITY else MINUS_INFINITY


def pressure_estimate(m: PiecewiseMap, potential: PotentialSpec, target: Target = None,
                      n_max: int = 8, n_min: int = 1, transfer: bool = True,
                      budget: int = DEFAULT_BUDGET) -> PressureEstimate:
    """Per-depth pressure values for ``n_min <= n <= n_max`` with the Fekete bound."""
    target = resolve_target(m, target) if isinstance(target, str) else target
    rows = []
    for n in range(n_min, n_max + 1):
        ls = level_sum(m, n, potential, target, budget)
        rows.append(PressureRow(n, ls.log_upper, _rate(ls.log_upper, n), ls.log_lower,
                                ls.count, ls.exact))
    fekete = min(r.rate for r in rows)
    t_up = None
    if transfer and target is None:
        from .varprinciple import transfer_pressure_upper

        t_up = transfer_pressure_upper(m, potential)
    return PressureEstimate(tuple(rows), fekete, target_descriptor(target), potential.describe(),
                            transfer_upper=t_up)


def boundary_pressure(m: PiecewiseMap, potential: PotentialSpec, K: int = 0, n_max: int = 8,
                      n_min: int = 1) -> PressureEstimate:
    """Pressure restricted to cylinders meeting ``S^(K)`` (``K = 0``: piece boundaries)."""
    return pressure_estimate(m, potential, boundary_set(m, K), n_max, n_min, transfer=False)


def boundary_pressure_curve(m: PiecewiseMap, potential: PotentialSpec, K_max: int = 3,
                            n_max: int = 8) -> List[PressureEstimate]:
    """Boundary pressures for ``K = 0..K_max``; nondecreasing in ``K`` at each depth."""
    return [boundary_pressure(m, potential, K, n_max) for K in range(K_max + 1)]


@dataclass(frozen=True)
class SmallBoundaryVerdict:
    verdict: str
    margin: Optional[float]
    boundary_upper: float
    full_lower: Optional[float]
    full_upper: float
    boundary_lower: Optional[float] = None

    def to_dict(self) -> dict:
        f = lambda v: None if v is None else fmt_number(v)
        return {"verdict": self.verdict, "margin": f(self.margin),
                "boundary_upper": f(self.boundary_upper), "full_lower": f(self.full_lower),
                "full_upper": f(self.full_upper), "boundary_lower": f(self.boundary_lower)}


HOLDS, FAILS, INCONCLUSIVE = "Holds", "Fails", "Inconclusive"


def small_boundary_check(full: PressureEstimate, boundary: PressureEstimate) -> SmallBoundaryVerdict:
    """Compare the boundary pressure bracket against the full-space bracket.

    Holds when the boundary upper bound is below the full-space lower bound;
    fails when the boundary lower bound exceeds the full-space upper bound.
    """
    b_up = boundary.upper
    f_lo = full.measure_lower
    if f_lo is not None and b_up < f_lo:
        return SmallBoundaryVerdict(HOLDS, f_lo - b_up, b_up, f_lo, full.upper,
                                    boundary.measure_lower)
    b_lo = boundary.measure_lower
    if b_lo is not None and b_lo > full.upper:
        return SmallBoundaryVerdict(FAILS, b_lo - full.upper, b_up, f_lo, full.upper, b_lo)
    margin = None if f_lo is None else f_lo - b_up
    return SmallBoundaryVerdict(INCONCLUSIVE, margin, b_up, f_lo, full.upper, b_lo)


def small_boundary_verdict(m: PiecewiseMap, potential: PotentialSpec, n_max: int = 8,
                           K: int = 0, k_max: int = 2, L_max: int = 6):
    """Compute both pressures, attach measure lower bounds and decide."""
    from .varprinciple import attach_measure_bounds

    full = pressure_estimate(m, potential, None, n_max)
    full = attach_measure_bounds(m, potential, full, k_max=k_max, L_max=L_max)
    bnd = boundary_pressure(m, potential, K, n_max)
    return small_boundary_check(full, bnd), full, bnd


@dataclass(frozen=True)
class Sandwich:
    lower: float
    estimate: float
    upper: float
    n: int

    @property
    def holds(self) -> bool:
        tol = 1e-12 * max(1.0, abs(self.estimate))
        return self.lower <= self.estimate + tol and self.estimate <= self.upper + tol


def trivial_sandwich(m: PiecewiseMap, potential: PotentialSpec, n_max: int = 8,
                     target: Target = None) -> Sandwich:
    """``e^{P(0,E)/q} (inf f)^{1/n} <= e^{P(q log f, E)/q} <= e^{P(0,E)/q} (sup f)^{1/n}``
    at depth ``n_max``, where ``f`` is the potential taken with ``q = 1``."""
    target = resolve_target(m, target) if isinstance(target, str) else target
    n = n_max
    q = float(potential.q)
    base = potential.with_(q=1)
    count = level_sum(m, n, PotentialSpec.unit(), target).count
    est = level_sum(m, n, potential, target).log_upper
    lo, hi = level_extremes(m, n, base, target)
    log_count = math.log(count)
    return Sandwich(math.exp(log_count / (n * q) + lo / n), math.exp(est / (n * q)),
                    math.exp(log_count / (n * q) + hi / n), n)


def lambda_top_exterior(m: PiecewiseMap, n_max: int = 6) -> float:
    """``Lambda_{d-1}``: growth of the product of the top ``d - 1`` expansions.

    For diagonal branches the singular values of ``DT^n`` are the per-axis
    slope products, so the value is ``exp max_w (1/n) (sum of the d - 1
    largest per-axis log slopes)``.  ``Lambda_0 = 1``.
    """
    d = m.dimension
    if d == 1:
        return 1.0
    if not m.is_affine:
        raise UnsupportedGeometry("exterior growth needs affine branches in dimension > 1")
    n = n_max
    if m.factors is not None:
        per_axis = [max(log_abs(c.slope[0]) for c in enumerate_cylinders(f, n)) / n
                    for f in m.factors]
        best = max(sum(per_axis[k] for k in S) for S in itertools.combinations(range(d), d - 1))
        return math.exp(best)
    best = MINUS_INFINITY
    for c in enumerate_cylinders(m, n):
        logs = sorted((log_abs(a) for a in c.slope), reverse=True)
        best = max(best, math.fsum(logs[:d - 1]) / n)
    return math.exp(best)


# ---------------------------------------------------------------------------
# Word blocking
# ---------------------------------------------------------------------------


def blocked_system(m: PiecewiseMap, potential: PotentialSpec, block: int):
    """The map ``T^block`` with pieces the ``block``-cylinders, and the additive
    weight ``log f_block`` carried as an exp-affine weight.

    Needs affine branches.  The returned potential has ``t = 0``, ``p = inf``.
    """
    if not m.is_affine:
        raise UnsupportedGeometry("word blocking needs affine branches")
    from .cylinders import _exp_affine_form

    cyls = enumerate_cylinders(m, block)
    pieces, coeffs, offsets = [], [], []
    e_g, e_det, e_nu = (float(e) for e in potential.exponents)
    w = potential.weight
    for k, c in enumerate(cyls):
        pieces.append(Piece(k, c.region, AffineBranch(c.slope, c.offset)))
        logs = [log_abs(a) for a in c.slope]
        rest = e_det * math.fsum(logs) - e_nu * min(logs) if (e_det or e_nu) else 0.0
        if w.kind == "exp_affine":
            alpha, beta = _exp_affine_form(m, w, c)
            coeffs.append(tuple(e_g * a for a in alpha))
            offsets.append(e_g * beta + rest)
        else:
            sup = cylinder_sup(m, c, potential.with_(t=0, p=math.inf))
            coeffs.append((0.0,) * m.dimension)
            offsets.append(sup.log_upper + rest)
    bm = PiecewiseMap(tuple(pieces), name=f"{m.name}^{block}")
    weight = Weight.exp_affine(coeffs, offsets)
    return bm, PotentialSpec(weight)


def blocked_pressure(m: PiecewiseMap, potential: PotentialSpec, block: int, k_max: int) -> PressureEstimate:
    """Pressure of ``T^block`` under ``log f_block``, per blocked depth ``k``."""
    bm, bpot = blocked_system(m, potential, block)
    return pressure_estimate(bm, bpot, None, k_max, transfer=False)
