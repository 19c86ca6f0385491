"""Closed-form bounds on (essential) spectral radii of weighted transfer
operators, evaluated from finite-depth pressure and complexity data.

Every limit is reported as a bracket together with its per-depth curve.
Upper ends use Fekete infima of subadditive sequences; lower ends use the
trivial complexity bound ``D^b >= 0`` and, for Markov maps, the best Markov
measure objective.  No extrapolation is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .complexity import complexity_beginning, complexity_end
from .cylinders import cylinder_sup, enumerate_cylinders, log_derivative_range
from .errors import NoMeasures, NotMarkov, ParameterOutOfRange, UnsupportedGeometry
from .maps import PiecewiseMap, Weight
from .numeric import MINUS_INFINITY, fmt_number, log_abs
from .potential import PotentialSpec
from .pressure import boundary_pressure, level_extremes, level_sum, pressure_estimate
from .varprinciple import MeasureCandidate, markov_candidates, measure_candidates


def _exp(x: Optional[float]) -> Optional[float]:
    if x is None:
        return None
    return 0.0 if x == MINUS_INFINITY else math.exp(x)


@dataclass(frozen=True)
class Bracket:
    """A bound with its certified bracket and per-depth curve.

    ``value`` is the finite-depth evaluation at the largest depth; ``lower``
    may be ``None`` when no lower certificate is available.  ``log_terms``
    records the exponent pieces that were combined.
    """

    name: str
    lower: Optional[float]
    upper: float
    value: float
    per_n: Tuple[float, ...]
    log_terms: Tuple[Tuple[str, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lower": None if self.lower is None else fmt_number(self.lower),
            "upper": fmt_number(self.upper),
            "value": fmt_number(self.value),
            "per_n": [fmt_number(v) for v in self.per_n],
            "log_terms": {k: fmt_number(v) for k, v in self.log_terms},
        }


# ---------------------------------------------------------------------------
# Parameter checks and shared ingredients
# ---------------------------------------------------------------------------


def _exact(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return x


def conjugate(p) -> float:
    """``p / (p - 1)``, exact for rational ``p``."""
    p = _exact(p)
    return p / (p - 1)


def check_parameters(weight: Weight, t, p, s=0):
    """Reject parameters outside ``0 <= s <= t < min(1/p, alpha)``, ``1 < p < inf``."""
    if not 1 < p < math.inf:
        raise ParameterOutOfRange(f"p = {p} must lie in (1, inf)")
    if t < 0:
        raise ParameterOutOfRange(f"t = {t} must be >= 0")
    if t * p >= 1:
        raise ParameterOutOfRange(f"t = {t} must be < 1/p = {1 / p}")
    if t >= weight.alpha:
        raise ParameterOutOfRange(f"t = {t} must be < alpha = {weight.alpha}")
    if not 0 <= s <= t:
        raise ParameterOutOfRange(f"s = {s} must lie in [0, t]")


def _bound_potential(weight: Weight, t, p) -> PotentialSpec:
    """``(p/(p-1)) log f_{n,t,p}`` as a potential sequence."""
    return PotentialSpec(weight, t, _exact(p), conjugate(p))


def _pressure_bracket(m: PiecewiseMap, pot: PotentialSpec, n_max: int, measures: bool = True):
    """``(lower or None, upper, per-n rates)`` of the full-space pressure."""
    est = pressure_estimate(m, pot, None, n_max)
    lower = None
    if measures:
        try:
            cands = markov_candidates(m, pot, 1)
        except (NotMarkov, UnsupportedGeometry):
            cands = []
        if cands:
            lower = min(max(c.value for c in cands), est.upper)
    return lower, est.upper, tuple(r.rate for r in est.per_n)


def _log_db_curve(m: PiecewiseMap, n_max: int, potential: Optional[PotentialSpec] = None):
    out = []
    for n in range(1, n_max + 1):
        v = complexity_beginning(m, n, potential)
        out.append(log_abs(v) / n if v else MINUS_INFINITY)
    return tuple(out)


def _sup_curve(m: PiecewiseMap, pot: PotentialSpec, n_max: int):
    return tuple(level_extremes(m, n, pot)[1] / n for n in range(1, n_max + 1))


def _max_log_expansion(m: PiecewiseMap) -> float:
    """``log`` of the largest one-step expansion rate over all pieces."""
    best = MINUS_INFINITY
    for c in enumerate_cylinders(m, 1):
        if c.slope is not None:
            best = max(best, max(log_abs(a) for a in c.slope))
        else:
            best = max(best, log_derivative_range(m, c)[1])
    return best


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


def essential_bound(m: PiecewiseMap, weight: Weight, t, p, n_max: int = 10,
                    db_rate: Optional[float] = None, measures: bool = True) -> Bracket:
    """``exp(D^b/p + ((p-1)/p) P*((p/(p-1)) log f_{n,t,p}))``.

    The complexity rate is bracketed by ``[0, min_n log D^b_n / n]``.  The
    finite-depth ``value`` combines the depth-``n_max`` pressure rate with
    ``db_rate`` (default: the lower end 0, the exact rate whenever ``D^b_n``
    stays bounded).  With ``t = 0`` this is the ``L_p`` spectral-radius bound.
    """
    check_parameters(weight, t, p)
    pot = _bound_potential(weight, t, p)
    inv_q = 1.0 / float(pot.q)
    p_lo, p_up, rates = _pressure_bracket(m, pot, n_max, measures)
    db = _log_db_curve(m, n_max)
    db_up = min(db)
    db_used = 0.0 if db_rate is None else float(db_rate)
    per_n = tuple(_exp(d / p + r * inv_q) for d, r in zip(db, rates))
    return Bracket(
        "R_t_p",
        None if p_lo is None else _exp(p_lo * inv_q),
        _exp(db_up / p + p_up * inv_q),
        _exp(db_used / p + rates[-1] * inv_q),
        per_n,
        (("db_rate_lower", 0.0), ("db_rate_upper", db_up), ("db_rate_used", db_used),
         ("pressure_upper", p_up), ("pressure_rate_n_max", rates[-1])),
    )


def spectral_radius_lp_bound(m: PiecewiseMap, weight: Weight, p, n_max: int = 10) -> Bracket:
    """Bound on the spectral radius on ``L_p``: the ``t = 0`` case."""
    b = essential_bound(m, weight, 0, p, n_max)
    return Bracket("R_0_p", b.lower, b.upper, b.value, b.per_n, b.log_terms)


def _weighted_db_bracket(m: PiecewiseMap, s, n_max: int):
    """Bracket of ``D^b({log nu_n^s})`` with its per-depth rates."""
    nu_pot = PotentialSpec(Weight.constant(1), s)
    curve = _log_db_curve(m, n_max, nu_pot)
    # each point lies in some closed cylinder whose sup of nu_n^s is >= Lambda^(-sn)
    lower = 0.0 - float(s) * _max_log_expansion(m)
    return lower, min(curve), curve


def essential_bound_split(m: PiecewiseMap, weight: Weight, t, s, p, n_max: int = 10,
                          db_rate: Optional[float] = None, measures: bool = True) -> Bracket:
    """``exp(D^b({log nu_n^s})/p + ((p-1)/p) P*((p/(p-1)) log(|g||det|^(1/p) nu_n^(t-s))))``.

    At ``s = 0`` every term reduces to the one used by :func:`essential_bound`,
    so the two agree bit for bit.
    """
    check_parameters(weight, t, p, s)
    pot = _bound_potential(weight, _exact(t) - _exact(s), p)
    inv_q = 1.0 / float(pot.q)
    p_lo, p_up, rates = _pressure_bracket(m, pot, n_max, measures)
    db_lo, db_up, db = _weighted_db_bracket(m, s, n_max)
    db_used = db_lo if db_rate is None else float(db_rate)
    per_n = tuple(_exp(d / p + r * inv_q) for d, r in zip(db, rates))
    return Bracket(
        "R_t_s_p",
        None if p_lo is None else _exp(db_lo / p + p_lo * inv_q),
        _exp(db_up / p + p_up * inv_q),
        _exp(db_used / p + rates[-1] * inv_q),
        per_n,
        (("db_rate_lower", db_lo), ("db_rate_upper", db_up), ("db_rate_used", db_used),
         ("pressure_upper", p_up), ("pressure_rate_n_max", rates[-1])),
    )


def essential_bound_split_boundary(m: PiecewiseMap, weight: Weight, t, s, p, n_max: int = 10,
                                   K: int = 0) -> Bracket:
    """Split bound with the complexity term replaced by the boundary pressure
    of ``{log nu_n^s}``, an upper bound for it."""
    check_parameters(weight, t, p, s)
    pot = _bound_potential(weight, _exact(t) - _exact(s), p)
    inv_q = 1.0 / float(pot.q)
    p_lo, p_up, rates = _pressure_bracket(m, pot, n_max, measures=False)
    bnd = boundary_pressure(m, PotentialSpec(Weight.constant(1), s), K, n_max)
    b_rates = tuple(r.rate for r in bnd.per_n)
    per_n = tuple(_exp(b / p + r * inv_q) for b, r in zip(b_rates, rates))
    return Bracket("R_t_s_p_boundary", None, _exp(bnd.upper / p + p_up * inv_q),
                   _exp(b_rates[-1] / p + rates[-1] * inv_q), per_n,
                   (("boundary_pressure_upper", bnd.upper), ("pressure_upper", p_up)))


def relaxed_bounds(m: PiecewiseMap, weight: Weight, t, p, n_max: int = 10) -> Tuple[Bracket, Bracket]:
    """The two coarser forms obtained by pulling sup norms out of the pressure.

    First: ``exp(D^b/p + ((p-1)/p) P*((p/(p-1)) log|g|)) * lim ||det|^(1/p) nu_n^t||^(1/n)``.
    Second: ``exp(D^b/p + ((p-1)/p) P*(0)) * lim ||g^(n) |det|^(1/p) nu_n^t||^(1/n)``.
    """
    check_parameters(weight, t, p)
    q = conjugate(p)
    inv_q = 1.0 / float(q)
    db = _log_db_curve(m, n_max)
    db_up = min(db)
    out = []
    for name, pres_pot, sup_pot in (
        ("relaxed_weight_pressure", PotentialSpec(weight, 0, math.inf, q),
         PotentialSpec(Weight.constant(1), t, _exact(p), 1)),
        ("relaxed_entropy", PotentialSpec.unit(), PotentialSpec(weight, t, _exact(p), 1)),
    ):
        _, p_up, rates = _pressure_bracket(m, pres_pot, n_max, measures=False)
        sups = _sup_curve(m, sup_pot, n_max)
        sup_up = min(sups)
        per_n = tuple(_exp(d / p + r * inv_q + u) for d, r, u in zip(db, rates, sups))
        out.append(Bracket(name, None, _exp(db_up / p + p_up * inv_q + sup_up),
                           _exp(rates[-1] * inv_q + sups[-1]), per_n,
                           (("db_rate_upper", db_up), ("pressure_upper", p_up),
                            ("sup_rate_upper", sup_up))))
    return out[0], out[1]


def one_dimensional_bound(m: PiecewiseMap, weight: Weight, t, p, n_max: int = 10) -> Bracket:
    """``exp(((p-1)/p) P*(0)) * lim ||g^(n) |DT^n|^(1/p - t)||^(1/n)`` for interval maps.

    The sup term is built from the cylinder slopes directly, so it is an
    independent evaluation of the second relaxed form when ``d = 1``.
    """
    if m.dimension != 1:
        raise UnsupportedGeometry("the one-dimensional form needs d = 1")
    check_parameters(weight, t, p)
    inv_q = float(p - 1) / float(p)
    expo = 1.0 / float(p) - float(t)
    _, p_up, rates = _pressure_bracket(m, PotentialSpec.unit(), n_max, measures=False)
    g_pot = PotentialSpec(weight)
    sups = []
    for n in range(1, n_max + 1):
        best = MINUS_INFINITY
        for c in enumerate_cylinders(m, n):
            lg = cylinder_sup(m, c, g_pot).log_upper
            if c.slope is not None:
                ld = log_abs(c.slope[0])
                val = lg + expo * ld
            else:
                lo, hi = log_derivative_range(m, c)
                val = lg + max(expo * lo, expo * hi)
            best = max(best, val)
        sups.append(best / n)
    sup_up = min(sups)
    per_n = tuple(_exp(r * inv_q + u) for r, u in zip(rates, sups))
    return Bracket("R_d1", None, _exp(p_up * inv_q + sup_up), _exp(rates[-1] * inv_q + sups[-1]),
                   per_n, (("entropy_upper", p_up), ("sup_rate_upper", sup_up)))


def end_complexity_bound(m: PiecewiseMap, weight: Weight, t, p, n_max: int = 10) -> Bracket:
    """``lim (D^b_n^(1/p) D^e_n^((p-1)/p) sup f_{n,t,p})^(1/n)`` as a per-depth curve.

    The sequence is not known to be submultiplicative, so ``upper`` is the
    depth-``n_max`` value and ``lower`` is left empty.
    """
    check_parameters(weight, t, p)
    pot = PotentialSpec(weight, t, _exact(p), 1)
    w = (float(p) - 1) / float(p)
    per_n = []
    for n in range(1, n_max + 1):
        db = log_abs(complexity_beginning(m, n))
        de = log_abs(complexity_end(m, n))
        sup = level_extremes(m, n, pot)[1]
        per_n.append(_exp((db / float(p) + w * de + sup) / n))
    return Bracket("R_end_complexity", None, per_n[-1], per_n[-1], tuple(per_n))


def variational_bound(m: PiecewiseMap, weight: Weight, t, p, q,
                      measures: Optional[Sequence[MeasureCandidate]] = None,
                      n_max: int = 10, k_max: int = 2, L_max: int = 6) -> Bracket:
    """``exp(D^b/p + max_mu {h/q + int log(|g||det|^(1/p)) dmu - t chi_mu})``.

    Candidates must be built for the potential ``(g |det|^(1/p))^q nu_n^(qt)``
    (the default when ``measures`` is ``None``); their objective divided by
    ``q`` is the bracketed term.  The relaxation
    ``exp(D^b/p) lim ||g^(n) |det|^(1/p+1/q) nu_n^t||^(1/n)`` is recorded in
    ``log_terms`` as ``relaxation_upper``.
    """
    check_parameters(weight, t, p)
    q = _exact(q)
    if not 1 <= q <= conjugate(p) * (1 + 1e-12):
        raise ParameterOutOfRange(f"q = {q} must lie in [1, p/(p-1)]")
    pot = PotentialSpec(weight, t, _exact(p), q)
    if measures is None:
        measures = measure_candidates(m, pot, k_max, L_max)
    measures = list(measures)
    if not measures:
        raise NoMeasures("variational bound needs at least one measure candidate")
    want = float(q) * float(t)
    for c in measures:
        if abs(c.nu_exponent - want) > 1e-12:
            raise ValueError("measure candidates were built for a different potential")
    best = max(c.value for c in measures) / float(q)
    db = _log_db_curve(m, n_max)
    db_up = min(db)
    # relaxation: sup of g |det|^(1/p) nu^t times sup of |det|^(1/q), cylinder by cylinder
    f_pot = PotentialSpec(weight, t, _exact(p), 1)
    det_pot = PotentialSpec(Weight.det_jacobian_power(1 / float(q)))
    relax = []
    for n in range(1, n_max + 1):
        best_n = MINUS_INFINITY
        for c in enumerate_cylinders(m, n):
            best_n = max(best_n, cylinder_sup(m, c, f_pot).log_upper
                         + cylinder_sup(m, c, det_pot).log_upper)
        relax.append(best_n / n)
    relax_up = min(relax)
    per_n = tuple(_exp(d / p + best) for d in db)
    return Bracket("R_t_p_q", _exp(best), _exp(db_up / p + best), _exp(best), per_n,
                   (("measure_term", best), ("db_rate_upper", db_up),
                    ("relaxation_upper", _exp(db_up / p + relax_up))))


def ly_coefficient(m: PiecewiseMap, weight: Weight, t, p, n: int) -> float:
    """``n (D^b_n)^(1/p) (sum sup f_{n,t,p}^(p/(p-1)))^((p-1)/p)``, universal constant omitted."""
    check_parameters(weight, t, p)
    pot = _bound_potential(weight, t, p)
    ls = level_sum(m, n, pot)
    db = complexity_beginning(m, n)
    return n * float(db) ** (1.0 / float(p)) * _exp(ls.log_upper / float(pot.q))


def ly_rate(m: PiecewiseMap, weight: Weight, t, p, n: int) -> float:
    """``ly_coefficient(n)^(1/n)``."""
    return ly_coefficient(m, weight, t, p, n) ** (1.0 / n)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    map_name: str
    weight: str
    t: float
    s: float
    p: float
    n_max: int
    r_t_p: Bracket
    r_t_s_p: Bracket
    r_simple: Tuple[Bracket, Bracket]
    r_end_complexity: Bracket
    r_variational: Dict[str, Bracket] = field(default_factory=dict)
    r_d1: Optional[Bracket] = None
    ly_coefficient_n: Optional[float] = None
    spectral_radius_lp_bound: Optional[Bracket] = None
    notes: Tuple[str, ...] = ()

    @property
    def improves_on_end_complexity(self) -> bool:
        return self.r_t_p.upper < self.r_end_complexity.value * (1 - 1e-12)

    @property
    def best_variational(self) -> Optional[Bracket]:
        if not self.r_variational:
            return None
        return min(self.r_variational.values(), key=lambda b: b.upper)

    def ordering(self) -> Dict[str, bool]:
        """Relations observed between the computed brackets."""
        out = {
            "R_t_p_upper<=end_complexity": self.r_t_p.upper <= self.r_end_complexity.value * (1 + 1e-12),
            "R_t_p_upper<=relaxed_weight_pressure": self.r_t_p.upper <= self.r_simple[0].upper * (1 + 1e-12),
            "R_t_p_upper<=relaxed_entropy": self.r_t_p.upper <= self.r_simple[1].upper * (1 + 1e-12),
        }
        bv = self.best_variational
        if bv is not None:
            out["variational_upper<=R_t_p_upper"] = bv.upper <= self.r_t_p.upper * (1 + 1e-9)
        return out

    def to_dict(self) -> dict:
        d = {
            "map": self.map_name,
            "weight": self.weight,
            "t": fmt_number(self.t),
            "s": fmt_number(self.s),
            "p": fmt_number(self.p),
            "n_max": self.n_max,
            "r_t_p": self.r_t_p.to_dict(),
            "r_t_s_p": self.r_t_s_p.to_dict(),
            "r_simple": [b.to_dict() for b in self.r_simple],
            "r_end_complexity": self.r_end_complexity.to_dict(),
            "r_variational": {k: v.to_dict() for k, v in self.r_variational.items()},
            "r_d1": None if self.r_d1 is None else self.r_d1.to_dict(),
            "ly_coefficient_n": None if self.ly_coefficient_n is None else fmt_number(self.ly_coefficient_n),
            "spectral_radius_lp_bound": None if self.spectral_radius_lp_bound is None
            else self.spectral_radius_lp_bound.to_dict(),
            "improves_on_end_complexity": self.improves_on_end_complexity,
            "ordering": self.ordering(),
            "notes": list(self.notes),
        }
        return d


def compare_bounds(m: PiecewiseMap, weight: Weight, t, p, s=0,
                   q_grid: Optional[Sequence] = None, n_max: int = 10,
                   k_max: int = 1, L_max: int = 4) -> BoundReport:
    """All bounds side by side for one parameter point."""
    check_parameters(weight, t, p, s)
    notes = []
    r = essential_bound(m, weight, t, p, n_max)
    rs = essential_bound_split(m, weight, t, s, p, n_max)
    simple = relaxed_bounds(m, weight, t, p, n_max)
    th = end_complexity_bound(m, weight, t, p, n_max)
    if q_grid is None:
        q_grid = (1, conjugate(p))
    var = {}
    for q in q_grid:
        try:
            var[fmt_number(q)] = variational_bound(m, weight, t, p, q, None, n_max, k_max, L_max)
        except NoMeasures:
            notes.append(f"no measure candidates for q = {fmt_number(q)}")
    d1 = one_dimensional_bound(m, weight, t, p, n_max) if m.dimension == 1 else None
    lp = spectral_radius_lp_bound(m, weight, p, n_max)
    ly = ly_coefficient(m, weight, t, p, n_max)
    return BoundReport(m.name, weight.kind, float(t), float(s), float(p), n_max, r, rs, simple, th,
                       var, d1, ly, lp, tuple(notes))


def bound_sweep_csv(reports: Sequence[BoundReport]) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["map", "t", "s", "p", "R_t_p_lower", "R_t_p_value", "R_t_p_upper",
                "R_t_s_p_upper", "end_complexity", "variational_best_upper", "improves_on_end_complexity"])
    for r in reports:
        bv = r.best_variational
        w.writerow([r.map_name, fmt_number(r.t), fmt_number(r.s), fmt_number(r.p),
                    "" if r.r_t_p.lower is None else fmt_number(r.r_t_p.lower),
                    fmt_number(r.r_t_p.value), fmt_number(r.r_t_p.upper),
                    fmt_number(r.r_t_s_p.upper), fmt_number(r.r_end_complexity.value),
                    "" if bv is None else fmt_number(bv.upper), r.improves_on_end_complexity])
    return buf.getvalue()
