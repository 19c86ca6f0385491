"""Symbolic model, invariant-measure candidates and the variational check.

Lower bounds on pressures only come from genuine invariant measures: Markov
measures on exactly presented subshifts of finite type and periodic orbits
whose fixed point is verified to lie in the cylinder closure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cylinders import (Cylinder, cylinder_inf, cylinder_of, enumerate_cylinders, smooth_profile)
from .errors import EmptyCylinder, NoMeasures, NotMarkov
from .maps import PiecewiseMap, Weight
from .numeric import EPS_GEOM, MINUS_INFINITY, fmt_number, log_abs
from .perron import perron
from .potential import PotentialSpec
from .pressure import (HOLDS, PressureEstimate, SmallBoundaryVerdict, boundary_pressure,
                       pressure_estimate, small_boundary_check)

TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Symbolic model
# ---------------------------------------------------------------------------


def is_markov(m: PiecewiseMap) -> bool:
    """Every branch image is, up to null sets, a union of pieces."""
    tol = 0 if m.exact else 1e-9
    for p in m.pieces:
        img = p.branch.image(p.region)
        for q in m.pieces:
            inter = img.intersect(q.region, m.eps)
            if inter is None:
                continue
            v = inter.volume()
            if abs(v - q.region.volume()) > tol:
                return False
    return True


@dataclass(frozen=True)
class SymbolicModel:
    """Graph on nonempty ``k``-words with an edge for each nonempty ``(k+1)``-word."""

    alphabet: Tuple[int, ...]
    k: int
    vertices: Tuple[Tuple[int, ...], ...]
    edges: Tuple[Tuple[int, int, Tuple[int, ...]], ...]
    markov_exact: bool

    def adjacency(self) -> np.ndarray:
        A = np.zeros((len(self.vertices), len(self.vertices)))
        for u, v, _ in self.edges:
            A[u, v] = 1.0
        return A

    def path_count(self, n: int) -> int:
        """Number of admissible ``n``-words according to the graph (exact integers)."""
        if n <= self.k:
            return len({v[:n] for v in self.vertices})
        counts = [1] * len(self.vertices)
        for _ in range(n - self.k):
            new = [0] * len(self.vertices)
            for u, v, _w in self.edges:
                new[u] += counts[v]
            counts = new
        return sum(counts)


def build_symbolic(m: PiecewiseMap, k: int = 1) -> SymbolicModel:
    if k < 1:
        raise ValueError("k must be >= 1")
    verts = tuple(c.word for c in enumerate_cylinders(m, k))
    index = {w: i for i, w in enumerate(verts)}
    edges = tuple((index[c.word[:k]], index[c.word[1:]], c.word)
                  for c in enumerate_cylinders(m, k + 1))
    return SymbolicModel(tuple(m.alphabet), k, verts, edges, is_markov(m))


def project(m: PiecewiseMap, word: Sequence[int]):
    """Closure of the cylinder of a finite word (the nested-closure projection)."""
    return cylinder_of(m, word).region


def symbolic_potential(m: PiecewiseMap, potential: PotentialSpec, word: Sequence[int]) -> float:
    """``log inf f_n`` over the cylinder of ``word`` with ``n = len(word)``."""
    return cylinder_inf(m, cylinder_of(m, word), potential).log_lower


# ---------------------------------------------------------------------------
# Measure candidates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureCandidate:
    """An invariant measure with the averages entering the objective.

    ``weight_integral`` is the average of ``e_g log|g| + e_det log|det DT|``;
    the objective is ``entropy + weight_integral - nu_exponent * lyapunov_smallest``.
    """

    kind: str
    entropy: float
    weight_integral: float
    lyapunov: Tuple[float, ...]
    log_det_integral: float
    nu_exponent: float
    order: int = 0
    word: Tuple[int, ...] = ()
    states: Tuple[Tuple[int, ...], ...] = ()
    transition: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    stationary: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    log_perron: Optional[float] = None

    @property
    def lyapunov_smallest(self) -> float:
        return min(self.lyapunov)

    def objective(self, t: Optional[float] = None) -> float:
        t = self.nu_exponent if t is None else t
        return self.entropy + self.weight_integral - (t * self.lyapunov_smallest if t else 0.0)

    @property
    def value(self) -> float:
        return self.objective()

    def describe(self) -> str:
        if self.kind == "PeriodicOrbit":
            return "periodic:" + "".join(str(i) for i in self.word)
        return f"markov:k={self.order}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "id": self.describe(), "entropy": fmt_number(self.entropy),
                "weight_integral": fmt_number(self.weight_integral),
                "lyapunov_smallest": fmt_number(self.lyapunov_smallest),
                "log_det_integral": fmt_number(self.log_det_integral),
                "objective": fmt_number(self.value)}


def _step_logs(m: PiecewiseMap, potential: PotentialSpec, cyl: Cylinder):
    """One-step lower bounds on the edge cylinder: ``(weight part, per-axis log|DT|, log|det|)``.

    The weight part is ``e_g log|g| + e_det log|det DT|`` at the first
    symbol, minimised over the cylinder closure.  Per-axis logs are returned
    as ``(lower, upper)`` pairs.
    """
    e_g, e_det, _ = (float(e) for e in potential.exponents)
    w = potential.weight
    i = cyl.word[0]
    piece = m.pieces[i]
    first = Cylinder((i,), cyl.region, cyl.image)
    if piece.branch.is_affine:
        logs = [log_abs(a) for a in piece.branch.slope]
        log_det = math.fsum(logs)
        if w.kind == "exp_affine":
            vals = [sum(c * float(x) for c, x in zip(w.coeffs[i], v)) + w.offsets[i]
                    for v in cyl.region.vertices()]
            g = min(vals)
        else:
            g = w.log_abs(piece, cyl.region.midpoint())
        part = (e_g * g if e_g else 0.0) + (e_det * log_det if e_det else 0.0)
        return part, [(v, v) for v in logs], (log_det, log_det)
    coef_logd = e_det
    coef_g = e_g
    shift = 0.0
    if w.kind == "det_jacobian_power":
        coef_logd += e_g * float(w.value)
        coef_g = 0.0
    elif w.kind == "constant":
        shift = e_g * log_abs(w.value) if e_g else 0.0
        coef_g = 0.0
    _, part_lo, _, _, _ = smooth_profile(m, first, coef_g, coef_logd, w)
    _, d_lo, _, d_hi, _ = smooth_profile(m, first, 0.0, 1.0)
    return part_lo + shift, [(d_lo, d_hi)], (d_lo, d_hi)


def _entropy(P: np.ndarray, pi: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0)), 0.0)
    return float(-(pi[:, None] * terms).sum())


def _markov_measure(M: np.ndarray):
    """Parry-type measure of the weighted matrix ``M``: transition, stationary, log rho."""
    pd = perron(M)
    r, l, rho = pd.right, pd.left, pd.rho
    support = (r > 1e-200) & (l > 1e-200)
    P = np.zeros_like(M)
    idx = np.where(support)[0]
    for u in idx:
        P[u, support] = M[u, support] * r[support] / (rho * r[u])
        s = P[u].sum()
        if s > 0:
            P[u] /= s
    pi = np.where(support, l * r, 0.0)
    pi = pi / pi.sum()
    return P, pi, math.log(rho), pd


def optimize_markov(m: PiecewiseMap, potential: PotentialSpec, k: int = 1,
                    model: Optional[SymbolicModel] = None,
                    require_exact: bool = True) -> MeasureCandidate:
    """Best order-``k`` Markov measure for ``h + int log f`` on the symbolic model.

    The additive part of ``log f`` is placed on edges; the ``nu_n`` term is
    handled per axis (``log nu_n = -min_k`` of the per-axis log slopes), and
    the candidate maximising the true objective is returned.
    """
    model = model or build_symbolic(m, k)
    if require_exact and not model.markov_exact:
        raise NotMarkov(f"{m.name}: branch images are not unions of pieces")
    e_nu = float(potential.exponents[2])
    d = m.dimension
    cyl_of = {c.word: c for c in enumerate_cylinders(m, model.k + 1)}
    nv = len(model.vertices)
    part = np.full((nv, nv), -np.inf)
    axis_lo = np.zeros((d, nv, nv))
    axis_hi = np.zeros((d, nv, nv))
    det_lo = np.zeros((nv, nv))
    for u, v, word in model.edges:
        p, axes, (dl, dh) = _step_logs(m, potential, cyl_of[word])
        part[u, v] = p
        for a, (lo, hi) in enumerate(axes):
            axis_lo[a, u, v], axis_hi[a, u, v] = lo, hi
        det_lo[u, v] = dl
    best = None
    mask = np.isfinite(part)
    for a in range(d if e_nu else 1):
        phi = np.where(mask, part - e_nu * axis_hi[a], -np.inf)
        shift = float(phi[mask].max())
        M = np.where(mask, np.exp(phi - shift), 0.0)
        P, pi, log_rho, pd = _markov_measure(M)
        flow = pi[:, None] * P
        h = _entropy(P, pi)
        wint = float((flow * np.where(mask, part, 0.0)).sum())
        lyap = tuple(float((flow * axis_lo[b]).sum()) for b in range(d))
        # the nu term needs an upper bound on each exponent for a lower objective
        lyap_hi = tuple(float((flow * axis_hi[b]).sum()) for b in range(d))
        ldet = float((flow * det_lo).sum())
        cand = MeasureCandidate("MarkovChain", h, wint, lyap_hi if e_nu else lyap, ldet, e_nu,
                                order=model.k, states=model.vertices, transition=P,
                                stationary=pi, log_perron=log_rho + shift)
        if best is None or cand.value > best.value:
            best = cand
    return best


def _canonical(word: Tuple[int, ...]) -> bool:
    """Primitive and the lexicographically least rotation."""
    L = len(word)
    rots = [word[i:] + word[:i] for i in range(L)]
    if any(word == rots[i] for i in range(1, L)):
        return False
    return word == min(rots)


def _fixed_point(m: PiecewiseMap, cyl: Cylinder):
    if cyl.slope is not None:
        return tuple(b / (1 - a) for a, b in zip(cyl.slope, cyl.offset))
    x = float(cyl.region.midpoint()[0])
    for _ in range(200):
        y = x
        for i in reversed(cyl.word):
            piece = m.pieces[i]
            lo, hi = piece.branch.image(piece.region).lo[0], piece.branch.image(piece.region).hi[0]
            y = piece.branch.inverse_scalar(min(max(y, lo), hi), piece.region)
        if abs(y - x) < 1e-15:
            x = y
            break
        x = y
    return (x,)


def enumerate_periodic(m: PiecewiseMap, L_max: int,
                       potential: Optional[PotentialSpec] = None) -> List[MeasureCandidate]:
    """Periodic-orbit measures for every admissible primitive word up to length ``L_max``."""
    potential = potential or PotentialSpec.unit()
    e_g, e_det, e_nu = (float(e) for e in potential.exponents)
    w = potential.weight
    eps = m.eps if m.exact else EPS_GEOM * 10
    out = []
    for L in range(1, L_max + 1):
        for cyl in enumerate_cylinders(m, L):
            if not _canonical(cyl.word):
                continue
            x = _fixed_point(m, cyl)
            if not cyl.region.contains_closed(x, eps):
                continue
            logs = [0.0] * m.dimension
            gsum = 0.0
            det = 0.0
            y = x
            for i in cyl.word:
                piece = m.pieces[i]
                jac = piece.branch.jacobian(y)
                for a, v in enumerate(jac):
                    logs[a] += log_abs(v)
                ld = math.fsum(log_abs(v) for v in jac)
                det += ld
                if e_g:
                    gsum += e_g * w.log_abs(piece, y)
                if e_det:
                    gsum += e_det * ld
                y = piece.branch(y)
            out.append(MeasureCandidate("PeriodicOrbit", 0.0, gsum / L,
                                        tuple(v / L for v in logs), det / L, e_nu, word=cyl.word))
    return out


def markov_candidates(m: PiecewiseMap, potential: PotentialSpec, k_max: int) -> List[MeasureCandidate]:
    if not m.is_affine and m.dimension > 1:
        return []
    out = []
    for k in range(1, k_max + 1):
        model = build_symbolic(m, k)
        if not model.markov_exact:
            return []
        out.append(optimize_markov(m, potential, k, model))
    return out


def measure_candidates(m: PiecewiseMap, potential: PotentialSpec, k_max: int = 2,
                       L_max: int = 6) -> List[MeasureCandidate]:
    return markov_candidates(m, potential, k_max) + enumerate_periodic(m, L_max, potential)


def attach_measure_bounds(m: PiecewiseMap, potential: PotentialSpec, estimate: PressureEstimate,
                          k_max: int = 2, L_max: int = 6) -> PressureEstimate:
    """Fill ``measure_lower`` of a full-space estimate with the best candidate objective."""
    cands = measure_candidates(m, potential, k_max, L_max)
    if not cands:
        return estimate
    return estimate.with_measure_lower(max(c.value for c in cands))


def transfer_pressure_upper(m: PiecewiseMap, potential: PotentialSpec) -> Optional[float]:
    """Collatz-Wielandt upper bound on the full-space pressure for Markov maps
    with locally constant data; ``None`` when that structure is absent."""
    if not m.is_affine or not potential.weight.locally_constant or not is_markov(m):
        return None
    model = build_symbolic(m, 1)
    e_g, e_det, e_nu = (float(e) for e in potential.exponents)
    d = m.dimension
    nv = len(model.vertices)
    best = MINUS_INFINITY
    for a in range(d if e_nu else 1):
        phi = np.full((nv, nv), -np.inf)
        for u, v, word in model.edges:
            piece = m.pieces[word[0]]
            logs = [log_abs(s) for s in piece.branch.slope]
            val = 0.0
            if e_g:
                val += e_g * potential.weight.log_abs(piece, piece.region.midpoint())
            if e_det:
                val += e_det * math.fsum(logs)
            if e_nu:
                val -= e_nu * logs[a]
            phi[u, v] = val
        mask = np.isfinite(phi)
        if not mask.any():
            continue
        shift = float(phi[mask].max())
        M = np.where(mask, np.exp(phi - shift), 0.0)
        pd = perron(M)
        if pd.upper <= 0:
            continue
        best = max(best, math.log(pd.upper) + shift)
    return best


# ---------------------------------------------------------------------------
# Variational and Ruelle checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuelleCheck:
    max_objective: float
    candidate: str
    passed: bool


def ruelle_check(m: PiecewiseMap, k_max: int = 2, L_max: int = 6,
                 extra: Sequence[MeasureCandidate] = (), tol: float = TOLERANCE) -> RuelleCheck:
    """``max_mu (h_mu - int log|det DT| dmu)`` over candidates; passes when ``<= tol``."""
    jac = PotentialSpec(Weight.det_jacobian_power(-1))
    cands = list(measure_candidates(m, jac, k_max, L_max)) + list(extra)
    if not cands:
        raise NoMeasures("no invariant-measure candidates for the Ruelle check")
    vals = [(c.entropy - c.log_det_integral, c.describe()) for c in cands]
    best = max(vals)
    return RuelleCheck(best[0], best[1], best[0] <= tol)


@dataclass(frozen=True)
class VariationalReport:
    lower: float
    upper: float
    gap: float
    best: MeasureCandidate
    ties: Tuple[MeasureCandidate, ...]
    boundary: SmallBoundaryVerdict
    ruelle: RuelleCheck
    full: PressureEstimate
    boundary_estimate: PressureEstimate
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.gap <= self.tolerance and self.boundary.verdict == HOLDS

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "lower": fmt_number(self.lower),
            "upper": fmt_number(self.upper),
            "gap": fmt_number(self.gap),
            "tolerance": fmt_number(self.tolerance),
            "best": self.best.to_dict(),
            "ties": [c.describe() for c in self.ties],
            "small_boundary": self.boundary.to_dict(),
            "ruelle": {"max_objective": fmt_number(self.ruelle.max_objective),
                       "candidate": self.ruelle.candidate, "passed": self.ruelle.passed},
            "pressure": self.full.summary(),
            "boundary_pressure": self.boundary_estimate.summary(),
        }


def variational_check(m: PiecewiseMap, potential: PotentialSpec, k_max: int = 2, L_max: int = 6,
                      n_max: int = 8, tol: float = TOLERANCE, K: int = 0) -> VariationalReport:
    """Best measure objective against the pressure upper bracket, with the
    small-boundary verdict and the Ruelle inequality check."""
    cands = measure_candidates(m, potential, k_max, L_max)
    if not cands:
        raise NoMeasures(f"{m.name}: no invariant-measure candidates")
    best = max(cands, key=lambda c: c.value)
    ties = tuple(c for c in cands if c.value >= best.value - TOLERANCE)
    full = pressure_estimate(m, potential, None, n_max).with_measure_lower(best.value)
    bnd = boundary_pressure(m, potential, K, n_max)
    verdict = small_boundary_check(full, bnd)
    ruelle = ruelle_check(m, k_max, L_max)
    gap = full.upper - best.value
    return VariationalReport(best.value, full.upper, gap, best, ties, verdict, ruelle, full, bnd, tol)
