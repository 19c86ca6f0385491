"""Cylinder enumeration, suprema of potentials over cylinders, boundary contact.

Cylinders are built breadth first: the depth ``n + 1`` cylinder ``w j`` is the
pullback of ``T^n(O_w) & O_j`` through the depth ``n`` branch composition.  An
intersection only counts when it has positive volume, so cylinders form a
partition modulo Lebesgue-null sets.
"""

from __future__ import annotations

import csv
import io
import math
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from gmpy2 import mpq

from .errors import DepthExplosion, EmptyCylinder, InvalidMap
from .maps import AffineBranch, Box, PiecewiseMap, Weight
from .numeric import EPS_GEOM, Number, as_integer, fmt_number, is_exact, log_abs
from .potential import PotentialSpec

#: Default cap on the number of cylinders materialised at one depth.
DEFAULT_BUDGET = 300_000

#: Grid refinement stops once the certification correction is below
#: ``SUP_TOLERANCE * n`` or the grid reaches ``MAX_CELLS`` cells.
SUP_TOLERANCE = 1e-9
MAX_CELLS = 1 << 14


@dataclass(frozen=True)
class Cylinder:
    """Nonempty ``n``-cylinder with its region and its image ``T^n(region)``.

    ``slope``/``offset`` hold the composed diagonal affine map ``T^n`` on the
    cylinder when every branch along the word is affine.
    """

    word: Tuple[int, ...]
    region: Box
    image: Box
    slope: Optional[Tuple[Number, ...]] = None
    offset: Optional[Tuple[Number, ...]] = None

    @property
    def depth(self) -> int:
        return len(self.word)

    @property
    def linearization(self) -> Optional[AffineBranch]:
        if self.slope is None:
            return None
        return AffineBranch(self.slope, self.offset)

    def label(self) -> str:
        return "-".join(str(i) for i in self.word)


def _first_level(m: PiecewiseMap) -> List[Cylinder]:
    out = []
    for p in m.pieces:
        b = p.branch
        slope = b.slope if b.is_affine else None
        offset = b.offset if b.is_affine else None
        out.append(Cylinder((p.index,), p.region, b.image(p.region), slope, offset))
    return out


def _pull_back(m: PiecewiseMap, word: Sequence[int], box: Box) -> Box:
    for i in reversed(word):
        piece = m.pieces[i]
        box = piece.branch.preimage(box, piece.region)
    return box


def extend(m: PiecewiseMap, cyl: Cylinder, j: int) -> Optional[Cylinder]:
    """The cylinder ``cyl.word + (j,)`` or ``None`` when it is empty."""
    eps = m.eps
    piece = m.pieces[j]
    inter = cyl.image.intersect(piece.region, eps)
    if inter is None:
        return None
    if cyl.slope is not None and piece.branch.is_affine:
        lin = AffineBranch(cyl.slope, cyl.offset)
        region = lin.preimage(inter)
        comp = piece.branch.compose_after(lin)
        slope, offset = comp.slope, comp.offset
    else:
        region = _pull_back(m, cyl.word, inter)
        slope = offset = None
    if any(w <= eps for w in region.widths()):
        return None
    return Cylinder(cyl.word + (j,), region, piece.branch.image(inter), slope, offset)


_LEVELS: "weakref.WeakKeyDictionary[PiecewiseMap, list]" = weakref.WeakKeyDictionary()
_RAW: "weakref.WeakKeyDictionary[PiecewiseMap, list]" = weakref.WeakKeyDictionary()


_EXTRA_CACHES: list = []


def register_cache(cache) -> None:
    """Have :func:`clear_cache` also empty a per-map cache kept elsewhere."""
    _EXTRA_CACHES.append(cache)


def clear_cache() -> None:
    _LEVELS.clear()
    _RAW.clear()
    for c in _EXTRA_CACHES:
        c.clear()


def _frac(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def _next_level_1d_exact(m: PiecewiseMap, n: int, budget: int) -> List[Cylinder]:
    """Depth ``n`` from depth ``n - 1`` for rational interval maps.

    Same construction as :func:`extend`, run on GMP rationals since Python
    ``Fraction`` arithmetic dominates the cost at large depth.
    """
    pieces = [(mpq(p.region.lo[0]), mpq(p.region.hi[0]), mpq(p.branch.slope[0]),
               mpq(p.branch.offset[0])) for p in m.pieces]
    raw = _RAW.get(m)
    if raw is None or raw[0] != n - 1:
        prev = _LEVELS[m][n - 2]
        rows = [(c.word, mpq(c.image.lo[0]), mpq(c.image.hi[0]), mpq(c.slope[0]),
                 mpq(c.offset[0])) for c in prev]
    else:
        rows = raw[1]
    nxt = []
    for word, ilo, ihi, a, b in rows:
        for j, (lo, hi, aj, bj) in enumerate(pieces):
            l = ilo if ilo > lo else lo
            h = ihi if ihi < hi else hi
            if h <= l:
                continue
            nxt.append((word + (j,), l, h, a, b, aj, bj))
        if len(nxt) > budget:
            raise DepthExplosion(n, len(nxt), budget)
    cyls = []
    new_rows = []
    for word, l, h, a, b, aj, bj in nxt:
        r0, r1 = (l - b) / a, (h - b) / a
        if a < 0:
            r0, r1 = r1, r0
        y0, y1 = aj * l + bj, aj * h + bj
        if aj < 0:
            y0, y1 = y1, y0
        slope, offset = aj * a, aj * b + bj
        new_rows.append((word, y0, y1, slope, offset))
        cyls.append(Cylinder(word, Box((_frac(r0),), (_frac(r1),)), Box((_frac(y0),), (_frac(y1),)),
                             (_frac(slope),), (_frac(offset),)))
    _RAW[m] = (n, new_rows)
    return cyls


def enumerate_cylinders(m: PiecewiseMap, n: int, budget: int = DEFAULT_BUDGET) -> List[Cylinder]:
    """All nonempty ``n``-cylinders in lexicographic word order.

    Levels are cached per map object, so repeated calls are cheap.
    """
    if n < 1:
        raise ValueError("depth must be at least 1")
    levels = _LEVELS.get(m)
    if levels is None:
        levels = [_first_level(m)]
        _LEVELS[m] = levels
    if m.factors is not None and len(levels) < n:
        bound = math.prod(len(enumerate_cylinders(f, n, budget)) for f in m.factors)
        if bound > budget:
            raise DepthExplosion(n, bound, budget)
    fast = m.dimension == 1 and m.exact
    while len(levels) < n:
        if fast:
            levels.append(_next_level_1d_exact(m, len(levels) + 1, budget))
            continue
        nxt = []
        for c in levels[-1]:
            for j in m.alphabet:
                e = extend(m, c, j)
                if e is not None:
                    nxt.append(e)
            if len(nxt) > budget:
                raise DepthExplosion(len(levels) + 1, len(nxt), budget)
        levels.append(nxt)
    return levels[n - 1]


def cylinder_count(m: PiecewiseMap, n: int, budget: int = DEFAULT_BUDGET) -> int:
    """Number of nonempty ``n``-cylinders; products multiply factor counts."""
    if m.factors is not None:
        return math.prod(cylinder_count(f, n, budget) for f in m.factors)
    return len(enumerate_cylinders(m, n, budget))


def cylinder_of(m: PiecewiseMap, word: Sequence[int]) -> Cylinder:
    """The cylinder of one word, propagated directly."""
    word = tuple(word)
    if not word:
        raise EmptyCylinder("empty word")
    if any(i not in m.alphabet for i in word):
        raise EmptyCylinder(f"word {word} uses symbols outside the alphabet")
    cyl = _first_level(m)[word[0]]
    for j in word[1:]:
        cyl = extend(m, cyl, j)
        if cyl is None:
            raise EmptyCylinder(f"cylinder of {word} is empty")
    return cyl


# ---------------------------------------------------------------------------
# Sup and inf of potentials over cylinders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValueBracket:
    """Enclosure ``[exp(log_lower), exp(log_upper)]`` of an extremum.

    For a sup the upper end is certified and the lower end is a sampled value
    (and vice versa for an inf).  ``exact`` holds the rational value when the
    integrand is constant on the cylinder and all data is rational.
    """

    log_lower: float
    log_upper: float
    exact: Optional[Fraction] = None

    @property
    def upper(self) -> Number:
        return self.exact if self.exact is not None else math.exp(self.log_upper)

    @property
    def lower(self) -> Number:
        return self.exact if self.exact is not None else math.exp(self.log_lower)

    @property
    def is_point(self) -> bool:
        return self.exact is not None or self.log_lower == self.log_upper


def _scaled(e: Number, logv: float) -> float:
    """``e * logv`` with ``0 * (-inf) = 0``."""
    if e == 0:
        return 0.0
    return float(e) * logv


def _exp_affine_form(m: PiecewiseMap, weight: Weight, cyl: Cylinder):
    """``log|g^(n)|(x) = alpha . x + beta`` on an affine cylinder."""
    d = m.dimension
    alpha = np.zeros(d)
    beta = 0.0
    s = np.ones(d)
    o = np.zeros(d)
    for i in cyl.word:
        c = np.asarray(weight.coeffs[i])
        alpha += c * s
        beta += float(c @ o) + weight.offsets[i]
        br = m.pieces[i].branch
        a = np.array([float(v) for v in br.slope])
        b = np.array([float(v) for v in br.offset])
        s, o = a * s, a * o + b
    return alpha, beta


def _affine_log_g(m, weight, cyl, log_det):
    """``(inf, sup)`` of ``log|g^(n)|`` over an affine cylinder."""
    kind = weight.kind
    if kind == "constant":
        v = len(cyl.word) * log_abs(weight.value)
        return v, v
    if kind == "det_jacobian_power":
        v = _scaled(weight.value, log_det)
        return v, v
    if kind == "piecewise_constant":
        v = math.fsum(log_abs(weight.values[i]) for i in cyl.word)
        return v, v
    alpha, beta = _exp_affine_form(m, weight, cyl)
    vals = [float(alpha @ np.array([float(c) for c in v])) + beta
            for v in cyl.region.vertices()]
    return min(vals), max(vals)


def _exact_affine_value(m, pot: PotentialSpec, cyl) -> Optional[Fraction]:
    if not m.exact:
        return None
    w = pot.weight
    e_g, e_det, e_nu = pot.exponents
    if as_integer(e_nu) is None or (w.kind != "det_jacobian_power" and pot.integral_exponents() is None):
        return None
    det = abs(math.prod(cyl.slope, start=Fraction(1)))
    nu = 1 / min(abs(a) for a in cyl.slope)
    if w.kind == "det_jacobian_power":
        if not is_exact(w.value):
            return None
        det_exp = as_integer(e_g * w.value + e_det)
        g_part = Fraction(1)
    else:
        det_exp = as_integer(e_det)
        vals = [w.exact_piece_value(m.pieces[i]) for i in cyl.word]
        if w.kind == "exp_affine" or any(v is None for v in vals):
            return None
        ge = as_integer(e_g)
        if ge is None:
            return None
        g = math.prod(vals, start=Fraction(1))
        if g == 0:
            return Fraction(0) if ge > 0 else None
        g_part = g ** ge
    nu_exp = as_integer(e_nu)
    if det_exp is None or nu_exp is None:
        return None
    return g_part * det ** det_exp * nu ** nu_exp


def _affine_bracket(m, pot: PotentialSpec, cyl: Cylinder, want_sup: bool) -> ValueBracket:
    e_g, e_det, e_nu = pot.exponents
    logs = [log_abs(a) for a in cyl.slope]
    log_det = math.fsum(logs)
    log_nu = -min(logs)
    g_lo, g_hi = _affine_log_g(m, pot.weight, cyl, log_det)
    rest = _scaled(e_det, log_det) + _scaled(e_nu, log_nu)
    g_val = g_hi if want_sup else g_lo
    v = _scaled(e_g, g_val) + rest
    exact = _exact_affine_value(m, pot, cyl)
    return ValueBracket(v, v, exact)


def _branch_values(branch, xs: np.ndarray) -> np.ndarray:
    if branch.is_affine:
        return float(branch.slope[0]) * xs + float(branch.offset[0])
    return branch.value_array(xs)


def _branch_log_derivative(branch, xs: np.ndarray) -> np.ndarray:
    if branch.is_affine:
        return np.full_like(xs, log_abs(branch.slope[0]))
    with np.errstate(divide="ignore"):
        return np.log(np.abs(branch.derivative_array(xs)))


def _weight_log_array(weight: Weight, piece, xs: np.ndarray) -> np.ndarray:
    kind = weight.kind
    if kind == "constant":
        return np.full_like(xs, log_abs(weight.value))
    if kind == "piecewise_constant":
        return np.full_like(xs, log_abs(weight.values[piece.index]))
    if kind == "det_jacobian_power":
        return float(weight.value) * _branch_log_derivative(piece.branch, xs)
    return weight.coeffs[piece.index][0] * xs + weight.offsets[piece.index]


def smooth_profile(m: PiecewiseMap, cyl: Cylinder, coef_g: float, coef_logd: float,
                   weight: Optional[Weight] = None, domain: Optional[Box] = None,
                   tol: Optional[float] = None, max_cells: int = MAX_CELLS):
    """Certified range of ``sum_k coef_g log|g|(T^k x) + coef_logd log|T'|(T^k x)``.

    One-dimensional only.  The cylinder is cut into a uniform grid and each
    cell gets the correction ``sum_k Lip_k |T^k(right) - T^k(left)|``, which
    bounds the oscillation because every ``T^k`` is monotone on the cylinder.

    Returns ``(inf_lower, inf_upper, sup_lower, sup_upper, correction)``:
    the certified ends are ``inf_lower`` and ``sup_upper``.
    """
    box = domain or cyl.region
    a, b = float(box.lo[0]), float(box.hi[0])
    n = len(cyl.word)
    tol = SUP_TOLERANCE * n if tol is None else tol
    lips = []
    for i in cyl.word:
        piece = m.pieces[i]
        lip = 0.0
        if coef_g and weight is not None:
            lip += abs(coef_g) * weight.log_lipschitz(piece)
        if coef_logd:
            lip += abs(coef_logd) * piece.branch.log_derivative_lipschitz(piece.extended_region)
        lips.append(lip)
    cells = 64
    while True:
        xs = np.linspace(a, b, cells + 1)
        vals = np.zeros_like(xs)
        var = np.zeros(cells)
        y = xs
        for k, i in enumerate(cyl.word):
            piece = m.pieces[i]
            if coef_g and weight is not None:
                vals = vals + coef_g * _weight_log_array(weight, piece, y)
            if coef_logd:
                vals = vals + coef_logd * _branch_log_derivative(piece.branch, y)
            if lips[k]:
                var = var + lips[k] * np.abs(np.diff(y))
            y = _branch_values(piece.branch, y)
        correction = float(var.max()) if cells else 0.0
        if correction <= tol or cells >= max_cells or not all(map(math.isfinite, lips)):
            break
        cells *= 4
    left, right = vals[:-1], vals[1:]
    sup_upper = float(np.max(np.minimum(left, right) + var))
    inf_lower = float(np.min(np.maximum(left, right) - var))
    return float(vals.min()), inf_lower, float(vals.max()), sup_upper, correction


def _smooth_bracket(m, pot: PotentialSpec, cyl: Cylinder, want_sup: bool) -> ValueBracket:
    e_g, e_det, e_nu = (float(e) for e in pot.exponents)
    w = pot.weight
    shift = 0.0
    coef_g = e_g
    if w.kind == "constant":
        shift = _scaled(e_g, len(cyl.word) * log_abs(w.value))
        coef_g = 0.0
    coef_logd = e_det - e_nu
    if w.kind == "det_jacobian_power":
        coef_logd += e_g * float(w.value)
        coef_g = 0.0
    inf_up, inf_lo, sup_lo, sup_up, _ = smooth_profile(m, cyl, coef_g, coef_logd, w)
    if want_sup:
        return ValueBracket(sup_lo + shift, sup_up + shift)
    return ValueBracket(inf_lo + shift, inf_up + shift)


def cylinder_sup(m: PiecewiseMap, cyl: Cylinder, potential: PotentialSpec) -> ValueBracket:
    """``sup`` of ``f_n`` over the closure of the cylinder."""
    if cyl.slope is not None:
        return _affine_bracket(m, potential, cyl, True)
    return _smooth_bracket(m, potential, cyl, True)


def cylinder_inf(m: PiecewiseMap, cyl: Cylinder, potential: PotentialSpec) -> ValueBracket:
    """``inf`` of ``f_n`` over the closure of the cylinder."""
    if cyl.slope is not None:
        return _affine_bracket(m, potential, cyl, False)
    return _smooth_bracket(m, potential, cyl, False)


def log_derivative_range(m: PiecewiseMap, cyl: Cylinder, extended: bool = False):
    """Certified ``(min, max)`` of ``log`` of the smallest expansion of ``DT^n``.

    With ``extended`` the cylinder is inflated by the extension margin of its
    first piece; branch formulas are evaluated past the piece boundaries.
    """
    if cyl.slope is not None:
        v = min(log_abs(a) for a in cyl.slope)
        return v, v
    domain = None
    if extended:
        piece = m.pieces[cyl.word[0]]
        domain = cyl.region.inflate(piece.extension_margin)
        ext = piece.extended_region
        domain = Box((max(domain.lo[0], ext.lo[0]),), (min(domain.hi[0], ext.hi[0]),))
    _, inf_lo, _, sup_up, _ = smooth_profile(m, cyl, 0.0, 1.0, domain=domain)
    return inf_lo, sup_up


# ---------------------------------------------------------------------------
# Boundary sets
# ---------------------------------------------------------------------------


def _closed_intersection(a: Box, b: Box, eps: float) -> Optional[Box]:
    lo = tuple(max(x, y) for x, y in zip(a.lo, b.lo))
    hi = tuple(min(x, y) for x, y in zip(a.hi, b.hi))
    if all(l <= h + eps for l, h in zip(lo, hi)):
        return Box(lo, tuple(max(l, h) for l, h in zip(lo, hi)))
    return None


def _face_key(face: Box, exact: bool):
    if exact:
        return face.lo, face.hi
    return tuple(round(float(v), 11) for v in face.lo + face.hi)


@dataclass(frozen=True)
class BoundarySet:
    """Closed faces of ``S^(K) = union_{k<=K} T^-k (piece boundaries)``.

    ``layer_sizes[k]`` is the number of faces in the union up to depth ``k``,
    which is nondecreasing in ``k``.
    """

    faces: Tuple[Box, ...]
    pullback_depth: int
    layer_sizes: Tuple[int, ...]

    def meets(self, region: Box, eps: float = 0) -> bool:
        return any(f.meets_closed(region, eps) for f in self.faces)

    @property
    def descriptor(self) -> str:
        return "boundary" if self.pullback_depth == 0 else f"singular:{self.pullback_depth}"


def boundary_set(m: PiecewiseMap, K: int = 0) -> BoundarySet:
    """Piece boundaries pulled back ``K`` times through every branch."""
    if K < 0:
        raise ValueError("pullback depth must be >= 0")
    eps = m.eps
    faces = list(m.boundary_faces())
    seen = {_face_key(f, m.exact) for f in faces}
    layer = faces
    sizes = [len(faces)]
    for _ in range(K):
        new = []
        for f in layer:
            for piece in m.pieces:
                img = piece.branch.image(piece.region)
                ci = _closed_intersection(f, img, eps)
                if ci is None:
                    continue
                pre = piece.branch.preimage(ci, piece.region)
                pre = _closed_intersection(pre, piece.region, eps)
                if pre is None:
                    continue
                key = _face_key(pre, m.exact)
                if key not in seen:
                    seen.add(key)
                    new.append(pre)
        faces.extend(new)
        layer = new
        sizes.append(len(faces))
    return BoundarySet(tuple(faces), K, tuple(sizes))


Target = Union[None, str, BoundarySet, Box]


def touches(m: PiecewiseMap, cyl: Cylinder, target: Target) -> bool:
    """Whether the cylinder closure meets the target set (``None`` is the whole space)."""
    if target is None or target == "full":
        return True
    eps = m.eps
    if isinstance(target, BoundarySet):
        return target.meets(cyl.region, eps)
    if isinstance(target, Box):
        return target.meets_closed(cyl.region, eps)
    raise ValueError(f"unsupported target {target!r}")


def resolve_target(m: PiecewiseMap, spec) -> Target:
    """Turn ``"full" | "boundary" | "singular:K" | Box | BoundarySet`` into a target."""
    if spec is None or isinstance(spec, (BoundarySet, Box)):
        return spec
    if spec == "full":
        return None
    if spec == "boundary":
        return boundary_set(m, 0)
    if isinstance(spec, str) and spec.startswith("singular"):
        _, _, k = spec.partition(":")
        return boundary_set(m, int(k) if k else 3)
    raise ValueError(f"unknown set descriptor {spec!r}")


def target_descriptor(target: Target) -> str:
    if target is None:
        return "full"
    if isinstance(target, BoundarySet):
        return target.descriptor
    return "region:" + ",".join(f"[{fmt_number(l, 12)},{fmt_number(h, 12)}]"
                                for l, h in zip(target.lo, target.hi))


def cylinders_meeting(m: PiecewiseMap, n: int, target: Target = None,
                      budget: int = DEFAULT_BUDGET) -> List[Cylinder]:
    """Depth ``n`` cylinders whose closure meets ``target``."""
    target = resolve_target(m, target) if isinstance(target, str) else target
    return [c for c in enumerate_cylinders(m, n, budget) if touches(m, c, target)]


def cylinders_csv(m: PiecewiseMap, cyls: Iterable[Cylinder], potential: PotentialSpec = None,
                  target: Target = None) -> str:
    """CSV dump: word, region bounds, sup of the potential, boundary flag."""
    potential = potential or PotentialSpec.unit()
    if target is None:
        target = boundary_set(m, 0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = m.dimension
    w.writerow(["word"] + [f"lo{k}" for k in range(d)] + [f"hi{k}" for k in range(d)]
               + ["sup", "touches_boundary"])
    for c in cyls:
        sup = cylinder_sup(m, c, potential)
        w.writerow([c.label()] + [fmt_number(v) for v in c.region.lo]
                   + [fmt_number(v) for v in c.region.hi]
                   + [fmt_number(sup.upper), int(touches(m, c, target))])
    return buf.getvalue()
