"""Piecewise expanding maps, piecewise weights and pointwise expansion data.

Maps live on a box ``M`` (an interval when ``d = 1``).  Every piece is an open
axis-aligned box carrying a branch that extends to a neighbourhood of its
closure.  Branches are diagonal affine maps in any dimension, or smooth
monotone maps from a small catalog in dimension one.

Rational input data stays rational: region endpoints, slopes and offsets are
:class:`fractions.Fraction` and every derived geometric quantity is exact.
Float data is handled with the tolerance :data:`~pwthermo.numeric.EPS_GEOM`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import EmptyCylinder, InvalidMap, NoPiece, UnsupportedGeometry, WordMismatch
from .numeric import EPS_GEOM, Number, all_exact, is_exact, log_abs, parse_number

Point = Tuple[Number, ...]


def _point(x) -> Point:
    if isinstance(x, (tuple, list)):
        return tuple(x)
    return (x,)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; an interval when one-dimensional."""

    lo: Point
    hi: Point

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def widths(self):
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    def volume(self) -> Number:
        v = 1
        for w in self.widths():
            v = v * w
        return v

    def diameter(self) -> float:
        return math.sqrt(sum(float(w) ** 2 for w in self.widths()))

    def contains_closed(self, x: Point, eps: float = 0) -> bool:
        return all(l - eps <= c <= h + eps for l, c, h in zip(self.lo, x, self.hi))

    def on_boundary(self, x: Point, eps: float = 0) -> bool:
        if not self.contains_closed(x, eps):
            return False
        return any(abs(c - l) <= eps or abs(c - h) <= eps
                   for l, c, h in zip(self.lo, x, self.hi))

    def meets_closed(self, other: "Box", eps: float = 0) -> bool:
        """Closures intersect."""
        return all(a_lo <= b_hi + eps and b_lo <= a_hi + eps
                   for a_lo, a_hi, b_lo, b_hi in zip(self.lo, self.hi, other.lo, other.hi))

    def intersect(self, other: "Box", eps: float = 0) -> Optional["Box"]:
        """Open intersection; ``None`` unless every side exceeds ``eps``."""
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if all(h - l > eps for l, h in zip(lo, hi)):
            return Box(lo, hi)
        return None

    def inflate(self, margin: Number) -> "Box":
        if not margin:
            return self
        return Box(tuple(l - margin for l in self.lo), tuple(h + margin for h in self.hi))

    def vertices(self):
        corners = [()]
        for l, h in zip(self.lo, self.hi):
            corners = [c + (v,) for c in corners for v in ((l,) if l == h else (l, h))]
        return corners

    def midpoint(self) -> Point:
        return tuple((l + h) / 2 for l, h in zip(self.lo, self.hi))


# ---------------------------------------------------------------------------
# Branches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineBranch:
    """Diagonal affine branch ``x -> slope * x + offset`` (coordinatewise)."""

    slope: Point
    offset: Point

    is_affine = True

    def __post_init__(self):
        if len(self.slope) != len(self.offset):
            raise InvalidMap("slope and offset dimensions differ")
        if any(a == 0 for a in self.slope):
            raise InvalidMap("affine branch must have nonzero slopes")

    def __call__(self, x: Point) -> Point:
        return tuple(a * c + b for a, c, b in zip(self.slope, x, self.offset))

    def inverse(self, y: Point) -> Point:
        return tuple((c - b) / a for a, c, b in zip(self.slope, y, self.offset))

    def jacobian(self, x: Point = None) -> Point:
        return self.slope

    def image(self, box: Box) -> Box:
        p, q = self(box.lo), self(box.hi)
        return Box(tuple(map(min, p, q)), tuple(map(max, p, q)))

    def preimage(self, box: Box, region: Box = None) -> Box:
        p, q = self.inverse(box.lo), self.inverse(box.hi)
        return Box(tuple(map(min, p, q)), tuple(map(max, p, q)))

    def min_abs_derivative(self, region: Box = None) -> Number:
        return min(abs(a) for a in self.slope)

    def log_derivative_lipschitz(self, region: Box = None) -> float:
        return 0.0

    def compose_after(self, inner: "AffineBranch") -> "AffineBranch":
        """``self o inner``."""
        return AffineBranch(
            tuple(a * c for a, c in zip(self.slope, inner.slope)),
            tuple(a * b + e for a, b, e in zip(self.slope, inner.offset, self.offset)),
        )


#: Smooth one-dimensional branch catalog: name -> (T, T', T'').
_SMOOTH_CATALOG = {
    "quadratic": (
        lambda c, x: c[0] + c[1] * x + c[2] * x * x,
        lambda c, x: c[1] + 2 * c[2] * x,
        lambda c, x: 2 * c[2],
    ),
    "exp": (
        lambda c, x: c[0] + c[1] * np.exp(c[2] * x),
        lambda c, x: c[1] * c[2] * np.exp(c[2] * x),
        lambda c, x: c[1] * c[2] * c[2] * np.exp(c[2] * x),
    ),
}


@dataclass(frozen=True)
class SmoothBranch:
    """Monotone smooth 1D branch from :data:`_SMOOTH_CATALOG` (float arithmetic)."""

    kind: str
    coeffs: Tuple[float, ...]

    is_affine = False

    def __post_init__(self):
        if self.kind not in _SMOOTH_CATALOG:
            raise InvalidMap(f"unknown smooth branch kind {self.kind!r}; "
                             f"catalog: {sorted(_SMOOTH_CATALOG)}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def value(self, x: float) -> float:
        return _SMOOTH_CATALOG[self.kind][0](self.coeffs, float(x))

    def derivative(self, x: float) -> float:
        return _SMOOTH_CATALOG[self.kind][1](self.coeffs, float(x))

    def second_derivative(self, x: float) -> float:
        return _SMOOTH_CATALOG[self.kind][2](self.coeffs, float(x))

    def value_array(self, xs: np.ndarray) -> np.ndarray:
        return _SMOOTH_CATALOG[self.kind][0](self.coeffs, np.asarray(xs, dtype=float))

    def derivative_array(self, xs: np.ndarray) -> np.ndarray:
        d = _SMOOTH_CATALOG[self.kind][1](self.coeffs, np.asarray(xs, dtype=float))
        return np.broadcast_to(d, np.shape(xs))

    def __call__(self, x: Point) -> Point:
        return (self.value(x[0]),)

    def jacobian(self, x: Point) -> Point:
        return (self.derivative(x[0]),)

    def image(self, box: Box) -> Box:
        a, b = self.value(box.lo[0]), self.value(box.hi[0])
        return Box((min(a, b),), (max(a, b),))

    def inverse_scalar(self, y: float, region: Box) -> float:
        lo, hi = float(region.lo[0]), float(region.hi[0])
        flo, fhi = self.value(lo) - y, self.value(hi) - y
        if abs(flo) <= EPS_GEOM:
            return lo
        if abs(fhi) <= EPS_GEOM:
            return hi
        if flo * fhi > 0:
            raise InvalidMap(f"value {y} outside the branch image on {region}")
        return brentq(lambda x: self.value(x) - y, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def preimage(self, box: Box, region: Box) -> Box:
        a = self.inverse_scalar(float(box.lo[0]), region)
        b = self.inverse_scalar(float(box.hi[0]), region)
        return Box((min(a, b),), (max(a, b),))

    def min_abs_derivative(self, region: Box) -> float:
        lo, hi = float(region.lo[0]), float(region.hi[0])
        d_lo, d_hi = self.derivative(lo), self.derivative(hi)
        if d_lo * d_hi <= 0:
            return 0.0
        # |T'| is monotone on a monotone branch of either catalog kind
        return min(abs(d_lo), abs(d_hi))

    def log_derivative_lipschitz(self, region: Box) -> float:
        """Upper bound for ``sup |T''/T'|`` on ``region``."""
        if self.kind == "exp":
            return abs(self.coeffs[2])
        m = self.min_abs_derivative(region)
        if m == 0:
            return math.inf
        return abs(2 * self.coeffs[2]) / m


# ---------------------------------------------------------------------------
# Pieces and maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    index: int
    region: Box
    branch: object
    extension_margin: Number = 0

    @property
    def extended_region(self) -> Box:
        return self.region.inflate(self.extension_margin)


@dataclass(frozen=True, eq=False)
class PiecewiseMap:
    """A piecewise expanding map with a finite alphabet of box pieces.

    ``factors`` is set when the map is a product of one-dimensional maps:
    piece ``i`` then corresponds to the row-major multi-index
    :meth:`factor_index` and every cylinder is a product of factor cylinders.
    """

    pieces: Tuple[Piece, ...]
    lam: Number = None
    name: str = "map"
    factors: Optional[Tuple["PiecewiseMap", ...]] = None
    phase_space: Box = field(init=False)
    exact: bool = field(init=False)

    def __post_init__(self):
        if not self.pieces:
            raise InvalidMap("a map needs at least one piece")
        dims = {p.region.dimension for p in self.pieces}
        if len(dims) != 1:
            raise InvalidMap("pieces have inconsistent dimensions")
        d = dims.pop()
        for k, p in enumerate(self.pieces):
            if p.index != k:
                raise InvalidMap("piece indices must be 0..|I|-1 in order")
            if not p.branch.is_affine and d != 1:
                raise UnsupportedGeometry("smooth branches are supported in dimension 1 only")
            if p.branch.is_affine and len(p.branch.slope) != d:
                raise InvalidMap(f"piece {k}: branch dimension differs from region")
        exact = all(
            all_exact(p.region.lo + p.region.hi) and p.branch.is_affine
            and all_exact(p.branch.slope + p.branch.offset)
            for p in self.pieces
        )
        object.__setattr__(self, "exact", exact)
        lo = tuple(min(p.region.lo[k] for p in self.pieces) for k in range(d))
        hi = tuple(max(p.region.hi[k] for p in self.pieces) for k in range(d))
        object.__setattr__(self, "phase_space", Box(lo, hi))
        self._validate()

    @property
    def dimension(self) -> int:
        return self.phase_space.dimension

    @property
    def eps(self) -> float:
        return 0 if self.exact else EPS_GEOM

    @property
    def alphabet(self) -> range:
        return range(len(self.pieces))

    @property
    def is_affine(self) -> bool:
        return all(p.branch.is_affine for p in self.pieces)

    def _validate(self):
        eps = self.eps
        for p in self.pieces:
            if any(w <= eps for w in p.region.widths()):
                raise InvalidMap(f"piece {p.index} has an empty region")
        for a in self.pieces:
            for b in self.pieces[a.index + 1:]:
                if a.region.intersect(b.region, eps) is not None:
                    raise InvalidMap(f"pieces {a.index} and {b.index} overlap")
        total = sum((p.region.volume() for p in self.pieces), 0)
        full = self.phase_space.volume()
        if abs(total - full) > (0 if self.exact else 1e-9):
            raise InvalidMap(f"pieces cover volume {total}, phase space has {full}")
        computed = None
        for p in self.pieces:
            img = p.branch.image(p.region)
            if not self.phase_space.contains_closed(img.lo, eps) or \
                    not self.phase_space.contains_closed(img.hi, eps):
                raise InvalidMap(f"branch {p.index} maps outside the phase space")
            m = p.branch.min_abs_derivative(p.extended_region)
            computed = m if computed is None else min(computed, m)
        lam = computed if self.lam is None else self.lam
        if lam is None or not lam > 1:
            raise InvalidMap(f"expansion constant lambda = {lam} must exceed 1")
        if lam > computed + (0 if self.exact else 1e-12):
            raise InvalidMap(f"declared lambda {lam} exceeds the smallest expansion {computed}")
        object.__setattr__(self, "lam", lam)

    def factor_index(self, i: int) -> Tuple[int, ...]:
        """Per-axis piece indices of product piece ``i`` (row-major)."""
        sizes = [len(f.pieces) for f in self.factors]
        out = []
        for s in reversed(sizes):
            i, r = divmod(i, s)
            out.append(r)
        return tuple(reversed(out))

    def boundary_faces(self) -> Tuple[Box, ...]:
        """Closed faces making up the union of the piece boundaries."""
        faces = []
        seen = set()
        for p in self.pieces:
            r = p.region
            for k in range(self.dimension):
                for c in (r.lo[k], r.hi[k]):
                    lo = r.lo[:k] + (c,) + r.lo[k + 1:]
                    hi = r.hi[:k] + (c,) + r.hi[k + 1:]
                    if (lo, hi) not in seen:
                        seen.add((lo, hi))
                        faces.append(Box(lo, hi))
        return tuple(faces)


def product_map(factors: Sequence[PiecewiseMap], name: str = "product") -> PiecewiseMap:
    """Cartesian product of one-dimensional affine maps (diagonal branches)."""
    if any(f.dimension != 1 or not f.is_affine for f in factors):
        raise UnsupportedGeometry("product maps need one-dimensional affine factors")
    combos = [()]
    for f in factors:
        combos = [c + (p,) for c in combos for p in f.pieces]
    pieces = []
    for idx, combo in enumerate(combos):
        region = Box(tuple(p.region.lo[0] for p in combo), tuple(p.region.hi[0] for p in combo))
        branch = AffineBranch(tuple(p.branch.slope[0] for p in combo),
                              tuple(p.branch.offset[0] for p in combo))
        pieces.append(Piece(idx, region, branch))
    lam = min(f.lam for f in factors)
    return PiecewiseMap(tuple(pieces), lam=lam, name=name, factors=tuple(factors))


def detect_product(m: PiecewiseMap) -> PiecewiseMap:
    """Return an equivalent map carrying ``factors`` when ``m`` is a grid product."""
    if m.factors is not None or m.dimension == 1 or not m.is_affine:
        return m
    d = m.dimension
    axes = []
    for k in range(d):
        ivals = sorted({(p.region.lo[k], p.region.hi[k]) for p in m.pieces})
        axes.append(ivals)
    if math.prod(len(a) for a in axes) != len(m.pieces):
        return m
    branch_of = [dict() for _ in range(d)]
    for p in m.pieces:
        for k in range(d):
            key = (p.region.lo[k], p.region.hi[k])
            data = (p.branch.slope[k], p.branch.offset[k])
            if branch_of[k].setdefault(key, data) != data:
                return m
    factors = []
    for k in range(d):
        fp = tuple(Piece(j, Box((lo,), (hi,)), AffineBranch((branch_of[k][(lo, hi)][0],),
                                                             (branch_of[k][(lo, hi)][1],)))
                   for j, (lo, hi) in enumerate(axes[k]))
        try:
            factors.append(PiecewiseMap(fp, name=f"{m.name}[axis{k}]"))
        except InvalidMap:
            return m
    prod = product_map(factors, name=m.name)
    # keep the caller's piece numbering; weights index pieces
    if any(a.region != b.region for a, b in zip(prod.pieces, m.pieces)):
        return m
    return prod


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Weight:
    """Piecewise weight ``g``; only ``|g|`` enters the bounds.

    kinds
        ``constant`` (``value``), ``det_jacobian_power`` (``value`` is the
        exponent ``c`` in ``|det DT|**c``), ``piecewise_constant``
        (``values`` per piece) and ``exp_affine`` (``exp(coeffs[i] . x +
        offsets[i])`` on piece ``i``).
    """

    kind: str
    value: Number = None
    values: Tuple[Number, ...] = None
    coeffs: Tuple[Tuple[float, ...], ...] = None
    offsets: Tuple[float, ...] = None
    alpha: float = 1.0

    KINDS = ("constant", "det_jacobian_power", "piecewise_constant", "exp_affine")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidMap(f"unknown weight kind {self.kind!r}")

    @classmethod
    def constant(cls, c=1) -> "Weight":
        return cls("constant", value=parse_number(c) if isinstance(c, str) else c)

    @classmethod
    def det_jacobian_power(cls, c=-1) -> "Weight":
        return cls("det_jacobian_power", value=parse_number(c) if isinstance(c, str) else c)

    @classmethod
    def piecewise_constant(cls, values) -> "Weight":
        return cls("piecewise_constant",
                   values=tuple(parse_number(v) if isinstance(v, str) else v for v in values))

    @classmethod
    def exp_affine(cls, coeffs, offsets) -> "Weight":
        return cls("exp_affine", coeffs=tuple(tuple(float(c) for c in row) for row in coeffs),
                   offsets=tuple(float(o) for o in offsets))

    @property
    def locally_constant(self) -> bool:
        """Constant on every piece of an affine map."""
        return self.kind != "exp_affine"

    @property
    def separable(self) -> bool:
        """Factorises over the axes of a product map."""
        return self.kind in ("constant", "det_jacobian_power")

    def check_alphabet(self, m: PiecewiseMap):
        n = len(m.pieces)
        if self.kind == "piecewise_constant" and len(self.values) != n:
            raise InvalidMap(f"weight has {len(self.values)} values for {n} pieces")
        if self.kind == "exp_affine":
            if len(self.coeffs) != n or len(self.offsets) != n:
                raise InvalidMap(f"exp_affine weight needs {n} coefficient rows")
            if any(len(r) != m.dimension for r in self.coeffs):
                raise InvalidMap("exp_affine coefficient rows must match the dimension")

    def exact_piece_value(self, piece: Piece) -> Optional[Number]:
        """``|g|`` on the piece when it is a constant exact rational, else ``None``."""
        if self.kind == "constant" and is_exact(self.value):
            return abs(Fraction(self.value))
        if self.kind == "piecewise_constant" and is_exact(self.values[piece.index]):
            return abs(Fraction(self.values[piece.index]))
        if self.kind == "det_jacobian_power" and piece.branch.is_affine \
                and is_exact(self.value) and Fraction(self.value).denominator == 1 \
                and all_exact(piece.branch.slope):
            det = abs(math.prod(Fraction(a) for a in piece.branch.slope))
            return det ** int(self.value)
        return None

    def log_abs(self, piece: Piece, x: Point) -> float:
        """``log |g(x)|`` for ``x`` in the closure of ``piece``."""
        if self.kind == "constant":
            return log_abs(self.value)
        if self.kind == "piecewise_constant":
            return log_abs(self.values[piece.index])
        if self.kind == "det_jacobian_power":
            jac = piece.branch.jacobian(x)
            return float(self.value) * sum(log_abs(a) for a in jac)
        row = self.coeffs[piece.index]
        return sum(c * float(v) for c, v in zip(row, x)) + self.offsets[piece.index]

    def log_lipschitz(self, piece: Piece) -> float:
        """Lipschitz constant of ``log|g|`` on the (extended) piece, 1D smooth use."""
        if self.kind in ("constant", "piecewise_constant"):
            return 0.0
        if self.kind == "det_jacobian_power":
            return abs(float(self.value)) * piece.branch.log_derivative_lipschitz(
                piece.extended_region)
        return max(abs(c) for c in self.coeffs[piece.index])


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


class _BoundaryMarker:
    def __repr__(self):
        return "Boundary"


#: Returned by :func:`evaluate_map` for points on the boundary of a piece.
BOUNDARY = _BoundaryMarker()


@dataclass(frozen=True)
class MapEvaluation:
    piece: int
    image: Point
    jacobian: Point


def locate(m: PiecewiseMap, x) -> int:
    """Index of the open piece containing ``x``; raises on boundary or outside."""
    res = evaluate_map(m, x)
    if res is BOUNDARY:
        raise WordMismatch(f"point {x} lies on the partition boundary")
    return res.piece


def evaluate_map(m: PiecewiseMap, x):
    """Return ``MapEvaluation`` for ``x``, or :data:`BOUNDARY` on the partition boundary."""
    x = _point(x)
    eps = m.eps
    for p in m.pieces:
        if p.region.contains_closed(x, eps):
            if p.region.on_boundary(x, eps):
                return BOUNDARY
            return MapEvaluation(p.index, p.branch(x), p.branch.jacobian(x))
    raise NoPiece(f"point {x} lies outside every piece")


def birkhoff_weight(m: PiecewiseMap, weight: Weight, word: Sequence[int], x) -> Number:
    """``|g^(n)(x)|`` along the branch composition indexed by ``word``."""
    weight.check_alphabet(m)
    x = _point(x)
    eps = max(m.eps, EPS_GEOM if not m.exact else 0)
    exact_vals = [weight.exact_piece_value(m.pieces[i]) for i in word]
    total_log = 0.0
    for k, i in enumerate(word):
        piece = m.pieces[i]
        if not piece.region.contains_closed(x, eps):
            raise WordMismatch(f"iterate {k} at {x} is outside piece {i}")
        total_log += weight.log_abs(piece, x)
        x = piece.branch(x)
    if all(v is not None for v in exact_vals):
        return math.prod(exact_vals, start=Fraction(1))
    return math.exp(total_log)


@dataclass(frozen=True)
class Expansion:
    """``nu`` is ``sup nu_n`` on the cylinder, ``nu_tilde`` the sup of
    ``nu~_{n,i}`` over the extended cylinder neighbourhood."""

    nu: Number
    nu_tilde: Number


def smallest_expansion(m: PiecewiseMap, word: Sequence[int]) -> Expansion:
    """Reciprocal smallest expansion of ``DT^n`` along ``word``."""
    from .cylinders import cylinder_of, log_derivative_range

    cyl = cylinder_of(m, tuple(word))
    if m.is_affine:
        smin = min(abs(a) for a in cyl.slope)
        nu = 1 / smin if is_exact(smin) else 1.0 / float(smin)
        return Expansion(nu, nu)
    lo, _ = log_derivative_range(m, cyl)
    lo_ext, _ = log_derivative_range(m, cyl, extended=True)
    return Expansion(math.exp(-lo), math.exp(-min(lo, lo_ext)))


@dataclass(frozen=True)
class ExpansionData:
    """Per-cylinder ``nu_n`` / ``nu~_n`` at depth ``n`` and the proxy ``nu_*``.

    ``nu_star`` is ``max_i nu_n(i)**(1/n)``, an upper proxy for the pointwise
    limit ``lim nu_n**(1/n)``.
    """

    depth: int
    words: Tuple[Tuple[int, ...], ...]
    nu_n: Tuple[Number, ...]
    nu_tilde_n: Tuple[Number, ...]
    nu_star: float


def expansion_data(m: PiecewiseMap, n: int) -> ExpansionData:
    from .cylinders import enumerate_cylinders

    cyls = enumerate_cylinders(m, n)
    exps = [smallest_expansion(m, c.word) for c in cyls]
    nu_star = max(float(e.nu) ** (1.0 / n) for e in exps)
    return ExpansionData(n, tuple(c.word for c in cyls), tuple(e.nu for e in exps),
                         tuple(e.nu_tilde for e in exps), nu_star)


# ---------------------------------------------------------------------------
# JSON ingestion
# ---------------------------------------------------------------------------


def _parse_region(spec, d: int) -> Box:
    if d == 1 and len(spec) == 2 and not isinstance(spec[0], (list, tuple)):
        spec = [spec]
    lo = tuple(parse_number(a) for a, _ in spec)
    hi = tuple(parse_number(b) for _, b in spec)
    return Box(lo, hi)


def _parse_affine(spec, d: int) -> AffineBranch:
    a = spec["A"]
    if isinstance(a, (list, tuple)) and a and isinstance(a[0], (list, tuple)):
        if len(a) != d or any(len(r) != d for r in a):
            raise InvalidMap("affine matrix A has the wrong shape")
        for r in range(d):
            for c in range(d):
                if r != c and parse_number(a[r][c]) != 0:
                    raise UnsupportedGeometry("only diagonal affine branches are supported")
        diag = tuple(parse_number(a[k][k]) for k in range(d))
    elif isinstance(a, (list, tuple)):
        diag = tuple(parse_number(v) for v in a)
    else:
        diag = (parse_number(a),)
    b = spec.get("b", [0] * d)
    if not isinstance(b, (list, tuple)):
        b = [b]
    return AffineBranch(diag, tuple(parse_number(v) for v in b))


def parse_weight(spec) -> Weight:
    kind = spec["kind"]
    alpha = float(spec.get("alpha", 1.0))
    if kind == "constant":
        return Weight("constant", value=parse_number(spec.get("value", 1)), alpha=alpha)
    if kind == "det_jacobian_power":
        return Weight("det_jacobian_power", value=parse_number(spec.get("exponent", -1)),
                      alpha=alpha)
    if kind == "piecewise_constant":
        return Weight("piecewise_constant",
                      values=tuple(parse_number(v) for v in spec["values"]), alpha=alpha)
    if kind == "exp_affine":
        w = Weight.exp_affine(spec["coeffs"], spec["offsets"])
        return Weight("exp_affine", coeffs=w.coeffs, offsets=w.offsets, alpha=alpha)
    raise InvalidMap(f"unknown weight kind {kind!r}")


def load_map(doc: dict, name: str = "map"):
    """Build ``(map, weight or None)`` from a parsed JSON document."""
    d = int(doc.get("dimension", 1))
    pieces = []
    for k, ps in enumerate(doc["pieces"]):
        region = _parse_region(ps["region"], d)
        margin = parse_number(ps.get("extension_margin", 0))
        if "affine" in ps:
            branch = _parse_affine(ps["affine"], d)
        elif "smooth" in ps:
            if d != 1:
                raise UnsupportedGeometry("smooth branches are supported in dimension 1 only")
            branch = SmoothBranch(ps["smooth"]["kind"], tuple(ps["smooth"]["coeffs"]))
        else:
            raise InvalidMap(f"piece {k} has no branch description")
        pieces.append(Piece(k, region, branch, margin))
    lam = doc.get("lambda")
    m = PiecewiseMap(tuple(pieces), lam=None if lam is None else parse_number(lam),
                     name=doc.get("name", name))
    m = detect_product(m)
    weight = parse_weight(doc["weight"]) if "weight" in doc else None
    if weight is not None:
        weight.check_alphabet(m)
    return m, weight
