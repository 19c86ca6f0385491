"""Ulam compression of the weighted transfer operator and its dominant spectrum.

The matrix acts on piecewise-constant densities: entry ``A[i, j]`` is the
average over cell ``i`` of the image of the indicator of cell ``j``, i.e.
``(1/vol P_i) * int_{P_j & T^-1 P_i} |g| |det DT| dy``.  Only the dominant
eigenvalue and mass conservation are meaningful numerically; subdominant
data is reported as empirical.
"""

from __future__ import annotations

import bisect
import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from .cylinders import enumerate_cylinders
from .errors import NoConvergence, NotMarkov, UnsupportedGeometry
from .maps import Box, PiecewiseMap, Weight
from .numeric import EPS_GEOM, fmt_number

MARKOV_EXACT = "MarkovExact"
GRID_QUADRATURE = "GridQuadrature"

#: Power iteration stops at this relative Collatz-Wielandt width.
POWER_TOL = 1e-12
MAX_ITER = 100_000
QUAD_NODES = 16


@dataclass(frozen=True)
class UlamOperator:
    cells: Tuple[Box, ...]
    matrix: sparse.csr_matrix = field(repr=False)
    mode: str
    weight_descriptor: str
    exact_entries: Optional[Dict[Tuple[int, int], Fraction]] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.cells)

    @property
    def volumes(self) -> np.ndarray:
        return np.array([float(c.volume()) for c in self.cells])

    def mass_defect(self) -> float:
        """``max_j |sum_i vol_i A_ij - vol_j|``; zero when ``g = |det DT|^-1``."""
        vol = self.volumes
        return float(np.abs(self.matrix.T @ vol - vol).max())


def _exp_integral(kappa: float, lo: float, hi: float) -> float:
    if abs(kappa) < 1e-14:
        return hi - lo
    return (math.exp(kappa * hi) - math.exp(kappa * lo)) / kappa


def _affine_entry(weight: Weight, piece, q: Box, exact: bool):
    """``int_q |g| |det DT| dy`` over a box ``q`` inside an affine piece."""
    br = piece.branch
    det = abs(math.prod(br.slope, start=Fraction(1) if exact else 1.0))
    if weight.kind == "exp_affine":
        c = weight.coeffs[piece.index]
        val = float(det) * math.exp(weight.offsets[piece.index])
        for k in range(len(c)):
            val *= _exp_integral(c[k], float(q.lo[k]), float(q.hi[k]))
        return val
    if exact:
        gv = weight.exact_piece_value(piece)
        if gv is not None:
            return gv * det * q.volume()
    if weight.kind == "det_jacobian_power":
        gv = float(det) ** float(weight.value)
    else:
        gv = math.exp(weight.log_abs(piece, q.midpoint()))
    return gv * float(det) * float(q.volume())


def _smooth_entry(weight: Weight, piece, q: Box) -> float:
    lo, hi = float(q.lo[0]), float(q.hi[0])
    h = (hi - lo) / QUAD_NODES
    xs = lo + h * (np.arange(QUAD_NODES) + 0.5)
    total = 0.0
    for x in xs:
        total += math.exp(weight.log_abs(piece, (x,))) * abs(piece.branch.derivative(x))
    return total * h


def _cells_overlapping(cells_lo: np.ndarray, cells_hi: np.ndarray, box: Box, eps: float):
    lo = np.array([float(v) for v in box.lo])
    hi = np.array([float(v) for v in box.hi])
    ok = np.all((cells_lo < hi - eps) & (cells_hi > lo + eps), axis=1)
    return np.nonzero(ok)[0]


def _grid_cells(m: PiecewiseMap, N: int) -> List[Box]:
    ps = m.phase_space
    axes = []
    for k in range(m.dimension):
        lo, hi = ps.lo[k], ps.hi[k]
        step = (hi - lo) / N
        axes.append([(lo + step * i, lo + step * (i + 1)) for i in range(N)])
    cells = []
    for combo in itertools.product(*axes):
        cells.append(Box(tuple(a for a, _ in combo), tuple(b for _, b in combo)))
    return cells


def assemble_ulam(m: PiecewiseMap, weight: Weight, partition: Tuple[str, int]) -> UlamOperator:
    """Build the Ulam matrix on ``("markov", depth)`` cylinders or a ``("grid", N)`` grid.

    Markov mode checks that every cell image is a union of cells and keeps
    exact rational entries when the data allows it.
    """
    kind, size = partition
    weight.check_alphabet(m)
    if kind == "markov":
        cells = [c.region for c in enumerate_cylinders(m, size)]
        mode = MARKOV_EXACT
    elif kind == "grid":
        cells = _grid_cells(m, size)
        mode = GRID_QUADRATURE
    else:
        raise ValueError(f"unknown partition kind {kind!r}")
    eps = m.eps
    exact = mode == MARKOV_EXACT and m.exact and weight.kind != "exp_affine" and all(
        weight.exact_piece_value(p) is not None for p in m.pieces)
    lo = np.array([[float(v) for v in c.lo] for c in cells])
    hi = np.array([[float(v) for v in c.hi] for c in cells])
    feps = 0.0 if m.exact else EPS_GEOM
    rows, cols, vals = [], [], []
    exact_entries = {} if exact else None
    for j, cell in enumerate(cells):
        for piece in m.pieces:
            q = cell.intersect(piece.region, eps)
            if q is None:
                continue
            img = piece.branch.image(q)
            for i in _cells_overlapping(lo, hi, img, feps):
                target = cells[i]
                part = img.intersect(target, eps)
                if part is None:
                    continue
                if mode == MARKOV_EXACT:
                    defect = abs(part.volume() - target.volume())
                    if defect > (0 if m.exact else 1e-9):
                        raise NotMarkov(f"image of cell {j} covers cell {i} only partially")
                pre = piece.branch.preimage(part, piece.region)
                if piece.branch.is_affine:
                    val = _affine_entry(weight, piece, pre, exact)
                else:
                    val = _smooth_entry(weight, piece, pre)
                val = val / (target.volume() if exact else float(target.volume()))
                if exact:
                    exact_entries[(i, j)] = exact_entries.get((i, j), Fraction(0)) + val
                rows.append(i)
                cols.append(j)
                vals.append(float(val))
    n = len(cells)
    mat = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    mat.sum_duplicates()
    return UlamOperator(tuple(cells), mat, mode, weight.kind, exact_entries)


@dataclass(frozen=True)
class Eigenpair:
    modulus: float
    vector: Optional[np.ndarray]
    bracket: Tuple[float, float]
    iterations: int
    empirical: bool = False


def _power(apply, n: int, start: np.ndarray, tol: float, max_iter: int):
    """Perron root of a nonnegative operator via iteration on ``A + I``."""
    x = start / np.linalg.norm(start)
    lo, hi = 0.0, math.inf
    for it in range(1, max_iter + 1):
        y = apply(x) + x
        pos = x > 1e-300
        ratios = y[pos] / x[pos]
        lo, hi = float(ratios.min()), float(ratios.max())
        x = y / np.linalg.norm(y)
        if hi - lo <= tol * hi:
            return x, lo - 1.0, hi - 1.0, it
    raise NoConvergence("power iteration hit the iteration cap", hi - lo)


DENSE_LIMIT = 2500
NILPOTENT_TOL = 1e-13


def _eigenvalues(A: sparse.csr_matrix) -> np.ndarray:
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        return np.linalg.eigvals(A.toarray())
    try:
        return eigs(A.astype(float), k=4, which="LM", return_eigenvectors=False,
                    maxiter=MAX_ITER)
    except ArpackNoConvergence as exc:
        raise NoConvergence("ARPACK did not converge", math.nan) from exc


def dominant_spectrum(op: UlamOperator, k: int = 2, tol: float = POWER_TOL,
                      max_iter: int = MAX_ITER) -> List[Eigenpair]:
    """Dominant eigenvalue (with Collatz-Wielandt bracket) and, for ``k = 2``,
    the largest modulus among the remaining eigenvalues.

    The subdominant modulus is 0 when iterating the deflated operator on a
    generic vector vanishes within ``size`` steps; otherwise it comes from a
    dense (or ARPACK) eigenvalue solve.  It carries no certificate.
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    A = op.matrix
    n = A.shape[0]
    r, lo, hi, it = _power(lambda v: A @ v, n, np.ones(n), tol, max_iter)
    l, _, _, _ = _power(lambda v: A.T @ v, n, np.ones(n), tol, max_iter)
    rho = 0.5 * (lo + hi)
    vol = op.volumes
    density = r / float(r @ vol)
    out = [Eigenpair(rho, density, (lo, hi), it)]
    if k == 1:
        return out
    # deflate the dominant rank-one part; a nilpotent remainder vanishes
    # within ``n`` steps, which a dense eigensolver would blur to ~eps^(1/n)
    lr = float(l @ r)
    x = np.random.default_rng(0).standard_normal(n)
    x -= r * (float(l @ x) / lr)
    x /= np.linalg.norm(x)
    scale = max(rho, 1.0)
    step = 0
    vanished = False
    for step in range(1, n + 2):
        y = A @ x - rho * r * (float(l @ x) / lr)
        norm = float(np.linalg.norm(y))
        if norm <= NILPOTENT_TOL * scale:
            vanished = True
            break
        x = y / norm
    if vanished:
        estimate = 0.0
    else:
        vals = _eigenvalues(A)
        # drop the eigenvalue closest to the certified Perron root
        vals = np.delete(vals, int(np.argmin(np.abs(vals - rho))))
        estimate = float(np.abs(vals).max()) if vals.size else 0.0
    out.append(Eigenpair(estimate, None, (estimate, estimate), step, empirical=True))
    return out


def density_csv(op: UlamOperator, density: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = op.cells[0].dimension
    w.writerow([f"lo{k}" for k in range(d)] + [f"hi{k}" for k in range(d)] + ["density"])
    for c, v in zip(op.cells, density):
        w.writerow([fmt_number(x) for x in c.lo] + [fmt_number(x) for x in c.hi] + [repr(float(v))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Push-forward of the constant function
# ---------------------------------------------------------------------------


def _dedupe(points, eps):
    out = []
    for p in sorted(points):
        if not out or p - out[-1] > eps:
            out.append(p)
    return out


def _locate(axis, points, eps):
    """Cell index of every point in a breakpoint list (``-1`` outside)."""
    idx = []
    for p in points:
        i = bisect.bisect_right(axis, p) - 1
        idx.append(i if 0 <= i < len(axis) - 1 else -1)
    return idx


def _mid(a, b):
    return (a + b) / 2


def _push_once(m: PiecewiseMap, axes, vals, eps):
    pushed = []
    for piece in m.pieces:
        r = piece.region
        sub_axes = []
        idx = []
        for k in range(m.dimension):
            lo, hi = r.lo[k], r.hi[k]
            bps = [lo] + [b for b in axes[k] if lo + eps < b < hi - eps] + [hi]
            mids = [_mid(a, b) for a, b in zip(bps, bps[1:])]
            sub_axes.append(bps)
            idx.append(_locate(axes[k], mids, eps))
        if any(any(i < 0 for i in ix) for ix in idx):
            raise UnsupportedGeometry("piece extends past the function support")
        sub = vals[np.ix_(*idx)]
        new_axes = []
        for k in range(m.dimension):
            br = piece.branch
            if br.is_affine:
                a, b = br.slope[k], br.offset[k]
                mapped = [a * x + b for x in sub_axes[k]]
            else:
                mapped = [br.value(x) for x in sub_axes[k]]
            if mapped[0] > mapped[-1]:
                mapped = mapped[::-1]
                sub = np.flip(sub, axis=k)
            new_axes.append(mapped)
        pushed.append((new_axes, sub))
    union = []
    ps = m.phase_space
    for k in range(m.dimension):
        pts = {ps.lo[k], ps.hi[k]}
        for ax, _ in pushed:
            pts.update(ax[k])
        union.append(_dedupe(pts, eps))
    total = np.zeros(tuple(len(a) - 1 for a in union), dtype=object)
    for ax, sub in pushed:
        idx = []
        for k in range(m.dimension):
            mids = [_mid(a, b) for a, b in zip(union[k], union[k][1:])]
            idx.append(_locate(ax[k], mids, eps))
        for cell in itertools.product(*[range(len(ix)) for ix in idx]):
            src = tuple(ix[c] for ix, c in zip(idx, cell))
            if all(s >= 0 for s in src):
                total[cell] += sub[src]
    return union, total


def push_forward_indicator(m: PiecewiseMap, n: int) -> int:
    """``ess sup L_1^n(1)``: the transfer operator with ``g = 1`` applied ``n``
    times to the constant function, tracked exactly as a piecewise-constant
    function on a rectilinear grid."""
    if m.factors is not None:
        return math.prod(push_forward_indicator(f, n) for f in m.factors)
    if not m.is_affine and m.dimension > 1:
        raise UnsupportedGeometry("push-forward needs affine branches in dimension > 1")
    eps = m.eps
    ps = m.phase_space
    axes = [[ps.lo[k], ps.hi[k]] for k in range(m.dimension)]
    vals = np.ones((1,) * m.dimension, dtype=object)
    for _ in range(n):
        axes, vals = _push_once(m, axes, vals, eps)
    widths_ok = [np.array([b - a > (eps if eps else 0) for a, b in zip(ax, ax[1:])]) for ax in axes]
    mask = widths_ok[0]
    for w in widths_ok[1:]:
        mask = np.multiply.outer(mask, w)
    return int(max(v for v, ok in zip(vals.ravel(), np.ravel(mask)) if ok))


# ---------------------------------------------------------------------------
# Gap report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapRow:
    partition: Tuple[str, int]
    size: int
    dominant: float
    subdominant: float
    ratio: float
    consistent: Optional[bool]


def spectral_gap_report(m: PiecewiseMap, weight: Weight, partitions: Sequence[Tuple[str, int]],
                        essential_upper: Optional[float] = None) -> List[GapRow]:
    """Dominant and subdominant moduli along a refinement sequence.

    ``consistent`` asks whether the subdominant modulus stays above
    ``essential_upper`` minus the discretisation error (largest cell
    diameter).  Ulam matrices need not see the essential spectrum at all, so
    this is a heuristic flag, not a certified statement.
    """
    rows = []
    for part in partitions:
        op = assemble_ulam(m, weight, part)
        dom, sub = dominant_spectrum(op, 2)
        ratio = sub.modulus / dom.modulus if dom.modulus else 0.0
        flag = None
        if essential_upper is not None:
            err = max(c.diameter() for c in op.cells)
            flag = sub.modulus >= essential_upper - err
        rows.append(GapRow(tuple(part), op.size, dom.modulus, sub.modulus, ratio, flag))
    return rows
