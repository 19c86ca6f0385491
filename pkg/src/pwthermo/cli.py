"""Command-line entry point and experiment runner.

Exit codes: 0 on success or PASS, 2 when a verdict is inconclusive, 1 on
errors or FAIL.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import catalog
from .bounds import bound_sweep_csv, compare_bounds
from .complexity import complexity_profile
from .errors import ConfigError, PwThermoError
from .maps import PiecewiseMap, Weight, load_map, parse_weight
from .numeric import exact_str, fmt_number, parse_number
from .potential import PotentialSpec
from .pressure import INCONCLUSIVE, pressure_estimate, small_boundary_verdict
from .spectral import assemble_ulam, density_csv, dominant_spectrum
from .varprinciple import measure_candidates, variational_check

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

STAGES = ("cylinders", "complexity", "pressure", "bounds", "ulam", "varcheck")


class StageError(PwThermoError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


# ---------------------------------------------------------------------------
# Map and weight resolution
# ---------------------------------------------------------------------------

_WEIGHT_SHORTHAND = {
    "jac": {"kind": "det_jacobian_power", "exponent": -1},
    "one": {"kind": "constant", "value": 1},
}


def resolve_weight(spec) -> Weight:
    """Weight from a dict, a JSON string, a file path or a shorthand.

    Shorthands: ``jac`` (``|det DT|^-1``), ``one`` (``g = 1``),
    ``const:<v>`` and ``detpow:<e>``.
    """
    if isinstance(spec, Weight):
        return spec
    if isinstance(spec, dict):
        return parse_weight(spec)
    text = str(spec).strip()
    if text in _WEIGHT_SHORTHAND:
        return parse_weight(_WEIGHT_SHORTHAND[text])
    if text.startswith("const:"):
        return parse_weight({"kind": "constant", "value": text[6:]})
    if text.startswith("detpow:"):
        return parse_weight({"kind": "det_jacobian_power", "exponent": text[7:]})
    if text.startswith("{"):
        return parse_weight(json.loads(text))
    if os.path.exists(text):
        with open(text) as fh:
            return parse_weight(json.load(fh))
    raise ConfigError(f"weight: cannot interpret {text!r}")


def resolve_map(source: str) -> Tuple[PiecewiseMap, Optional[Weight]]:
    """Catalog name or JSON file path; a file may carry its own weight."""
    if source in catalog.CATALOG:
        return catalog.get(source), None
    if os.path.exists(source):
        with open(source) as fh:
            doc = json.load(fh)
        name = os.path.splitext(os.path.basename(source))[0]
        return load_map(doc, name)
    raise ConfigError(f"map: {source!r} is neither a catalog name nor a file")


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------


def _num_list(doc: dict, key: str, default, errors: List[str]):
    raw = doc.get(key, default)
    if not isinstance(raw, list):
        raw = [raw]
    out = []
    for v in raw:
        try:
            out.append(parse_number(v))
        except (ValueError, TypeError, ZeroDivisionError):
            errors.append(f"{key}: {v!r} is not a number")
    return out


def _pos_int(doc: dict, key: str, default: int, errors: List[str]) -> int:
    v = doc.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
        errors.append(f"{key}: must be a positive integer, got {v!r}")
        return default
    return v


@dataclass(frozen=True)
class ExperimentConfig:
    map: str
    weight: dict
    t_grid: Tuple = (Fraction(3, 10),)
    p_grid: Tuple = (2,)
    q_grid: Tuple = ()
    s_grid: Tuple = (0,)
    n_max: int = 10
    k_max: int = 2
    L_max: int = 6
    K: int = 0
    ulam_depth: Optional[int] = 5
    ulam_grid: Optional[int] = None
    stages: Tuple[str, ...] = STAGES
    output_dir: Optional[str] = None
    arithmetic: str = "auto"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        """Validate a config document; all problems are reported together."""
        errors: List[str] = []
        if "map" not in doc:
            errors.append("map: required")
        weight = doc.get("weight", dict(_WEIGHT_SHORTHAND["jac"]))
        if isinstance(weight, str):
            weight = _WEIGHT_SHORTHAND.get(weight, weight)
        w_obj = None
        try:
            w_obj = resolve_weight(weight)
        except (PwThermoError, KeyError, ValueError) as exc:
            errors.append(f"weight: {exc}")
        ts = _num_list(doc, "t", ["3/10"], errors)
        ps = _num_list(doc, "p", [2], errors)
        qs = _num_list(doc, "q", [], errors)
        ss = _num_list(doc, "s", [0], errors)
        n_max = _pos_int(doc, "n_max", 10, errors)
        k_max = _pos_int(doc, "k_max", 2, errors)
        L_max = _pos_int(doc, "L_max", 6, errors)
        K = doc.get("K", 0)
        if not isinstance(K, int) or K < 0:
            errors.append(f"K: must be a nonnegative integer, got {K!r}")
        depth = doc.get("ulam_depth", None if "ulam_grid" in doc else 5)
        grid = doc.get("ulam_grid")
        if depth is not None and grid is not None:
            errors.append("ulam_depth/ulam_grid: give at most one")
        for key, v in (("ulam_depth", depth), ("ulam_grid", grid)):
            if v is not None and (not isinstance(v, int) or v <= 0):
                errors.append(f"{key}: must be a positive integer, got {v!r}")
        stages = tuple(doc.get("stages", STAGES))
        for s in stages:
            if s not in STAGES:
                errors.append(f"stages: unknown stage {s!r}")
        arithmetic = doc.get("arithmetic", "auto")
        if arithmetic not in ("auto", "exact", "float"):
            errors.append(f"arithmetic: must be auto, exact or float, got {arithmetic!r}")
        alpha = w_obj.alpha if w_obj is not None else math.inf
        for p in ps:
            if not 1 < p < math.inf:
                errors.append(f"p: {fmt_number(p)} must lie in (1, inf)")
                continue
            for t in ts:
                if t < 0:
                    errors.append(f"t: {fmt_number(t)} must be >= 0")
                elif t * p >= 1:
                    errors.append(f"t: {fmt_number(t)} violates t < 1/p = {fmt_number(Fraction(1) / Fraction(p))}")
                elif t >= alpha:
                    errors.append(f"t: {fmt_number(t)} violates t < alpha = {alpha}")
            for q in qs:
                if not 1 <= q <= Fraction(p) / (Fraction(p) - 1):
                    errors.append(f"q: {fmt_number(q)} must lie in [1, p/(p-1)] for p = {fmt_number(p)}")
        for s in ss:
            for t in ts:
                if not 0 <= s <= t:
                    errors.append(f"s: {fmt_number(s)} must lie in [0, t = {fmt_number(t)}]")
        if errors:
            raise ConfigError("; ".join(errors))
        return cls(doc["map"], weight if isinstance(weight, dict) else {"spec": weight},
                   tuple(ts), tuple(ps), tuple(qs), tuple(ss), n_max, k_max, L_max, K,
                   depth, grid, stages, doc.get("output_dir"), arithmetic)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from exc
        return cls.from_dict(doc)

    def weight_object(self) -> Weight:
        return resolve_weight(self.weight.get("spec", self.weight))


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


@dataclass
class Report:
    """JSON summary, CSV tables and a plain-text verdict section."""

    summary: dict
    tables: Dict[str, str] = field(default_factory=dict)
    verdicts: List[str] = field(default_factory=list)
    exit_code: int = EXIT_OK

    def summary_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True) + "\n"

    def verdict_text(self) -> str:
        return "".join(line + "\n" for line in self.verdicts)

    def files(self) -> Dict[str, str]:
        out = {"summary.json": self.summary_json(), "verdicts.txt": self.verdict_text()}
        for name, text in sorted(self.tables.items()):
            out[f"{name}.csv"] = text
        return out

    def write(self, directory: str) -> None:
        """Write all files into a fresh temporary directory, then swap it in."""
        directory = os.path.abspath(directory)
        parent = os.path.dirname(directory)
        os.makedirs(parent, exist_ok=True)
        tmp = tempfile.mkdtemp(prefix=".report-", dir=parent)
        try:
            for name, text in self.files().items():
                with open(os.path.join(tmp, name), "w", newline="") as fh:
                    fh.write(text)
            if os.path.isdir(directory):
                shutil.rmtree(directory)
            os.replace(tmp, directory)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise


def _run_stage(name: str, fn):
    try:
        return fn()
    except StageError:
        raise
    except PwThermoError as exc:
        raise StageError(name, exc) from exc


def _arithmetic(m: PiecewiseMap, requested: str) -> str:
    mode = "exact" if m.exact else "float"
    if requested == "exact" and mode != "exact":
        raise ConfigError(f"arithmetic: exact mode requested but {m.name} has float data")
    return mode if requested == "auto" else requested


def _measures_csv(cands) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "kind", "entropy", "weight_integral", "lyapunov_smallest", "log_det_integral", "objective"])
    for c in cands:
        d = c.to_dict()
        w.writerow([d["id"], d["kind"], d["entropy"], d["weight_integral"], d["lyapunov_smallest"],
                    d["log_det_integral"], d["objective"]])
    return buf.getvalue()


def _eigen_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "modulus", "bracket_lower", "bracket_upper", "empirical"])
    for i, e in enumerate(rows):
        w.writerow([i, fmt_number(e.modulus), fmt_number(e.bracket[0]), fmt_number(e.bracket[1]),
                    e.empirical])
    return buf.getvalue()


def run_experiment(config: ExperimentConfig) -> Report:
    """Run the configured stages in dependency order and (optionally) write the report."""
    m, file_weight = _run_stage("cylinders", lambda: resolve_map(config.map))
    weight = config.weight_object()
    mode = _arithmetic(m, config.arithmetic)
    summary = {
        "map": m.name,
        "dimension": m.dimension,
        "arithmetic": mode,
        "weight": weight.kind,
        "n_max": config.n_max,
        "stages": list(config.stages),
    }
    report = Report(summary)
    stages = set(config.stages)
    if "cylinders" in stages:
        from .cylinders import cylinder_count

        summary["cylinder_counts"] = _run_stage(
            "cylinders", lambda: [cylinder_count(m, n) for n in range(1, config.n_max + 1)])
    if "complexity" in stages:
        prof = _run_stage("complexity", lambda: complexity_profile(m, config.n_max))
        summary["complexity"] = {"Db_n": list(prof.db_n), "De_n": list(prof.de_n),
                                 "Db_fekete": fmt_number(prof.db_fekete),
                                 "De_fekete": fmt_number(prof.de_fekete)}
        report.tables["complexity"] = prof.to_csv()
    if "pressure" in stages:
        ent = _run_stage("pressure", lambda: pressure_estimate(m, PotentialSpec.unit(), None, config.n_max))
        summary["entropy"] = ent.summary()
        report.tables["pressure_entropy"] = ent.to_csv()
        jac = PotentialSpec(weight)
        pw = _run_stage("pressure", lambda: pressure_estimate(m, jac, None, config.n_max))
        summary["weight_pressure"] = pw.summary()
        report.tables["pressure_weight"] = pw.to_csv()
        sb, _, _ = _run_stage("pressure", lambda: small_boundary_verdict(
            m, jac, config.n_max, config.K, config.k_max, config.L_max))
        summary["small_boundary"] = sb.to_dict()
        report.verdicts.append(f"small_boundary[{jac.describe()}]: {sb.verdict}")
        if sb.verdict == INCONCLUSIVE:
            report.exit_code = max(report.exit_code, EXIT_INCONCLUSIVE)
    if "bounds" in stages:
        reports = []
        for p in config.p_grid:
            for t in config.t_grid:
                for s in config.s_grid:
                    qg = config.q_grid or None
                    reports.append(_run_stage("bounds", lambda: compare_bounds(
                        m, weight, t, p, s, qg, config.n_max, 1, min(config.L_max, 4))))
        summary["bounds"] = [r.to_dict() for r in reports]
        report.tables["bounds"] = bound_sweep_csv(reports)
        for r in reports:
            report.verdicts.append(
                f"bounds[t={fmt_number(r.t)},s={fmt_number(r.s)},p={fmt_number(r.p)}]: "
                f"R_t_p in [{fmt_number(r.r_t_p.lower)}, {fmt_number(r.r_t_p.upper)}], "
                f"end-complexity bound {fmt_number(r.r_end_complexity.value)}, improves_on_end_complexity={r.improves_on_end_complexity}")
    if "ulam" in stages:
        part = ("markov", config.ulam_depth) if config.ulam_grid is None else ("grid", config.ulam_grid)
        op = _run_stage("ulam", lambda: assemble_ulam(m, weight, part))
        eig = _run_stage("ulam", lambda: dominant_spectrum(op, 2))
        summary["ulam"] = {"partition": list(part), "mode": op.mode, "size": op.size,
                           "dominant": fmt_number(eig[0].modulus),
                           "dominant_bracket": [fmt_number(x) for x in eig[0].bracket],
                           "subdominant_empirical": fmt_number(eig[1].modulus),
                           "mass_defect": fmt_number(op.mass_defect())}
        report.tables["eigenvalues"] = _eigen_csv(eig)
        report.tables["density"] = density_csv(op, eig[0].vector)
    if "varcheck" in stages:
        pot = PotentialSpec(weight)
        vr = _run_stage("varcheck", lambda: variational_check(
            m, pot, config.k_max, config.L_max, config.n_max, K=config.K))
        summary["varcheck"] = vr.to_dict()
        cands = _run_stage("varcheck", lambda: measure_candidates(m, pot, config.k_max, config.L_max))
        report.tables["measures"] = _measures_csv(cands)
        report.verdicts.append(f"varcheck[{pot.describe()}]: {vr.status} (gap {fmt_number(vr.gap)})")
        report.verdicts.append(f"ruelle: max objective {fmt_number(vr.ruelle.max_objective)} "
                               f"({'PASS' if vr.ruelle.passed else 'FAIL'})")
        if not vr.passed:
            code = EXIT_INCONCLUSIVE if vr.boundary.verdict == INCONCLUSIVE else EXIT_ERROR
            report.exit_code = max(report.exit_code, code)
    summary["exit_code"] = report.exit_code
    if config.output_dir:
        report.write(config.output_dir)
    return report


# ---------------------------------------------------------------------------
# argparse front end
# ---------------------------------------------------------------------------


def _potential_from_args(args, weight: Weight) -> PotentialSpec:
    p = parse_number(args.p) if args.p is not None else math.inf
    q = parse_number(args.q) if args.q is not None else 1
    return PotentialSpec(weight, parse_number(args.t), p, q)


def _emit(obj, args) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    sys.stdout.write(text + "\n")


def _write_csv(path: Optional[str], text: str) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _map_and_weight(args) -> Tuple[PiecewiseMap, Weight]:
    m, file_weight = resolve_map(args.map)
    if args.weight is not None:
        return m, resolve_weight(args.weight)
    return m, file_weight if file_weight is not None else resolve_weight("jac")


def cmd_catalog(args) -> int:
    for name in sorted(catalog.CATALOG):
        m = catalog.get(name)
        tag = "markov" if name in catalog.MARKOV_CATALOG else ""
        sys.stdout.write(f"{name}\tdim={m.dimension}\tpieces={len(m.pieces)}\t"
                         f"{'exact' if m.exact else 'float'}\t{tag}\n")
    return EXIT_OK


def cmd_pressure(args) -> int:
    m, w = _map_and_weight(args)
    pot = _potential_from_args(args, w)
    target = None if args.target == "full" else args.target
    est = pressure_estimate(m, pot, target, args.nmax, args.nmin)
    _write_csv(args.csv, est.to_csv())
    _emit({"map": m.name, **est.summary(),
           "per_n": [{"n": r.n, "a_n": fmt_number(r.a_n), "rate": fmt_number(r.rate),
                      "count": r.count, "exact_sum": "" if r.exact_sum is None else exact_str(r.exact_sum)}
                     for r in est.per_n]}, args)
    return EXIT_OK


def cmd_complexity(args) -> int:
    m, w = _map_and_weight(args)
    pot = None
    if args.weighted:
        pot = _potential_from_args(args, w)
    prof = complexity_profile(m, args.nmax, pot)
    _write_csv(args.csv, prof.to_csv())
    _emit({"map": m.name, "Db_n": list(prof.db_n), "De_n": list(prof.de_n),
           "Db_weighted_n": [fmt_number(v) for v in prof.db_weighted_n],
           "Db_fekete": fmt_number(prof.db_fekete), "De_fekete": fmt_number(prof.de_fekete)}, args)
    return EXIT_OK


def cmd_bounds(args) -> int:
    m, w = _map_and_weight(args)
    p = parse_number(args.p)
    q_grid = [parse_number(q) for q in args.q_grid] if args.q_grid else None
    reports = [compare_bounds(m, w, parse_number(t), p, parse_number(args.s), q_grid, args.nmax)
               for t in args.t]
    _write_csv(args.csv, bound_sweep_csv(reports))
    _emit([r.to_dict() for r in reports], args)
    return EXIT_OK


def cmd_ulam(args) -> int:
    m, w = _map_and_weight(args)
    part = ("markov", args.depth) if args.grid is None else ("grid", args.grid)
    op = assemble_ulam(m, w, part)
    eig = dominant_spectrum(op, args.eigs)
    _write_csv(args.density_csv, density_csv(op, eig[0].vector))
    _emit({"map": m.name, "partition": list(part), "mode": op.mode, "size": op.size,
           "nonzeros": int(op.matrix.nnz), "mass_defect": fmt_number(op.mass_defect()),
           "eigenvalues": [{"modulus": fmt_number(e.modulus),
                            "bracket": [fmt_number(x) for x in e.bracket],
                            "empirical": e.empirical} for e in eig]}, args)
    return EXIT_OK


def cmd_varcheck(args) -> int:
    m, w = _map_and_weight(args)
    pot = _potential_from_args(args, w)
    vr = variational_check(m, pot, args.kmax, args.Lmax, args.nmax, K=args.K)
    _emit(vr.to_dict(), args)
    if vr.passed:
        return EXIT_OK
    return EXIT_INCONCLUSIVE if vr.boundary.verdict == INCONCLUSIVE else EXIT_ERROR


def cmd_report(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.out:
        cfg = ExperimentConfig(**{**cfg.__dict__, "output_dir": args.out})
    rep = run_experiment(cfg)
    if not cfg.output_dir:
        sys.stdout.write(rep.summary_json())
    sys.stdout.write(rep.verdict_text())
    return rep.exit_code


def _common(sp, weight=True, potential=False):
    sp.add_argument("--map", required=True, help="catalog name or JSON map file")
    if weight:
        sp.add_argument("--weight", help="jac, one, const:<v>, detpow:<e>, JSON text or file")
    if potential:
        sp.add_argument("--t", default="0")
        sp.add_argument("--p", default=None, help="Jacobian exponent 1/p (default: none)")
        sp.add_argument("--q", default=None)
    sp.add_argument("--nmax", type=int, default=8)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pwthermo", description=__doc__.splitlines()[0])
    ap.add_argument("--threads", type=int, default=1, help="worker cap (results do not depend on it)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("catalog", help="list the built-in example maps")
    sp.add_argument("action", choices=["list"])
    sp.set_defaults(func=cmd_catalog)

    sp = sub.add_parser("pressure", help="finite-depth pressure with Fekete bracket")
    _common(sp, potential=True)
    sp.add_argument("--target", default="full", help="full, boundary or singular:K")
    sp.add_argument("--nmin", type=int, default=1)
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_pressure)

    sp = sub.add_parser("complexity", help="complexity at the beginning and at the end")
    _common(sp, potential=True)
    sp.add_argument("--weighted", action="store_true", help="also weight D^b by sup f_n")
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_complexity)

    sp = sub.add_parser("bounds", help="essential spectral radius bounds")
    _common(sp)
    sp.add_argument("--t", nargs="+", default=["3/10"])
    sp.add_argument("--p", default="2")
    sp.add_argument("--s", default="0")
    sp.add_argument("--q-grid", nargs="*", dest="q_grid")
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_bounds, nmax=10)

    sp = sub.add_parser("ulam", help="Ulam compression and dominant spectrum")
    sp.add_argument("--map", required=True)
    sp.add_argument("--weight")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--depth", type=int, default=3)
    g.add_argument("--grid", type=int)
    sp.add_argument("--eigs", type=int, choices=[1, 2], default=2)
    sp.add_argument("--density-csv", dest="density_csv")
    sp.set_defaults(func=cmd_ulam)

    sp = sub.add_parser("varcheck", help="variational principle and Ruelle checks")
    _common(sp, potential=True)
    sp.add_argument("--kmax", type=int, default=2)
    sp.add_argument("--Lmax", type=int, default=6)
    sp.add_argument("--K", type=int, default=0)
    sp.set_defaults(func=cmd_varcheck)

    sp = sub.add_parser("report", help="run a JSON experiment config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PwThermoError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
