"""Command-line entry point: scenario files in, deterministic reports out.

Exit codes: 0 success, 2 verified mismatch (``--expect`` or residual over
tolerance), 1 bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import pointwise as P
from .algebra import (BracketContext, check_omega_bracket_identity, jacobi_bracket, jacobiator,
                      poisson_bracket)
from .darboux import DarbouxSpec, darboux_contravariant, darboux_covariant, darboux_chart
from .expr.chart import Chart, Sampler, ScalarField, parse_expr
from .expr.parser import ParseError
from .expr.program import DomainError
from .exterior import KForm, KVector
from .spacetime import EinsteinInput, GalileiInput, MetricError, phase_sampler, verify_theorems
from .structures import (ContravariantPair, CovariantPair, NonRegularError, PairInvariantError,
                         classify_contravariant, classify_covariant, dual_of_contravariant,
                         dual_of_covariant)

log = logging.getLogger("oddgeom")

SCHEMA_VERSION = 1
KINDS = ("covariant", "contravariant", "darboux", "galilei", "einstein")
EXIT_OK, EXIT_INPUT, EXIT_MISMATCH = 0, 1, 2


class InputError(Exception):
    """Anything wrong with the scenario file or flags."""


# scenario files -----------------------------------------------------------------

@dataclass
class Scenario:
    kind: str
    chart: Chart
    box: tuple | None
    constraint: ScalarField | None
    data: dict
    source: str = "<memory>"

    def sampler(self, seed: int, count: int) -> Sampler:
        if self.kind in ("galilei", "einstein"):
            return phase_sampler(self.data["input"], self.kind, seed=seed, count=count)
        box = self.box or ((-1.0, 1.0),) * self.chart.dim
        return Sampler(self.chart, box, self.constraint, seed=seed, count=count)


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise InputError(f"{where}: missing required key {key!r}")
    return d[key]


def _expr_text(v, where):
    if isinstance(v, bool) or not isinstance(v, (str, int, float)):
        raise InputError(f"{where}: expected an expression string or number, got {type(v).__name__}")
    return str(v)


def _parse(chart, v, where):
    text = _expr_text(v, where)
    try:
        return parse_expr(text, chart)
    except ParseError as exc:
        raise InputError(f"{where}: {exc} (offset {exc.offset}) in {text!r}") from None


def _vector_list(chart, v, where):
    if not isinstance(v, list) or len(v) != chart.dim:
        raise InputError(f"{where}: need a list of {chart.dim} expressions")
    return [_parse(chart, x, f"{where}[{i}]") for i, x in enumerate(v)]


def _upper(chart, v, where, size=None):
    """Upper triangle of a square matrix; the lower triangle is ignored."""
    n = size or chart.dim
    if not isinstance(v, list) or len(v) != n or any(not isinstance(r, list) or len(r) != n for r in v):
        raise InputError(f"{where}: need a {n}x{n} matrix")
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            out[(i, j)] = _parse(chart, v[i][j], f"{where}[{i}][{j}]")
    return out


def _matrix_strings(v, where, n, antisym=False):
    if not isinstance(v, list) or len(v) != n or any(not isinstance(r, list) or len(r) != n for r in v):
        raise InputError(f"{where}: need a {n}x{n} matrix")
    return [[_expr_text(v[i][j], f"{where}[{i}][{j}]") if (j > i or (j == i and not antisym)) else "0"
             for j in range(n)] for i in range(n)]


def _scales(d):
    out = {}
    for k in ("m", "hbar", "c"):
        v = d.get(k, 1.0)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise InputError(f"scale {k} must be a positive number, got {v!r}")
        out[k] = float(v)
    return out


def parse_scenario(doc, source: str = "<memory>") -> Scenario:
    if not isinstance(doc, dict):
        raise InputError(f"{source}: top level must be a mapping")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise InputError(f"{source}: unsupported or missing schema version {version!r} "
                         f"(expected {SCHEMA_VERSION})")
    present = [k for k in KINDS if k in doc]
    if len(present) != 1:
        raise InputError(f"{source}: need exactly one of {KINDS}, found {present or 'none'}")
    kind = present[0]
    body = doc[kind]
    if not isinstance(body, dict):
        raise InputError(f"{source}: {kind} must be a mapping")
    constants = doc.get("constants") or {}
    if not isinstance(constants, dict):
        raise InputError(f"{source}: constants must be a mapping")

    try:
        if kind in ("galilei", "einstein"):
            sc = _scales(body)
            if kind == "galilei":
                g = _matrix_strings(_need(body, "g", kind), "galilei.g", 3)
                phi = body.get("phi")
                phi = _matrix_strings(phi, "galilei.phi", 4, antisym=True) if phi is not None else None
                inp = GalileiInput(g, phi, **sc)
            else:
                inp = EinsteinInput(_matrix_strings(_need(body, "g", kind), "einstein.g", 4), **sc)
            return Scenario(kind, inp.chart, None, None, {"input": inp}, source)

        if kind == "darboux":
            n = _need(body, "n", kind)
            s = body.get("s", n)
            if not all(isinstance(x, int) and not isinstance(x, bool) for x in (n, s)):
                raise InputError("darboux.n and darboux.s must be integers")
            chart = darboux_chart(n, constants) if n >= 1 else None
            if chart is None:
                raise InputError("darboux.n must be at least 1")
            if "chart" in doc and tuple(doc["chart"]) != chart.coords:
                raise InputError(f"darboux charts have coordinates {list(chart.coords)}")
            funcs = _need(body, "omega_funcs", kind)
            if not isinstance(funcs, list) or len(funcs) != 2 * n:
                raise InputError(f"darboux.omega_funcs: need {2 * n} expressions")
            funcs = [_parse(chart, f, f"darboux.omega_funcs[{i}]") for i, f in enumerate(funcs)]
            spec = DarbouxSpec(n, s, tuple(funcs), chart)
            data = {"spec": spec}
        else:
            coords = _need(doc, "chart", source)
            if not isinstance(coords, list) or not all(isinstance(c, str) for c in coords):
                raise InputError("chart must be a list of coordinate names")
            chart = Chart(tuple(coords), constants)
            if kind == "covariant":
                w = KForm.from_list(chart, _vector_list(chart, _need(body, "omega", kind), "covariant.omega"))
                W = KForm(chart, 2, _upper(chart, _need(body, "Omega", kind), "covariant.Omega"))
                data = {"pair": CovariantPair(w, W)}
            else:
                E = KVector.from_list(chart, _vector_list(chart, _need(body, "E", kind), "contravariant.E"))
                L = KVector(chart, 2, _upper(chart, _need(body, "Lambda", kind), "contravariant.Lambda"))
                w = body.get("omega")
                w = KForm.from_list(chart, _vector_list(chart, w, "contravariant.omega")) if w is not None else None
                data = {"pair": ContravariantPair(E, L), "omega": w}
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{source}: {exc}") from None

    box = doc.get("domain")
    if box is not None:
        if not isinstance(box, list) or len(box) != chart.dim:
            raise InputError(f"domain: need {chart.dim} [lo, hi] intervals")
        try:
            box = tuple((float(lo), float(hi)) for lo, hi in box)
        except (TypeError, ValueError):
            raise InputError("domain: intervals must be pairs of numbers") from None
    constraint = doc.get("constraint")
    if constraint is not None:
        constraint = _parse(chart, constraint, "constraint")
    return Scenario(kind, chart, box, constraint, data, source)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: invalid YAML: {exc}") from None
    return parse_scenario(doc, str(path))


# reports ------------------------------------------------------------------------

def _clean(x):
    """JSON-safe, deterministic form of report values."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in sorted(x.items(), key=lambda kv: str(kv[0]))}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x != x or x in (float("inf"), float("-inf")):
            return repr(x)
        return x
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


def render_json(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _text_lines(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _flat_list(v):
                yield f"{pad}{k}:"
                yield from _text_lines(v, indent + 1)
            else:
                yield f"{pad}{k}: {_scalar_text(v)}"
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and v and not _flat_list(v):
                yield f"{pad}-"
                yield from _text_lines(v, indent + 1)
            else:
                yield f"{pad}- {_scalar_text(v)}"


def _flat_list(v):
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _scalar_text(v):
    if isinstance(v, list):
        return "[" + ", ".join(_scalar_text(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v) if v != {} and v != [] else json.dumps(v)


def render_text(report: dict) -> str:
    return "\n".join(_text_lines(_clean(report))) + "\n"


def _base(cmd: str, sc: Scenario | None, args) -> dict:
    rep = {"tool": "oddgeom", "version": __version__, "command": cmd,
           "sampler": {"seed": args.seed, "count": args.samples, "tol": args.tol}}
    if sc is not None:
        rep["scenario"] = {"kind": sc.kind, "source": sc.source, "chart": list(sc.chart.coords)}
    return rep


def _labels_ok(labels, expect):
    missing = [e for e in expect if e not in labels]
    return missing


# commands -----------------------------------------------------------------------

def _covariant_of(sc: Scenario):
    if sc.kind == "covariant":
        return sc.data["pair"]
    if sc.kind == "darboux":
        return darboux_covariant(sc.data["spec"])
    return None


def _contravariant_of(sc: Scenario):
    """(pair, omega) or None."""
    if sc.kind == "contravariant":
        return sc.data["pair"], sc.data["omega"]
    if sc.kind == "darboux":
        t = darboux_contravariant(sc.data["spec"])
        return t.pair, t.omega
    return None


def cmd_classify(sc: Scenario, args) -> tuple:
    rep = _base("classify", sc, args)
    s = sc.sampler(args.seed, args.samples)
    labels = []
    if sc.kind in ("galilei", "einstein"):
        tr = verify_theorems(sc.data["input"], sc.kind, s, args.tol)
        rep["covariant"] = tr.covariant
        rep["contravariant"] = tr.contravariant
        labels = tr.covariant["labels"] + tr.contravariant["labels"]
    else:
        cov = _covariant_of(sc)
        if cov is not None:
            r = classify_covariant(cov, s, args.tol)
            rep["covariant"] = r.to_dict()
            labels += list(r.labels)
        con = _contravariant_of(sc)
        if con is not None:
            r = classify_contravariant(con[0], con[1], s, args.tol)
            rep["contravariant"] = r.to_dict()
            labels += list(r.labels)
    rep["labels"] = labels
    missing = _labels_ok(labels, args.expect or [])
    rep["expect"] = {"requested": list(args.expect or []), "missing": missing}
    return rep, (EXIT_MISMATCH if missing else EXIT_OK)


def _table_dump(t, limit):
    v = t.packed()[:limit]
    return [list(map(float, row)) for row in v]


def cmd_dualize(sc: Scenario, args) -> tuple:
    rep = _base("dualize", sc, args)
    s = sc.sampler(args.seed, args.samples)
    cov = _covariant_of(sc) if sc.kind != "darboux" or args.start == "covariant" else None
    con = _contravariant_of(sc) if sc.kind == "contravariant" or (
        sc.kind == "darboux" and args.start == "contravariant") else None
    if cov is None and con is None:
        raise InputError(f"dualize needs a covariant, contravariant or darboux scenario, got {sc.kind}")
    limit = args.show
    if cov is not None:
        d = dual_of_covariant(cov, s, args.tol)
        rep["direction"] = "covariant->contravariant"
        rep["dual"] = {"E": _table_dump(d.E, limit), "Lambda": _table_dump(d.Lambda, limit)}
        back = dual_of_contravariant(d.contravariant, s, args.tol) if args.roundtrip else None
        original = (d.omega, d.Omega)
        again = (back.omega, back.Omega) if back else None
    else:
        d = dual_of_contravariant(con[0], s, args.tol)
        rep["direction"] = "contravariant->covariant"
        rep["dual"] = {"omega": _table_dump(d.omega, limit), "Omega": _table_dump(d.Omega, limit)}
        back = dual_of_covariant(d.covariant, s, args.tol) if args.roundtrip else None
        original = (d.E, d.Lambda)
        again = (back.E, back.Lambda) if back else None
    rep["dual"]["points"] = [list(map(float, p)) for p in s.points[:limit]]
    rep["axioms"] = d.residuals
    code = EXIT_OK if max(d.residuals.values()) <= max(args.tol, 1e-8) else EXIT_MISMATCH
    if again is not None:
        rt = max(P.residual(a, b) for a, b in zip(again, original))
        rep["roundtrip_residual"] = rt
        if rt > max(args.tol, 1e-8):
            code = EXIT_MISMATCH
    return rep, code


def cmd_bracket(sc: Scenario, args) -> tuple:
    con = _contravariant_of(sc)
    if con is None:
        raise InputError(f"bracket needs a contravariant or darboux scenario, got {sc.kind}")
    pair, omega = con
    if args.omega_identity and omega is None:
        raise InputError("--omega-identity needs a scenario with omega")
    rep = _base("bracket", sc, args)
    s = sc.sampler(args.seed, args.samples)
    try:
        ctx = BracketContext(pair, omega)
    except PairInvariantError as exc:
        raise InputError(str(exc)) from None
    ch = sc.chart
    f = _parse(ch, args.f, "--f")
    g = _parse(ch, args.g, "--g")
    which = "jacobi" if args.jacobi else "poisson"
    br = jacobi_bracket if args.jacobi else poisson_bracket
    val = br(ctx, f, g)
    vals = ch.evaluate([val.expr], s.points)[:, 0]
    rep["bracket"] = {"kind": which, "f": f.text(), "g": g.text(), "expression": val.text(),
                      "values": vals[:args.show].tolist()}
    code = EXIT_OK
    if args.h is not None:
        h = _parse(ch, args.h, "--h")
        J = jacobiator(ctx, which, f, g, h)
        jv = ch.evaluate([J.expr], s.points)[:, 0]
        rep["jacobiator"] = {"h": h.text(), "expression": J.text(), "max_abs": float(np.max(np.abs(jv))),
                             "values": jv[:args.show].tolist()}
    if args.omega_identity:
        rep["omega_identity_residual"] = check_omega_bracket_identity(ctx, s, args.tol, rng=np.random.default_rng(args.seed))
    return rep, code


def _scenario_input(args):
    which = args.which
    if args.metric == "flat":
        inp = GalileiInput.flat() if which == "galilei" else EinsteinInput.minkowski()
        return inp, None
    sc = load_scenario(args.metric)
    if sc.kind != which:
        raise InputError(f"{args.metric}: expected a {which} scenario, got {sc.kind}")
    return sc.data["input"], sc


def cmd_scenario(args) -> tuple:
    inp, sc = _scenario_input(args)
    rep = _base("scenario", sc, args)
    rep["which"] = args.which
    rep["metric"] = "flat" if args.metric == "flat" else args.metric
    s = phase_sampler(inp, args.which, seed=args.seed, count=args.samples)
    tr = verify_theorems(inp, args.which, s, args.tol)
    rep["theorems"] = tr.to_dict()
    labels = tr.covariant["labels"] + tr.contravariant["labels"]
    rep["labels"] = labels
    missing = _labels_ok(labels, args.expect or [])
    rep["expect"] = {"requested": list(args.expect or []), "missing": missing}
    return rep, (EXIT_OK if tr.passed and not missing else EXIT_MISMATCH)


# argument parsing ---------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--samples", type=_positive_int, default=32, help="sample points (default 32)")
    common.add_argument("--tol", type=_positive_float, default=1e-9, help="residual tolerance (default 1e-9)")
    common.add_argument("--seed", type=_nonneg_int, default=42, help="sampler seed (default 42)")
    common.add_argument("--format", choices=("text", "json", "structured"), default="text",
                        help="report format; structured is an alias of json")
    common.add_argument("--output", "-o", help="write the report to this file instead of stdout")
    common.add_argument("--show", type=_nonneg_int, default=3,
                        help="sample points echoed in tabulated output (default 3)")

    p = argparse.ArgumentParser(prog="oddgeom", description=(
        "Classify, dualise and verify geometric structures on odd-dimensional charts."))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="label the pair(s) in a scenario file")
    c.add_argument("file")
    c.add_argument("--expect", action="append", metavar="LABEL",
                   help="required label; repeatable; exit 2 if missing")

    d = sub.add_parser("dualize", parents=[common], help="dual pair at the sample points")
    d.add_argument("file")
    d.add_argument("--roundtrip", action="store_true", help="also report the double-dual residual")
    d.add_argument("--start", choices=("covariant", "contravariant"), default="covariant",
                   help="which half of a darboux scenario to dualise")

    b = sub.add_parser("bracket", parents=[common], help="Poisson/Jacobi brackets of functions")
    b.add_argument("file")
    b.add_argument("--f", required=True)
    b.add_argument("--g", required=True)
    b.add_argument("--h", help="third function; prints the jacobiator")
    b.add_argument("--jacobi", action="store_true", help="use the Jacobi bracket")
    b.add_argument("--omega-identity", action="store_true", help="residual of {f,g} = -dω(X_f, X_g)")

    s = sub.add_parser("scenario", parents=[common], help="phase-space theorem checks")
    s.add_argument("which", choices=("galilei", "einstein"))
    s.add_argument("--metric", default="flat", help="'flat' or a scenario file")
    s.add_argument("--expect", action="append", metavar="LABEL")
    return p


def run(argv=None) -> tuple:
    """(exit code, report text); never raises for bad input."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_INPUT if exc.code not in (0, None) else EXIT_OK), ""
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "scenario":
            rep, code = cmd_scenario(args)
        else:
            sc = load_scenario(args.file)
            cmd = {"classify": cmd_classify, "dualize": cmd_dualize, "bracket": cmd_bracket}[args.command]
            rep, code = cmd(sc, args)
    except (InputError, PairInvariantError, NonRegularError, MetricError, DomainError,
            ArithmeticError, ValueError) as exc:
        kind = type(exc).__name__
        rep = {"tool": "oddgeom", "version": __version__, "command": args.command,
               "error": {"type": kind, "message": str(exc)}}
        if isinstance(exc, DomainError):
            rep["error"]["point"] = exc.point
        code = EXIT_INPUT
    rep["exit_code"] = code
    out = render_json(rep) if args.format in ("json", "structured") else render_text(rep)
    if args.output:
        Path(args.output).write_text(out)
        return code, ""
    return code, out


def main(argv=None) -> int:
    code, out = run(argv)
    if out:
        stream = sys.stdout if code != EXIT_INPUT else sys.stderr
        stream.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
