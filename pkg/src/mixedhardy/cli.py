"""Command-line front end.

    mixedhardy constant --d 5 --k 2 --p 3 --a 0 --b 1 --gamma 4
    mixedhardy bstar --d 3 --k 2 --p 2 --a 1
    mixedhardy scan --d 3 --k 2 --p 2 --a 1 --b 1 --axis gamma --start 1 --stop 3 --count 9
    mixedhardy verify --suite identities

Records go to standard output (or ``--output``) as CSV or JSON lines; every
float is written with 17 significant digits.  Exit codes: 0 success,
1 invalid parameters, 2 non-convergence, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field

from . import __version__, fullspace, suites
from .estimate import Flag
from .params import ParameterError, ProblemParams
from .solver import DEFAULT_LEVELS, compute_bstar, compute_constant, scan

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERIFY_FAILED = 3

CSV_FIELDS = ("d", "k", "p", "a", "b", "gamma", "value", "provenance", "error_indicator", "flags")
BSTAR_FIELDS = ("d", "k", "p", "a", "lo", "hi", "margin", "iterations", "closed_form_ref", "conclusive")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are parameter errors: exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    problem: dict
    options: dict = field(default_factory=dict)
    format: str = "csv"
    output: str | None = None


def fmt(x) -> str:
    """17 significant digits; non-finite values as 'nan'/'inf'."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def to_json(obj) -> str:
    """JSON with floats at 17 significant digits and NaN/inf as null."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    return to_json(float(obj))


def _problem_fields(params: ProblemParams) -> dict:
    return {"d": params.d, "k": params.k, "p": params.p, "a": params.a, "b": params.b, "gamma": params.gamma}


def constant_record(est) -> dict:
    rec = _problem_fields(est.params)
    rec.update(
        value=est.value,
        provenance=est.provenance.value,
        error_indicator=est.error_indicator,
        flags=est.flag_labels(),
        levels=list(est.levels),
        extrapolated=est.extrapolated,
        bounds=[{"kind": c.kind, "value": c.value, "satisfied": c.satisfied} for c in est.bound_checks],
        paper_refs=list(est.refs),
    )
    return rec


def _csv_row(rec: dict) -> list[str]:
    row = []
    for key in CSV_FIELDS:
        v = rec[key]
        if key == "flags":
            row.append(";".join(v))
        elif isinstance(v, float):
            row.append(fmt(v))
        else:
            row.append(str(v))
    return row


class Emitter:
    def __init__(self, fmt_name: str, stream, config: RunConfig):
        self.format = fmt_name
        self.stream = stream
        self.config = asdict(config)
        self._writer = csv.writer(stream, lineterminator="\n") if fmt_name == "csv" else None
        self._header = False

    def record(self, rec: dict, fields=CSV_FIELDS):
        if self.format == "json":
            self.stream.write(to_json({**rec, "config": self.config}) + "\n")
            return
        if not self._header:
            self._writer.writerow(fields)
            self._header = True
        if fields is CSV_FIELDS:
            self._writer.writerow(_csv_row(rec))
        else:
            self._writer.writerow([fmt(rec[f]) if isinstance(rec[f], float) else str(rec[f]) for f in fields])

    def summary(self, name: str, passed: bool, detail: str):
        if self.format == "json":
            self.stream.write(to_json({"diagnostic": name, "passed": passed, "detail": detail}) + "\n")
        else:
            self.stream.write(f"# {name},{'pass' if passed else 'fail'},{detail}\n")


def _add_problem(parser, with_b_gamma: bool = True, required_b_gamma: bool = True):
    g = parser.add_argument_group("problem")
    g.add_argument("--d", type=int, required=True, help="total dimension")
    g.add_argument("--k", type=int, required=True, help="dimension of the y-block, 1 <= k < d")
    g.add_argument("--p", type=float, required=True, help="exponent p > 1")
    g.add_argument("--a", type=float, required=True, help="cylindrical weight exponent")
    if with_b_gamma:
        g.add_argument("--b", type=float, required=required_b_gamma, default=0.0, help="spherical weight exponent")
        g.add_argument("--gamma", type=float, required=required_b_gamma, default=0.0, help="denominator exponent")


def _add_mesh(parser):
    g = parser.add_argument_group("discretization")
    g.add_argument("--levels", type=int, default=None, help=f"refinement levels (default {DEFAULT_LEVELS})")
    g.add_argument("--cells", type=int, default=None, help="cells on the coarsest mesh (default by p)")
    g.add_argument("--log-theta-min", type=float, default=None, help="log of the first mesh node (default by p)")


def _add_output(parser):
    g = parser.add_argument_group("output")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--output", default=None, help="file to write (default: standard output)")
    g.add_argument("--verbose", action="store_true", help="log progress to standard error")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixedhardy", description="Sharp constants of mixed cylindrical-spherical Hardy inequalities.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constant", help="best constant for one parameter set")
    _add_problem(p)
    _add_mesh(p)
    p.add_argument("--verify", action="store_true", help="also minimize numerically where a closed form exists")
    p.add_argument("--tol", type=float, default=1e-10, help="relative stopping tolerance of the descent solver")
    p.add_argument("--max-iter", type=int, default=50_000, help="iteration cap of the descent solver")
    _add_output(p)

    p = sub.add_parser("bstar", help="bracket the end of the bottom-case plateau")
    _add_problem(p, with_b_gamma=False)
    _add_mesh(p)
    p.add_argument("--tol", type=float, default=5e-3, help="target bracket width")
    p.add_argument("--margin", type=float, default=0.0, help="minimal margin below the plateau")
    p.add_argument("--eps-cap", type=float, default=0.01, help="distance kept from b = p H_0")
    _add_output(p)

    p = sub.add_parser("scan", help="sweep b (with gamma = b) or gamma")
    _add_problem(p, required_b_gamma=False)
    _add_mesh(p)
    p.add_argument("--axis", choices=("b", "gamma"), required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    _add_output(p)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", choices=("identities", "bounds", "scaling", "all"), default="all")
    p.add_argument("--samples", type=int, default=1_000_000, help="Monte-Carlo samples per configuration")
    p.add_argument("--seed", type=int, default=fullspace.DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--levels", type=int, default=DEFAULT_LEVELS)
    p.add_argument("--output", default=None)
    p.add_argument("--verbose", action="store_true")
    return parser


def _mesh_opts(args) -> dict:
    out = {}
    if args.levels is not None:
        out["levels"] = args.levels
    if args.cells is not None:
        out["cells"] = args.cells
    if args.log_theta_min is not None:
        out["log_theta_min"] = args.log_theta_min
    return out


def _params(args, b=None, gamma=None) -> ProblemParams:
    return ProblemParams(
        args.d, args.k, args.p, args.a,
        args.b if b is None else b,
        args.gamma if gamma is None else gamma,
    )


def _config(args) -> RunConfig:
    raw = vars(args).copy()
    command = raw.pop("command")
    problem = {k: raw.pop(k) for k in ("d", "k", "p", "a", "b", "gamma") if k in raw}
    fmt_name = raw.pop("format", "csv")
    output = raw.pop("output", None)
    raw.pop("verbose", None)
    return RunConfig(command, problem, raw, fmt_name, output)


def cmd_constant(args, out: Emitter) -> int:
    est = compute_constant(_params(args), verify=args.verify, tol=args.tol, max_iter=args.max_iter, **_mesh_opts(args))
    out.record(constant_record(est))
    if Flag.NOT_CONVERGED in est.flags:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_bstar(args, out: Emitter) -> int:
    params = ProblemParams(args.d, args.k, args.p, args.a, 0.0, 0.0)
    est = compute_bstar(params, tol=args.tol, margin=args.margin, eps_cap=args.eps_cap, **_mesh_opts(args))
    rec = {
        "d": params.d, "k": params.k, "p": params.p, "a": params.a,
        "lo": est.bracket[0], "hi": est.bracket[1], "margin": est.margin, "iterations": est.iterations,
        "closed_form_ref": est.closed_form_ref if est.closed_form_ref is not None else math.nan,
        "conclusive": est.conclusive,
        "paper_refs": ["eq:b_star"] if est.closed_form_ref is not None else [],
    }
    out.record(rec, BSTAR_FIELDS)
    return EXIT_OK if est.conclusive else EXIT_NOT_CONVERGED


def cmd_scan(args, out: Emitter) -> int:
    template = _params(args)
    opts = _mesh_opts(args)
    opts["verify"] = args.verify
    res = scan(template, args.axis, args.start, args.stop, args.count, workers=args.workers, **opts)
    code = EXIT_OK
    for x, row, err in zip(res.grid, res.rows, res.errors):
        if row is None:
            p = template.replace(b=x, gamma=x) if args.axis == "b" else template.replace(gamma=x)
            rec = {**_problem_fields(p), "value": math.nan, "provenance": "invalid",
                   "error_indicator": math.nan, "flags": ["invalid"], "error": err}
            out.record(rec)
            continue
        out.record(constant_record(row))
        if Flag.NOT_CONVERGED in row.flags:
            code = EXIT_NOT_CONVERGED
    for diag in res.diagnostics:
        out.summary(diag.name, diag.passed, diag.detail)
    return code


def cmd_verify(args, stream) -> int:
    checks = suites.run(args.suite, samples=args.samples, seed=args.seed, workers=args.workers, levels=args.levels)
    for c in checks:
        stream.write(c.line() + "\n")
    failed = sum(not c.passed for c in checks)
    stream.write(f"{len(checks) - failed}/{len(checks)} checks passed\n")
    return EXIT_OK if failed == 0 else EXIT_VERIFY_FAILED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    buf = io.StringIO()
    try:
        if args.command == "verify":
            code = cmd_verify(args, buf)
        else:
            config = _config(args)
            emitter = Emitter(config.format, buf, config)
            handler = {"constant": cmd_constant, "bstar": cmd_bstar, "scan": cmd_scan}[args.command]
            code = handler(args, emitter)
    except (ParameterError, ValueError) as exc:
        print(f"mixedhardy: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = buf.getvalue()
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
