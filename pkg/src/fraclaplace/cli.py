"""Command-line harness: parse a scenario, run it, emit a report.

Exit status is 0 when every asserted inequality held, 1 when one failed
(or a tolerance could not be certified) and 2 for invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import bounds as bnd
from .errors import FracLaplaceError, ToleranceError
from .funcspace import lp_norm
from .gls import embedding_check
from .report import FORMATS, CheckLine, Quantity, Report, Table, emit, emit_batch
from .scenario import COMMANDS, Scenario, ScenarioError, from_dict
from .specfun import compute_constants
from .transform import (FLTEngine, flt_limit_check, flt_values, generic_kernel_values,
                        output_norm)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
SCALING_TOL = 1e-3
GLS_TOL = 1e-4


def _fname(f) -> str:
    return json.dumps(f.to_dict(), separators=(",", ":"))


def _checks(items) -> list:
    return [CheckLine(c.name, float(c.lhs), float(c.rhs), c.holds) for c in items]


def _constants(sc: Scenario, rep: Report):
    consts = compute_constants(sc.params, sc.p, sc.mu)
    rep.quantities += [Quantity(n, float(v), prov) for n, v, prov in consts.items()]


def _eval(sc: Scenario, rep: Report):
    if sc.kernel is not None:
        prov = "Eq (6.1)"
    else:
        prov = "Eq (4.1)" if sc.mu is not None and sc.mu != 1.0 else "Eq (1.1)"
    table = Table(("function", "s", "value", "error"), ("input", "input", prov, "quadrature"))
    for f in sc.functions:
        if sc.kernel is not None:
            vals = generic_kernel_values(sc.kernel, f, sc.s, rel_tol=sc.rel_tol)
            errs = np.full(vals.shape, np.nan)
        else:
            _, vals, errs = flt_values(sc.params, f, sc.s, mu=sc.mu or 1.0)
            bad = errs > sc.rel_tol * np.abs(vals) + 1e-14
            if np.any(bad):
                i = int(np.argmax(bad))
                raise ToleranceError(f"error estimate {errs[i]:.3e} at s = {sc.s[i]:g} exceeds "
                                     f"rel_tol {sc.rel_tol:.1e}", vals[i], errs[i])
        for s, v, e in zip(sc.s, vals, errs):
            table.rows.append((_fname(f), float(s), float(v), float(e)))
    rep.tables.append(table)


def _norm(sc: Scenario, rep: Report):
    mu = sc.mu or 1.0
    table = Table(("function", "q", "transform_norm", "error"),
                  ("input", "input", "Eq (4.1)" if mu != 1.0 else "Eq (1.1)", "quadrature"))
    for f in sc.functions:
        engine = FLTEngine.from_function(sc.params, f, mu)
        for q in sc.q:
            out = output_norm(engine, q, rel_tol=max(sc.rel_tol, 1e-13))
            table.rows.append((_fname(f), float(q), out.value, out.error))
        if sc.p is not None:
            rep.quantities.append(Quantity(f"|f|_p {_fname(f)}", lp_norm(f, sc.p), "quadrature"))
    rep.tables.append(table)


def _bound_report(rep: Report, br: bnd.BoundReport):
    rep.quantities += [Quantity(n, float(v), prov) for n, v, prov in br.constants.items()]
    rep.quantities.append(Quantity("empirical_ratio", br.empirical_ratio, "empirical",
                                   br.quadrature_error_budget * br.empirical_ratio))
    rep.quantities.append(Quantity("quadrature_rel_error", br.quadrature_error_budget,
                                   "empirical"))
    rep.checks += _checks(br.checks())
    rep.notes.append(f"witness {_fname(br.witness)}")
    rep.notes.append(f"evaluations {br.evaluations}, converged {str(br.converged).lower()}")
    rep.notes.extend(br.warnings)


def _bounds(sc: Scenario, rep: Report):
    _bound_report(rep, bnd.empirical_norm(sc.params, sc.p, budget=sc.budget, seed=sc.seed,
                                          bump_samples=sc.bump_samples))


def _weighted(sc: Scenario, rep: Report):
    _bound_report(rep, bnd.weighted_empirical_norm(sc.params, sc.p, sc.mu, budget=sc.budget,
                                                   seed=sc.seed, bump_samples=sc.bump_samples))
    rep.notes.append("theta is the closed form as printed; M is the quadrature of the "
                     "defining integral on (0, inf)")


def _sharpness(sc: Scenario, rep: Report):
    rows = bnd.sharpness_profile(sc.params, sc.p_grid)
    table = Table(("p", "ratio", "z", "lower37"), ("input", "Eq (3.4)", "Eq (2.3)", "Eq (3.7)"))
    for row in rows:
        table.rows.append((row.p, row.ratio, row.z, row.lower37))
        tol = 1e-6
        rep.checks.append(CheckLine(f"ratio <= z at p={row.p:g}", row.ratio, row.z + tol,
                                    row.ratio <= row.z + tol))
        rep.checks.append(CheckLine(f"lower37 <= ratio at p={row.p:g}", row.lower37 - tol,
                                    row.ratio, row.lower37 - tol <= row.ratio))
    rep.tables.append(table)


def _scaling(sc: Scenario, rep: Report):
    for f in sc.functions:
        probe = bnd.ScalingProbe(sc.lambda_grid, sc.p, sc.q_candidates, f)
        table = Table(("q", "slope", "expected", "residual", "conjugate"),
                      ("input", "empirical", "Eq (3.3)", "empirical", "input"))
        for row in bnd.scaling_sweep(probe, sc.params):
            table.rows.append((row.q, row.slope, row.expected, row.residual, row.conjugate))
            rep.checks.append(CheckLine(f"|slope - expected| at q={row.q:g}", row.residual,
                                        SCALING_TOL, row.residual <= SCALING_TOL))
        rep.tables.append(table)
        rep.notes.append(f"function {_fname(f)}")


def _gls(sc: Scenario, rep: Report):
    table = Table(("function", "lhs", "rhs", "ratio"),
                  ("input", "Eq (5.6)", "Eq (5.1)", "empirical"))
    for f in sc.functions:
        res = embedding_check(f, sc.psi, sc.params, sc.grid_size)
        table.rows.append((_fname(f), res.lhs, res.rhs, res.ratio))
        rhs = res.rhs * (1.0 + GLS_TOL)
        rep.checks.append(CheckLine(f"lhs <= rhs (1 + {GLS_TOL:g}) for {_fname(f)}", res.lhs,
                                    rhs, res.lhs <= rhs))
    rep.tables.append(table)


def _limit(sc: Scenario, rep: Report):
    table = Table(("function", "s", "kappa", "gap"), ("input", "input", "input", "Eq (1.2)"))
    for f in sc.functions:
        for s in sc.s:
            for k, gap in flt_limit_check(sc.kappas, sc.r, f, s):
                table.rows.append((_fname(f), float(s), k, gap))
    rep.tables.append(table)


_RUNNERS = {"constants": _constants, "eval": _eval, "norm": _norm, "bounds": _bounds,
            "sharpness": _sharpness, "scaling": _scaling, "weighted": _weighted, "gls": _gls,
            "limit": _limit}


def run(sc: Scenario) -> Report:
    """Dispatch a validated scenario; module errors become error reports."""
    rep = Report(sc.command, sc.to_dict())
    t0 = time.perf_counter()
    try:
        _RUNNERS[sc.command](sc, rep)
    except FracLaplaceError as exc:
        rep.error, rep.error_kind = str(exc), type(exc).__name__
    rep.wall_time = time.perf_counter() - t0
    return rep


def exit_code(rep: Report) -> int:
    if rep.error is None:
        return EXIT_OK if rep.status == "ok" else EXIT_VIOLATION
    return EXIT_VIOLATION if rep.error_kind == ToleranceError.__name__ else EXIT_INPUT


def run_document(data, command: str | None = None) -> Report:
    """Parse a decoded scenario (input errors become error reports) and run it."""
    echo = data if isinstance(data, dict) else {}
    try:
        if command is not None and isinstance(data, dict):
            if data.get("command", command) != command:
                raise ScenarioError(f"scenario command {data.get('command')!r} does not match "
                                    f"subcommand {command!r}")
            data = {**data, "command": command}
        sc = from_dict(data)
    except FracLaplaceError as exc:
        rep = Report(echo.get("command", command or "?"), echo)
        rep.error, rep.error_kind = str(exc), type(exc).__name__
        return rep
    return run(sc)


# --------------------------------------------------------------------------
# argument handling

def _floats(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraclaplace",
                                 description="Fractional Laplace transform bounds toolkit")
    ap.add_argument("command", choices=COMMANDS + ("batch",))
    ap.add_argument("scenario", nargs="?",
                    help="scenario JSON file ('-' for standard input)")
    ap.add_argument("--kappa", type=float)
    ap.add_argument("--r", type=float)
    ap.add_argument("--p", type=float)
    ap.add_argument("--mu", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--rel-tol", type=float, dest="rel_tol")
    ap.add_argument("--format", choices=FORMATS, default="table")
    ap.add_argument("--out", help="write the report here instead of standard output")
    ap.add_argument("--function", action="append", dest="functions",
                    help="function as JSON, e.g. '{\"type\": \"Indicator\", \"b\": 1}'")
    ap.add_argument("--psi", help="psi-function as JSON")
    ap.add_argument("--s", type=_floats)
    ap.add_argument("--q", type=_floats)
    ap.add_argument("--p-grid", type=_floats, dest="p_grid")
    ap.add_argument("--lambda-grid", type=_floats, dest="lambda_grid")
    ap.add_argument("--q-candidates", type=_floats, dest="q_candidates")
    ap.add_argument("--kappas", type=_floats)
    ap.add_argument("--grid-size", type=int, dest="grid_size")
    ap.add_argument("--budget", type=int)
    return ap


_FLAG_FIELDS = ("kappa", "r", "p", "mu", "seed", "rel_tol", "s", "q", "p_grid", "lambda_grid",
                "q_candidates", "kappas", "grid_size", "budget")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _decode(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error at line {exc.lineno}, column {exc.colno}: "
                            f"{exc.msg}") from None


def _overrides(args) -> dict:
    out = {k: getattr(args, k) for k in _FLAG_FIELDS if getattr(args, k) is not None}
    if args.functions:
        out["functions"] = [_decode(t) for t in args.functions]
    if args.psi:
        out["psi"] = _decode(args.psi)
    return out


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        data = _decode(_read(args.scenario)) if args.scenario else {}
        overrides = _overrides(args)
    except (OSError, ScenarioError) as exc:
        rep = Report(args.command, {})
        rep.error, rep.error_kind = str(exc), type(exc).__name__
        _write(emit(rep, args.format), args.out)
        return EXIT_INPUT
    if args.command == "batch":
        entries = data.get("entries") if isinstance(data, dict) else data
        if not isinstance(entries, list):
            rep = Report("batch", {}, error="batch file must be a list of scenarios or "
                                            "an object with an 'entries' list",
                         error_kind=ScenarioError.__name__)
            _write(emit(rep, args.format), args.out)
            return EXIT_INPUT
        reports = [run_document({**e, **overrides} if isinstance(e, dict) else e)
                   for e in entries]
        _write(emit_batch(reports, args.format), args.out)
        return max((exit_code(r) for r in reports), default=EXIT_OK)
    if isinstance(data, dict):
        data = {**data, **overrides}
    rep = run_document(data, args.command)
    _write(emit(rep, args.format), args.out)
    return exit_code(rep)


if __name__ == "__main__":
    sys.exit(main())
