"""Scenario documents: a JSON object naming a command and its inputs.

Parsing validates every theorem hypothesis up front so a bad scenario
fails before any quadrature runs. ``Scenario.to_dict`` is the canonical
echo written into reports; parsing it back yields an equal scenario.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

from .errors import PreconditionError
from .funcspace import FunctionSpec, Indicator
from .gls import PsiFunction, build_nu
from .specfun import ExponentPair, TransformParams, weighted_exponents
from .transform import KernelSpec

COMMANDS = ("constants", "eval", "norm", "bounds", "sharpness", "scaling", "weighted", "gls",
            "limit")

DEFAULT_P_GRID = (1.5, 1.6, 1.7, 1.8, 1.9, 1.95, 1.99)
DEFAULT_LAMBDAS = (0.25, 0.5, 1.0, 2.0, 4.0)
DEFAULT_KAPPAS = (10.0, 100.0, 1000.0, 10000.0)

_REQUIRED = {
    "constants": ("kappa", "r", "p"),
    "eval": ("functions", "s"),
    "norm": ("kappa", "r", "functions", "q"),
    "bounds": ("kappa", "r", "p"),
    "sharpness": ("kappa", "r"),
    "scaling": ("kappa", "r", "p"),
    "weighted": ("kappa", "r", "p", "mu"),
    "gls": ("kappa", "r", "functions", "psi"),
    "limit": ("r", "functions", "s"),
}


class ScenarioError(PreconditionError):
    """Malformed scenario document."""


@dataclass(frozen=True)
class Scenario:
    command: str
    kappa: float | None = None
    r: float | None = None
    p: float | None = None
    mu: float | None = None
    q: tuple | None = None
    s: tuple | None = None
    functions: tuple | None = None
    kernel: KernelSpec | None = None
    p_grid: tuple | None = None
    lambda_grid: tuple | None = None
    q_candidates: tuple | None = None
    kappas: tuple | None = None
    psi: PsiFunction | None = None
    grid_size: int = 32
    rel_tol: float = 1e-10
    seed: int = 0
    budget: int | None = None
    bump_samples: int = 50

    @property
    def params(self) -> TransformParams:
        return TransformParams(self.kappa, self.r)

    def to_dict(self) -> dict:
        out = {"command": self.command}
        for fld in fields(self)[1:]:
            v = getattr(self, fld.name)
            if v is None:
                continue
            if fld.name == "functions":
                v = [f.to_dict() for f in v]
            elif fld.name in ("kernel", "psi"):
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = list(v)
            out[fld.name] = v
        return out


_FIELD_NAMES = {f.name for f in fields(Scenario)}


def _number(name, v):
    if isinstance(v, bool):
        raise ScenarioError(f"field '{name}': expected a number")
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ScenarioError(f"field '{name}': expected a number, got {v!r}") from None


def _integer(name, v):
    x = _number(name, v)
    if not x.is_integer():
        raise ScenarioError(f"field '{name}': expected an integer, got {v!r}")
    return int(x)


def _numbers(name, v):
    if not isinstance(v, (list, tuple)):
        v = [v]
    if not v:
        raise ScenarioError(f"field '{name}': expected a nonempty list")
    return tuple(_number(name, x) for x in v)


def _functions(v):
    if isinstance(v, dict):
        v = [v]
    if not isinstance(v, list) or not v:
        raise ScenarioError("field 'functions': expected a nonempty list of function objects")
    return tuple(FunctionSpec.from_dict(d) for d in v)


def from_dict(data: dict) -> Scenario:
    """Build and validate a scenario from a decoded JSON object."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = sorted(set(data) - _FIELD_NAMES)
    if unknown:
        raise ScenarioError(f"unknown field(s): {', '.join(unknown)}")
    command = data.get("command")
    if command not in COMMANDS:
        raise ScenarioError(f"field 'command': expected one of {', '.join(COMMANDS)}")
    kw = {"command": command}
    for name in ("kappa", "r", "p", "mu", "rel_tol"):
        if name in data:
            kw[name] = _number(name, data[name])
    for name in ("q", "s", "p_grid", "lambda_grid", "q_candidates", "kappas"):
        if name in data:
            kw[name] = _numbers(name, data[name])
    for name in ("grid_size", "seed", "budget", "bump_samples"):
        if name in data and data[name] is not None:
            kw[name] = _integer(name, data[name])
    if "functions" in data:
        kw["functions"] = _functions(data["functions"])
    if "kernel" in data:
        kw["kernel"] = KernelSpec.from_dict(data["kernel"])
    if "psi" in data:
        kw["psi"] = PsiFunction.from_dict(data["psi"])
    return validate(_with_defaults(Scenario(**kw)))


def _with_defaults(sc: Scenario) -> Scenario:
    extra = {}
    if sc.command == "sharpness" and sc.p_grid is None:
        extra["p_grid"] = DEFAULT_P_GRID
    if sc.command == "scaling":
        if sc.lambda_grid is None:
            extra["lambda_grid"] = DEFAULT_LAMBDAS
        if sc.q_candidates is None and sc.p is not None and sc.p > 1:
            pc = sc.p / (sc.p - 1.0)
            extra["q_candidates"] = (2.0, pc, 4.0) if pc not in (2.0, 4.0) else (pc, pc + 1.0,
                                                                                pc + 2.0)
        if sc.functions is None:
            extra["functions"] = (Indicator(1.0),)
    if sc.command == "limit" and sc.kappas is None:
        extra["kappas"] = DEFAULT_KAPPAS
    if not extra:
        return sc
    return Scenario(**{**{f.name: getattr(sc, f.name) for f in fields(sc)}, **extra})


def validate(sc: Scenario) -> Scenario:
    """Check required fields and every hypothesis the command relies on."""
    missing = [n for n in _REQUIRED[sc.command] if getattr(sc, n) is None]
    if sc.command == "eval" and sc.kernel is None:
        missing += [n for n in ("kappa", "r") if getattr(sc, n) is None]
    if missing:
        raise ScenarioError(f"command '{sc.command}' needs field(s): {', '.join(missing)}")
    if not (sc.rel_tol > 0 and sc.rel_tol < 1):
        raise ScenarioError("field 'rel_tol': expected 0 < rel_tol < 1")
    if sc.grid_size < 16:
        raise ScenarioError("field 'grid_size': grid_size >= 16 required")
    params = sc.params if sc.kappa is not None else None
    if sc.command == "limit":
        TransformParams(1.0, sc.r)
        if any(not k > 0 for k in sc.kappas):
            raise ScenarioError("field 'kappas': kappa > 0 required")
    elif params is not None and params.power <= 0:
        raise ScenarioError(f"κ+r = {params.power:g} must be positive for the kernel to decay")
    if any(x < 0 for x in sc.s or ()):
        raise ScenarioError("field 's': s >= 0 required")
    if sc.command in ("bounds", "weighted", "gls"):
        params.require_thm21()
    if sc.command == "sharpness":
        params.require_lower()
        for p in sc.p_grid:
            ExponentPair(p)
    if sc.command in ("constants", "bounds") and sc.mu is None:
        ExponentPair(sc.p)
    if sc.command == "constants" and sc.mu is not None:
        weighted_exponents(sc.p, sc.mu, None, strict=False)
    if sc.command == "weighted":
        weighted_exponents(sc.p, sc.mu, params, strict=(sc.mu != 1.0))
    if sc.command == "scaling" and not sc.p >= 1:
        raise ScenarioError("field 'p': p >= 1 required")
    if sc.command == "gls":
        build_nu(sc.psi, params)
    if sc.mu is not None and sc.command in ("eval", "norm") and not 0 < sc.mu <= 1:
        raise ScenarioError("field 'mu': 0 < mu <= 1 required")
    return sc


def parse_scenario(text: str) -> Scenario:
    """Parse a JSON scenario document; syntax errors report line and column."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error at line {exc.lineno}, column {exc.colno}: "
                            f"{exc.msg}") from None
    return from_dict(data)
