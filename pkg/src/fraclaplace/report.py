"""Report model and its three deterministic serializations.

Machine formats (``json``, ``csv``) print every float with 17 significant
digits and never include wall time, so identical scenarios give identical
bytes. The human ``table`` format adds the wall time.
"""

from __future__ import annotations

import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

FORMATS = ("table", "json", "csv")


@dataclass(frozen=True)
class Quantity:
    """A named number and the formula or method that produced it."""

    name: str
    value: float
    provenance: str
    error: float | None = None


@dataclass(frozen=True)
class CheckLine:
    """An asserted inequality ``lhs <= rhs``."""

    name: str
    lhs: float
    rhs: float
    holds: bool


@dataclass
class Table:
    columns: tuple
    provenance: tuple
    rows: list = field(default_factory=list)


@dataclass
class Report:
    command: str
    scenario: dict
    quantities: list = field(default_factory=list)
    tables: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    error: str | None = None
    error_kind: str | None = None
    wall_time: float | None = None

    @property
    def status(self) -> str:
        if self.error is not None:
            return "error"
        return "ok" if all(c.holds for c in self.checks) else "violation"

    def to_dict(self) -> dict:
        out = {"command": self.command, "status": self.status, "scenario": self.scenario}
        if self.error is not None:
            out["error"] = {"kind": self.error_kind, "message": self.error}
        out["quantities"] = [{"name": q.name, "value": q.value, "provenance": q.provenance,
                              **({} if q.error is None else {"error": q.error})}
                             for q in self.quantities]
        out["tables"] = [{"columns": list(t.columns), "provenance": list(t.provenance),
                          "rows": [list(r) for r in t.rows]} for t in self.tables]
        out["checks"] = [{"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "holds": c.holds}
                         for c in self.checks]
        out["notes"] = list(self.notes)
        return out


# --------------------------------------------------------------------------
# formatting

def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _json_value(v, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        s = fmt_float(v)
        return f'"{s}"' if s in ("inf", "-inf", "nan") else s
    if isinstance(v, str):
        return _json_str(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {_json_value(x, indent, level + 1)}"
                 for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple)) for x in v):
            return "[" + ", ".join(_json_value(x, indent, level + 1) for x in v) + "]"
        items = [pad + _json_value(x, indent, level + 1) for x in v]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(v, "item"):
        return _json_value(v.item(), indent, level)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _json_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON with insertion-ordered keys and ``%.17g`` floats."""
    return _json_value(obj, indent, 0) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    if v is None:
        return ""
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _csv(report: Report) -> str:
    out = io.StringIO()
    if report.error is not None:
        out.write("error,kind\n")
        out.write(f"{_csv_cell(report.error)},{_csv_cell(report.error_kind)}\n")
        return out.getvalue()
    blocks = []
    for t in report.tables:
        lines = [",".join(t.columns)] + [",".join(_csv_cell(v) for v in row) for row in t.rows]
        blocks.append("\n".join(lines) + "\n")
    if report.quantities:
        lines = ["name,value,provenance"] + [
            f"{_csv_cell(q.name)},{_csv_cell(q.value)},{_csv_cell(q.provenance)}"
            for q in report.quantities]
        blocks.append("\n".join(lines) + "\n")
    if report.checks:
        lines = ["check,lhs,rhs,holds"] + [
            f"{_csv_cell(c.name)},{_csv_cell(c.lhs)},{_csv_cell(c.rhs)},{_csv_cell(c.holds)}"
            for c in report.checks]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def _human_float(x) -> str:
    if isinstance(x, float):
        return "%.12g" % x
    return str(x)


def _colour(text: str, code: str, stream) -> str:
    if os.environ.get("NO_COLOR") is not None or not getattr(stream, "isatty", lambda: False)():
        return text
    return f"\033[{code}m{text}\033[0m"


def _grid(header, rows):
    cells = [list(header)] + [[_human_float(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _table(report: Report, stream=None) -> str:
    stream = stream or sys.stdout
    parts = [f"command: {report.command}"]
    params = {k: report.scenario[k] for k in ("kappa", "r", "p", "mu") if k in report.scenario}
    if params:
        parts.append("inputs: " + ", ".join(f"{k}={_human_float(v)}" for k, v in params.items()))
    if report.error is not None:
        parts.append(_colour(f"error ({report.error_kind}): {report.error}", "31", stream))
    if report.quantities:
        parts.append(_grid(("quantity", "value", "provenance"),
                           [(q.name, q.value, q.provenance) for q in report.quantities]))
    for t in report.tables:
        header = tuple(f"{c} [{p}]" if p else c for c, p in zip(t.columns, t.provenance))
        parts.append(_grid(header, t.rows))
    for c in report.checks:
        mark = _colour("PASS", "32", stream) if c.holds else _colour("FAIL", "31", stream)
        parts.append(f"{mark}  {c.name}: {_human_float(c.lhs)} <= {_human_float(c.rhs)}")
    parts.extend(f"note: {n}" for n in report.notes)
    if report.wall_time is not None:
        parts.append(f"wall time: {report.wall_time:.3f} s")
    return "\n".join(parts) + "\n"


def emit(report: Report, fmt: str = "table", stream=None) -> str:
    """Serialize ``report`` as ``table``, ``json`` or ``csv``."""
    if fmt == "json":
        return dumps(report.to_dict())
    if fmt == "csv":
        return _csv(report)
    if fmt == "table":
        return _table(report, stream)
    raise ValueError(f"unknown format {fmt!r}")


def emit_batch(reports, fmt: str = "table", stream=None) -> str:
    if fmt == "json":
        return dumps({"command": "batch", "reports": [r.to_dict() for r in reports]})
    sep = "\n" if fmt == "csv" else "\n" + "=" * 60 + "\n"
    return sep.join(emit(r, fmt, stream) for r in reports)
