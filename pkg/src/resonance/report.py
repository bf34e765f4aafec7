"""Bit-stable JSON and CSV emission.

Floats are written with 17 significant digits so that every value
round-trips exactly.  Field order is fixed by construction; run metadata
(timestamp, version) lives under a separate key that quiet mode drops.
"""

from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .engine import SolveReport
from .errors import ResonanceError, SpecificationError
from .problem import SYSTEM_FAMILIES, ProblemSpec
from .solvability import ConditionReport
from .spectral import Field

SCHEMA_VERSION = "1.0"


class ReportIOError(ResonanceError):
    pass


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level + 1)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    return _encode(obj, 2, 0) + "\n"


def label_text(label) -> str:
    if isinstance(label, tuple):
        if isinstance(label[0], str):
            return label[0] if label[0] == "const" else f"{label[0]}{label[1]}"
        return ",".join(str(v) for v in label)
    return str(label)


def condition_dict(rep: ConditionReport) -> dict:
    return {
        "condition_id": rep.condition_id,
        "quantities": dict(rep.quantities),
        "margin": rep.margin,
        "verdict": rep.verdict,
        "witness": None if rep.witness is None else list(np.ravel(rep.witness)),
        "scope": rep.scope,
        "notes": list(rep.notes),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {label_text(k) if isinstance(k, tuple) else str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def solve_dict(rep: SolveReport) -> dict:
    coeffs = {}
    for name, f in rep.solution.items():
        coeffs[name] = {label_text(lab): float(c) for lab, c in zip(f.basis.labels, f.coeffs) if c != 0.0}
    return {
        "status": rep.status,
        "iterations": rep.iterations,
        "residual_l2": rep.residual_l2,
        "residual_sup": rep.residual_sup,
        "xi": list(rep.xi),
        "conditions": [condition_dict(c) for c in rep.condition],
        "notes": list(rep.notes),
        "extras": _jsonable(rep.extras),
        "coefficients": coeffs,
        "trace": [list(t) for t in rep.trace],
    }


def document(command: str, spec_echo: dict, result, exit_code: int, quiet: bool, version: str) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "spec": spec_echo,
        "result": result,
        "exit_code": exit_code,
    }
    if not quiet:
        doc["metadata"] = {
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "version": version,
        }
    return doc


def write_text(path, text: str):
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror}") from None


def _coord_names(problem: ProblemSpec) -> list[str]:
    return {"interval": ["x"], "square": ["x", "y"], "circle": ["t"]}[problem.domain]


def solution_csv(problem: ProblemSpec, fields: dict) -> str:
    """Grid samples: coordinate column(s) then one value column per field."""
    basis = problem.basis()
    names = sorted(fields)
    pts = np.asarray(basis.points)
    if pts.ndim == 1:
        pts = pts[:, None]
    cols = [np.ravel(fields[n].samples) for n in names]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_coord_names(problem) + names)
    for i in range(pts.shape[0]):
        w.writerow([format(float(v), ".17g") for v in pts[i]] + [format(float(c[i]), ".17g") for c in cols])
    return buf.getvalue()


def read_solution_csv(path, problem: ProblemSpec) -> dict:
    """Fields recovered from a solution CSV written by :func:`solution_csv`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc.strerror}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise SpecificationError(f"{path} is empty", key="csv")
    header, body = rows[0], rows[1:]
    ncoord = len(_coord_names(problem))
    if header[:ncoord] != _coord_names(problem):
        raise SpecificationError(f"{path} has coordinate columns {header[:ncoord]}", key="csv")
    basis = problem.basis()
    expected = basis.grid_points
    if len(body) != expected:
        raise SpecificationError(
            f"{path} has {len(body)} rows; the spec's grid has {expected}", key="csv", line=len(rows)
        )
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError:
        raise SpecificationError(f"{path} contains non-numeric entries", key="csv") from None
    out = {}
    for j, name in enumerate(header[ncoord:]):
        out[name] = basis.analyze(data[:, ncoord + j])
    want = {"u", "v"} if problem.family in SYSTEM_FAMILIES else {"u"}
    if set(out) != want:
        raise SpecificationError(f"{path} must hold columns {sorted(want)}", key="csv")
    return out


SWEEP_COLUMNS = ("amplitude", "margin", "verdict", "status", "residual", "iterations")


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([
            format(r["amplitude"], ".17g"),
            "" if r["margin"] is None else format(r["margin"], ".17g"),
            r["verdict"] or "",
            r["status"],
            format(r["residual"], ".17g"),
            r["iterations"],
        ])
    return buf.getvalue()


def field_summary(f: Field) -> dict:
    return {"l2": f.l2_norm(), "sup": f.sup_norm(), "h2": f.h2_norm()}
