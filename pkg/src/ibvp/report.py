"""Deterministic JSON and CSV output.

Floats are written with 17 significant digits; non-finite values become the
strings "inf", "-inf" and "nan" so the output stays valid JSON.  Key order is
the insertion order of the dicts built here, never sorted by the encoder.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable

import numpy as np

from .certify import AsymptoticConstants, ConditionReport, ConstantEstimate, Ingredients
from .problem import HypothesisReport
from .solver import SolveResult


def format_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return format(v + 0.0, ".17g")  # + 0.0 turns -0.0 into 0.0


def _dump(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in seq) + "]"
        items = [f"{pad}{_dump(v, indent, level + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    return _dump(obj, indent, 0) + "\n"


def to_csv(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v).strip('"') if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# -- report sections ---------------------------------------------------------------


def hypothesis_section(rep: HypothesisReport) -> list[dict]:
    return [{"name": e.name, "status": e.status, "detail": e.detail, "witness": e.witness} for e in rep.entries]


def _constant(e: ConstantEstimate) -> dict:
    return {
        "value": e.value,
        "provenance": e.provenance,
        "approach": e.approach,
        "unreliable": e.unreliable,
        "reference": e.reference,
        "discrepancy": e.discrepancy,
        "sequence_tail": e.sequence[-3:],
    }


def constants_section(c: AsymptoticConstants) -> dict:
    return {key: _constant(e) for key, e in c.entries.items()}


def ingredients_section(ing: Ingredients) -> dict:
    return ing.as_dict()


def conditions_section(rep: ConditionReport) -> list[dict]:
    out = []
    for e in rep.entries:
        out.append(
            {
                "name": e.name,
                "direction": e.direction,
                "lhs": e.lhs,
                "status": e.status,
                "reason": e.reason,
                "prefactor": e.prefactor,
                "lhs_min_variant": e.lhs_min_variant,
                "terms": [
                    {"name": t.name, "coefficient": t.coefficient, "constant": t.constant_key, "constant_value": t.constant, "value": t.value}
                    for t in e.terms
                ],
            }
        )
    return out


def solve_run_section(r: SolveResult) -> dict:
    return {
        "start_level": r.start,
        "converged": r.converged,
        "iterations": r.iterations,
        "residual": r.residual,
        "norm": r.norm,
        "positivity_certified": r.positivity_certified,
        "x_inf": r.solution.x_inf,
        "error": r.error,
    }
