"""Instance files: one JSON document per instance, rationals as ``[num, den]``.

Layout::

    {
      "n": 2, "d_bar": [2, 1], "b_bar": [1, 2], "ell": [0, 0], "u": [6, 6], "gamma": 2,
      "cost": {"family": "separable_convex", "stations": [
        {"type": "separable_convex",
         "phi": {"type": "quadratic", "a": [1, 1], "b": [-8, 1], "c": [16, 1]},
         "psi": {...}, "theta": {...}},
        ...]}
    }

Table stations are ``{"type": "table", "grid": [[[num, den], ...], ...]}``
indexed ``grid[d][b]``.  Station indices are 0-based.  Tables are checked
for multimodularity over their full rectangle when loaded.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .costs import (CostModel, PiecewiseLinear, Quadratic, SeparableConvex, Table, as_fraction,
                    validate_multimodular)
from .errors import DockAllocError
from .model import Instance


class InstanceFormatError(DockAllocError, ValueError):
    """The file is not a valid instance document."""


def rat(v: Fraction) -> list[int]:
    v = Fraction(v)
    return [v.numerator, v.denominator]


def _parse_rat(value, where: str) -> Fraction:
    if isinstance(value, float) or not (isinstance(value, list) and len(value) == 2):
        raise InstanceFormatError(f"{where}: rationals must be [num, den] integer pairs, got {value!r}")
    try:
        return as_fraction(value)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{where}: {exc}") from None


def _convex_to_json(f) -> dict:
    if isinstance(f, Quadratic):
        return {"type": "quadratic", "a": rat(f.a), "b": rat(f.b), "c": rat(f.c)}
    return {"type": "piecewise_linear", "breakpoints": list(f.breakpoints),
            "slopes": [rat(s) for s in f.slopes], "value_at_origin": rat(f.value_at_origin)}


def _convex_from_json(obj, where: str):
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    kind = obj.get("type")
    try:
        if kind == "quadratic":
            return Quadratic(*(_parse_rat(obj[k], f"{where}.{k}") for k in ("a", "b", "c")))
        if kind == "piecewise_linear":
            bps = obj["breakpoints"]
            if not all(isinstance(t, int) and not isinstance(t, bool) for t in bps):
                raise InstanceFormatError(f"{where}.breakpoints: integers required")
            slopes = tuple(_parse_rat(s, f"{where}.slopes") for s in obj["slopes"])
            return PiecewiseLinear(tuple(bps), slopes, _parse_rat(obj["value_at_origin"], f"{where}.value_at_origin"))
    except KeyError as exc:
        raise InstanceFormatError(f"{where}: missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"{where}: {exc}") from None
    raise InstanceFormatError(f"{where}: unknown convex piece type {kind!r}")


def station_to_json(spec) -> dict:
    if isinstance(spec, SeparableConvex):
        return {"type": "separable_convex", "phi": _convex_to_json(spec.phi),
                "psi": _convex_to_json(spec.psi), "theta": _convex_to_json(spec.theta)}
    return {"type": "table", "grid": [[rat(v) for v in row] for row in spec.grid]}


def _station_from_json(obj, where: str, validate: bool):
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    kind = obj.get("type")
    if kind == "separable_convex":
        return SeparableConvex(*(_convex_from_json(obj.get(k), f"{where}.{k}") for k in ("phi", "psi", "theta")))
    if kind == "table":
        grid = obj.get("grid")
        if not isinstance(grid, list) or not all(isinstance(r, list) for r in grid):
            raise InstanceFormatError(f"{where}.grid: expected a list of rows")
        try:
            table = Table(tuple(tuple(_parse_rat(v, f"{where}.grid") for v in row) for row in grid))
        except ValueError as exc:
            if isinstance(exc, InstanceFormatError):
                raise
            raise InstanceFormatError(f"{where}.grid: {exc}") from None
        if validate:
            bad = validate_multimodular(CostModel((table,)), 0, (table.d_max, table.b_max))
            if bad is not None:
                raise InstanceFormatError(
                    f"{where}: table is not multimodular (inequality {bad.inequality} fails at "
                    f"{bad.point}: {bad.lhs} < {bad.rhs})")
        return table
    raise InstanceFormatError(f"{where}: unknown station cost type {kind!r}")


def instance_to_json(inst: Instance) -> dict:
    return {
        "n": inst.n,
        "d_bar": list(inst.d_bar),
        "b_bar": list(inst.b_bar),
        "ell": list(inst.ell),
        "u": list(inst.u),
        "gamma": inst.gamma,
        "cost": {"family": inst.cost.family,
                 "stations": [station_to_json(s) for s in inst.cost.stations]},
    }


def instance_from_json(doc, validate: bool = True) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    try:
        fields = {k: doc[k] for k in ("n", "d_bar", "b_bar", "ell", "u", "gamma", "cost")}
    except KeyError as exc:
        raise InstanceFormatError(f"missing field {exc}") from None
    for k in ("n", "gamma"):
        if not isinstance(fields[k], int) or isinstance(fields[k], bool):
            raise InstanceFormatError(f"{k} must be an integer")
    for k in ("d_bar", "b_bar", "ell", "u"):
        v = fields[k]
        if not isinstance(v, list) or not all(isinstance(t, int) and not isinstance(t, bool) for t in v):
            raise InstanceFormatError(f"{k} must be a list of integers")
    cost = fields["cost"]
    if not isinstance(cost, dict) or not isinstance(cost.get("stations"), list):
        raise InstanceFormatError("cost must be an object with a 'stations' list")
    family = cost.get("family")
    if family not in ("separable_convex", "table", "mixed"):
        raise InstanceFormatError(f"unknown cost family {family!r}")
    stations = tuple(_station_from_json(s, f"cost.stations[{i}]", validate)
                     for i, s in enumerate(cost["stations"]))
    model = CostModel(stations)
    if model.family != family:
        raise InstanceFormatError(f"cost family {family!r} does not match station types ({model.family})")
    try:
        return Instance(fields["n"], fields["d_bar"], fields["b_bar"], fields["ell"], fields["u"],
                        fields["gamma"], model)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None


def _compact(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "))


def dumps_instance(inst: Instance) -> str:
    """Canonical text: top-level fields one per line, one line per station."""
    doc = instance_to_json(inst)
    lines = ["{"]
    for key in ("n", "d_bar", "b_bar", "ell", "u", "gamma"):
        lines.append(f'  "{key}": {_compact(doc[key])},')
    lines.append('  "cost": {')
    lines.append(f'    "family": {_compact(doc["cost"]["family"])},')
    lines.append('    "stations": [')
    st = doc["cost"]["stations"]
    for k, s in enumerate(st):
        lines.append("      " + _compact(s) + ("," if k < len(st) - 1 else ""))
    lines.append("    ]")
    lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def loads_instance(text: str, validate: bool = True) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON: {exc}") from None
    return instance_from_json(doc, validate)


def load_instance(path, validate: bool = True) -> Instance:
    return loads_instance(Path(path).read_text(encoding="utf-8"), validate)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8")
