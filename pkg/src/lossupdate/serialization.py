"""JSON encodings of measures, losses and joint tables.

Measure files::

    {"type": "discrete", "points": [...], "weights": [...]}
    {"type": "grid", "lo": -5, "hi": 5, "n": 1001, "density": [...]}

Loss files use ``"variant"`` in ``tabular | quadratic | restriction | sum``;
the string ``"inf"`` stands for +inf. JSON object keys are always strings,
so tabular keys are matched against the prior's labels by their string
form (``"3"`` matches the label ``3``).
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Hashable, Optional, Sequence

import numpy as np

from .errors import SupportMismatch, UpdateError
from .losses import (
    LossFunction,
    QuadraticLoss,
    RestrictionLoss,
    SumLoss,
    TabularLoss,
)
from .measures import (
    GridMeasure,
    JointTable,
    Measure,
    make_discrete,
    make_grid,
    make_joint,
)

_INF_STRINGS = {"inf", "+inf", "infinity", "+infinity"}


class InputError(UpdateError):
    """Malformed input file; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(str(path), "file not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(str(path), f"invalid JSON ({exc.msg} at line {exc.lineno})") from None


def write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _require(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise InputError(where, "expected a JSON object")
    if key not in obj:
        raise InputError(f"{where}.{key}", "missing")
    return obj[key]


def parse_extended(value: Any, field: str) -> float:
    """Number or the string "inf"."""
    if isinstance(value, str) and value.strip().lower() in _INF_STRINGS:
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(field, f"expected a number or 'inf', got {value!r}")
    v = float(value)
    if math.isnan(v) or v == -math.inf:
        raise InputError(field, f"value {value!r} is not allowed")
    return v


def _finite(value: Any, field: str) -> float:
    v = parse_extended(value, field)
    if not math.isfinite(v):
        raise InputError(field, "must be finite")
    return v


def encode_extended(v: float) -> Any:
    return "inf" if v == math.inf else float(v)


def _label(value: Any, field: str) -> Hashable:
    if isinstance(value, (list, dict)) or value is None:
        raise InputError(field, f"outcome labels must be strings or numbers, got {value!r}")
    return value


def _number_list(values: Any, field: str) -> list[float]:
    if not isinstance(values, list):
        raise InputError(field, "expected a list")
    return [_finite(v, f"{field}[{i}]") for i, v in enumerate(values)]


def measure_from_json(obj: Any, where: str = "measure") -> Measure:
    kind = _require(obj, "type", where)
    try:
        if kind == "discrete":
            points = _require(obj, "points", where)
            if not isinstance(points, list):
                raise InputError(f"{where}.points", "expected a list")
            labels = [_label(p, f"{where}.points[{i}]") for i, p in enumerate(points)]
            weights = _number_list(_require(obj, "weights", where), f"{where}.weights")
            return make_discrete(labels, weights)
        if kind == "grid":
            lo = _finite(_require(obj, "lo", where), f"{where}.lo")
            hi = _finite(_require(obj, "hi", where), f"{where}.hi")
            n = _require(obj, "n", where)
            if isinstance(n, bool) or not isinstance(n, int):
                raise InputError(f"{where}.n", "expected an integer")
            density = _number_list(_require(obj, "density", where), f"{where}.density")
            return make_grid(lo, hi, n, density)
    except InputError:
        raise
    except UpdateError as exc:
        raise InputError(where, str(exc)) from exc
    except ValueError as exc:
        raise InputError(where, str(exc)) from exc
    raise InputError(f"{where}.type", f"unknown measure type {kind!r}")


def measure_to_json(m: Measure) -> dict:
    if isinstance(m, GridMeasure):
        return {"type": "grid", "lo": m.lo, "hi": m.hi, "n": m.n, "density": m.density.tolist()}
    return {"type": "discrete", "points": list(m.points), "weights": m.weights.tolist()}


class _LabelResolver:
    """Map JSON keys back onto the prior's labels."""

    def __init__(self, points: Optional[Sequence[Hashable]]):
        self.points = None if points is None else tuple(points)
        self.lookup: dict = {}
        for p in self.points or ():
            self.lookup.setdefault(p, p)
            self.lookup.setdefault(str(p), p)
            self.lookup.setdefault(json.dumps(p), p)

    def __call__(self, key: Any, field: str, strict: bool = True) -> Hashable:
        if self.points is None:
            return key
        try:
            return self.lookup[key]
        except (KeyError, TypeError):
            if strict:
                raise SupportMismatch(f"{field}: outcome {key!r} is not in the prior's support") from None
            return key


def loss_from_json(obj: Any, points: Optional[Sequence[Hashable]] = None, where: str = "loss") -> LossFunction:
    """Decode a loss file, resolving labels against ``points`` when given.

    With ``points``, tabular keys must all be known outcomes and, unless a
    ``"default"`` is supplied, every outcome must have a value.
    """
    resolve = _LabelResolver(points)
    variant = _require(obj, "variant", where)
    k = _finite(obj.get("k", 1.0), f"{where}.k")
    try:
        if variant == "tabular":
            raw = _require(obj, "values", where)
            if not isinstance(raw, dict):
                raise InputError(f"{where}.values", "expected an object mapping outcomes to losses")
            table = {
                resolve(key, f"{where}.values"): parse_extended(v, f"{where}.values.{key}")
                for key, v in raw.items()
            }
            default = obj.get("default")
            default = None if default is None else parse_extended(default, f"{where}.default")
            if points is not None and default is None:
                missing = [p for p in points if p not in table]
                if missing:
                    raise SupportMismatch(f"{where}.values: no loss given for outcome {missing[0]!r}")
            return TabularLoss(table, default=default, k=k)
        if variant == "quadratic":
            return QuadraticLoss(_finite(_require(obj, "w", where), f"{where}.w"), k=k)
        if variant == "restriction":
            allowed = _require(obj, "B", where)
            if not isinstance(allowed, list):
                raise InputError(f"{where}.B", "expected a list")
            return RestrictionLoss(
                frozenset(resolve(_label(b, f"{where}.B[{i}]"), f"{where}.B", strict=False) for i, b in enumerate(allowed)),
                k=k,
            )
        if variant == "sum":
            terms = _require(obj, "terms", where)
            if not isinstance(terms, list):
                raise InputError(f"{where}.terms", "expected a list")
            return SumLoss(
                tuple(loss_from_json(t, points, f"{where}.terms[{i}]") for i, t in enumerate(terms)),
                k=k,
            )
    except (InputError, SupportMismatch):
        raise
    except UpdateError as exc:
        raise InputError(where, str(exc)) from exc
    raise InputError(f"{where}.variant", f"unknown loss variant {variant!r}")


def loss_to_json(h: LossFunction) -> dict:
    out: dict
    if isinstance(h, TabularLoss):
        out = {"variant": "tabular", "values": {str(y): encode_extended(v) for y, v in h.table.items()}}
        if h.default is not None:
            out["default"] = encode_extended(h.default)
    elif isinstance(h, QuadraticLoss):
        out = {"variant": "quadratic", "w": h.w}
    elif isinstance(h, RestrictionLoss):
        out = {"variant": "restriction", "B": sorted(h.allowed, key=str)}
    elif isinstance(h, SumLoss):
        out = {"variant": "sum", "terms": [loss_to_json(t) for t in h.terms]}
    else:
        raise TypeError(f"cannot encode {type(h).__name__}")
    if h.k != 1.0:
        out["k"] = h.k
    return out


def joint_from_json(obj: Any, where: str = "joint") -> JointTable:
    xs = _require(obj, "x_labels", where)
    ys = _require(obj, "y_labels", where)
    mass = _require(obj, "mass", where)
    if not isinstance(xs, list) or not isinstance(ys, list):
        raise InputError(where, "x_labels and y_labels must be lists")
    if not isinstance(mass, list):
        raise InputError(f"{where}.mass", "expected a list of rows")
    rows = [_number_list(row, f"{where}.mass[{i}]") for i, row in enumerate(mass)]
    try:
        return make_joint(
            [_label(x, f"{where}.x_labels") for x in xs],
            [_label(y, f"{where}.y_labels") for y in ys],
            np.array(rows, dtype=float) if rows else np.zeros((0, 0)),
        )
    except UpdateError as exc:
        raise InputError(where, str(exc)) from exc


def joint_to_json(joint: JointTable) -> dict:
    return {
        "type": "joint",
        "x_labels": list(joint.x_labels),
        "y_labels": list(joint.y_labels),
        "mass": joint.mass.tolist(),
    }


def resolve_label(labels: Sequence[Hashable], key: str, field: str) -> int:
    """Index of the label whose string form is ``key``."""
    for i, lab in enumerate(labels):
        if lab == key or str(lab) == key:
            return i
    raise InputError(field, f"label {key!r} not found")


def report_to_json(report, **extra) -> dict:
    info = {k: v for k, v in report.info.items() if k != "objective_trace"}
    out = {
        "log_normalizer": encode_extended(report.log_normalizer),
        "cumulative_loss": encode_extended(report.cumulative_loss_at_posterior),
        "integrable": report.integrable,
    }
    for key, v in {**info, **extra}.items():
        out[key] = encode_extended(v) if isinstance(v, float) else v
    return out

