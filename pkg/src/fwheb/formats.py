"""On-disk formats: problem-spec JSON, trace CSV, and JSON reports."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Union

import jsonschema
import numpy as np

from .analysis import HEBSpec
from .errors import InvalidInputError
from .geometry import set_from_dict
from .objectives import objective_from_dict
from .problems import GroundTruth, Problem
from .solver import Trace

TRACE_COLUMNS = ("t", "f", "h", "dual_gap", "grad_norm", "eta", "lemma2_bound")

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_matrix = {"type": "array", "items": _vector, "minItems": 1}
_pos = {"type": "number", "exclusiveMinimum": 0}


def _kind(name: str, props: dict, required: list) -> dict:
    return {
        "type": "object",
        "properties": {"kind": {"const": name}, **props},
        "required": ["kind", *required],
        "additionalProperties": False,
    }


PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "problem spec",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "dim": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "x0": _vector,
        "objective": {
            "oneOf": [
                _kind("linear", {"b": _vector}, ["b"]),
                _kind("quadratic", {"A": _matrix, "b": _vector}, ["A", "b"]),
                _kind("shifted_sq_norm", {"z": _vector}, ["z"]),
                _kind("power_norm", {"z": _vector, "m": {"type": "integer", "minimum": 2}}, ["z", "m"]),
            ]
        },
        "set": {
            "oneOf": [
                _kind("ball", {"center": _vector, "radius": _pos}, ["radius"]),
                _kind("ellipsoid", {"center": _vector, "Q": {"oneOf": [_vector, _matrix]}, "level": _pos},
                      ["Q", "level"]),
                _kind("level_set_quadratic",
                      {"center": _vector, "Q": {"oneOf": [_vector, _matrix]}, "level": _pos}, ["Q", "level"]),
                _kind("lp_ball", {"radius": _pos, "p": {"type": "number", "exclusiveMinimum": 1, "maximum": 2}},
                      ["radius", "p"]),
                _kind("simplex", {}, []),
            ]
        },
        "ground_truth": {
            "type": "object",
            "properties": {
                "f_star": {"type": "number"},
                "optset": _vector,
                "heb": {
                    "type": "object",
                    "properties": {"theta": {"type": "number", "minimum": 0, "maximum": 1}, "c": _pos},
                    "required": ["theta", "c"],
                    "additionalProperties": False,
                },
                "alpha": {"type": "number", "minimum": 0},
                "L_f": {"type": "number", "minimum": 0},
                "D": _pos,
                "grad_min": {"type": "number", "minimum": 0},
                "lambda_star": {"type": "number", "minimum": 0},
            },
            "required": ["f_star"],
            "additionalProperties": False,
        },
    },
    "required": ["dim", "objective", "set"],
    "additionalProperties": False,
}


def validate_spec(spec: dict) -> None:
    try:
        jsonschema.validate(spec, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise InvalidInputError(f"invalid problem spec at {where}: {e.message}") from None


def problem_from_spec(spec: dict) -> Problem:
    validate_spec(spec)
    dim = spec["dim"]
    obj = objective_from_dict(spec["objective"], dim)
    s = set_from_dict(spec["set"], dim)
    gt = None
    g = spec.get("ground_truth")
    if g is not None:
        optset = g.get("optset")
        if optset is not None:
            optset = np.asarray(optset, dtype=float)
        heb = None
        if "heb" in g:
            if optset is None:
                raise InvalidInputError("ground_truth.heb needs ground_truth.optset")
            heb = HEBSpec(g["heb"]["theta"], g["heb"]["c"], optset, g["f_star"])
        gt = GroundTruth(
            f_star=g["f_star"], optset=optset, heb=heb, alpha=g.get("alpha"), L_f=g.get("L_f"),
            D=g.get("D"), grad_min=g.get("grad_min"), lambda_star=g.get("lambda_star"),
        )
    x0 = spec.get("x0")
    if x0 is not None and len(x0) != dim:
        raise InvalidInputError("x0 does not match dim")
    return Problem(obj, s, gt, x0=x0, seed=spec.get("seed", 0), name=spec.get("name", "custom"))


def problem_to_spec(problem: Problem) -> dict:
    spec: dict[str, Any] = {
        "name": problem.name,
        "dim": problem.dim,
        "seed": problem.seed,
        "objective": problem.objective.to_dict(),
        "set": problem.set.to_dict(),
    }
    if problem.x0 is not None:
        spec["x0"] = problem.x0.tolist()
    gt = problem.ground_truth
    if gt is not None:
        g: dict[str, Any] = {"f_star": gt.f_star}
        if gt.optset is not None:
            g["optset"] = np.asarray(gt.optset).tolist()
        if gt.heb is not None:
            g["heb"] = {"theta": gt.heb.theta, "c": gt.heb.c}
        for key in ("alpha", "L_f", "D", "grad_min", "lambda_star"):
            v = getattr(gt, key)
            if v is not None:
                g[key] = v
        spec["ground_truth"] = g
    return spec


def load_problem_spec(path: Union[str, Path]) -> Problem:
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{path}: not valid JSON ({e})") from None
    return problem_from_spec(spec)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


def trace_to_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in trace.records:
        w.writerow([_fmt(getattr(r, c)) for c in TRACE_COLUMNS])
    return buf.getvalue()


def write_trace_csv(trace: Trace, path: Union[str, Path]) -> None:
    Path(path).write_text(trace_to_csv(trace))


def read_trace_csv(path: Union[str, Path]) -> dict[str, np.ndarray]:
    """Columns of a trace CSV; empty fields become NaN."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_COLUMNS:
        raise InvalidInputError(f"{path}: unexpected trace header {rows[:1]}")
    cols = list(zip(*rows[1:])) if len(rows) > 1 else [()] * len(TRACE_COLUMNS)
    return {
        name: np.array([float(v) if v else np.nan for v in col], dtype=float)
        for name, col in zip(TRACE_COLUMNS, cols)
    }


def to_jsonable(o):
    if isinstance(o, dict):
        return {k: to_jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [to_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    return o


def write_json(obj: Any, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=False) + "\n")
