"""Configuration schema, deterministic CSV/JSON writers and static SVG plots."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

SPEC_TAG = "bartnik-forge/1"

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}

_profile = {
    "type": "object",
    "oneOf": [
        {"properties": {"kind": {"const": "constant"}, "L1": _num}, "required": ["kind", "L1"],
         "additionalProperties": False},
        {"properties": {"kind": {"const": "inverse_sqrt"}, "B": _num}, "required": ["kind", "B"],
         "additionalProperties": False},
        {"properties": {"kind": {"const": "cmc"}, "K2": _num, "K1": _num}, "required": ["kind", "K2", "K1"],
         "additionalProperties": False},
        {"properties": {"kind": {"const": "sqrt_two_over_r"}, "C3": _num}, "required": ["kind", "C3"],
         "additionalProperties": False},
        {"properties": {"kind": {"const": "custom"}, "csv": {"type": "string"}}, "required": ["kind", "csv"],
         "additionalProperties": False},
    ],
}

_freeze = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

_path = {
    "type": "object",
    "oneOf": [
        {"properties": {"kind": {"const": "direct"}, "alpha": {"type": "number", "minimum": 0},
                        "beta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}, "freeze_eps": _freeze},
         "required": ["kind", "alpha", "beta"], "additionalProperties": False},
        {"properties": {"kind": {"const": "tilted"}, "c": _num, "ns": {"type": "integer", "minimum": 3},
                        "ntheta": {"type": "integer", "minimum": 5}, "freeze_eps": _freeze},
         "required": ["kind", "c"], "additionalProperties": False},
        {"properties": {"kind": {"const": "axisymmetric"}, "npz": {"type": "string"}, "freeze_eps": _freeze},
         "required": ["kind", "npz"], "additionalProperties": False},
    ],
}

_data = {
    "type": "object",
    "properties": {"r_o": _pos, "H_o": _num, "P_o": _num},
    "required": ["r_o", "H_o", "P_o"],
    "additionalProperties": False,
}

_collar = {
    "type": "object",
    "properties": {"type": {"enum": ["general", "simple"]}, "leaves": {"type": "integer", "minimum": 5},
                   "round_length": _pos},
    "additionalProperties": False,
}

_extension = {
    "type": "object",
    "properties": {
        "eta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "leaves": {"type": "integer", "minimum": 5},
        "cmc": {"type": "object", "properties": {"K2": _num, "K1": _num}, "required": ["K2", "K1"],
                "additionalProperties": False},
        "taper": {"type": "object", "properties": {"r_switch": _pos, "target": _profile},
                  "required": ["r_switch", "target"], "additionalProperties": False},
        "far_factor": {"type": "number", "exclusiveMinimum": 1},
    },
    "additionalProperties": False,
}

_list = {"type": "array", "items": _num, "minItems": 1}

_bound = {
    "type": "object",
    "properties": {
        "R_gamma": _num,
        "witness": {"type": "boolean"},
        "sweep": {"type": "object", "properties": {"H_o": _list, "P_o": _list, "alpha": _list, "beta": _list},
                  "required": ["H_o", "P_o", "alpha", "beta"], "additionalProperties": False},
    },
    "additionalProperties": False,
}

_reduction = {
    "type": "object",
    "properties": {"Rmin": _pos, "delta_max": _pos, "nodes": {"type": "integer", "minimum": 5}},
    "additionalProperties": False,
}

RUN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "spec": {"const": SPEC_TAG},
        "command": {"enum": ["validate", "collar", "extend", "bound", "reduce"]},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "data": _data,
        "path": _path,
        "profile": _profile,
        "collar": _collar,
        "extension": _extension,
        "bound": _bound,
        "reduction": _reduction,
        "cmc": {"type": "object", "properties": {"K2": _num, "K1": _num}, "required": ["K2", "K1"],
                "additionalProperties": False},
    },
    "required": ["spec", "data"],
    "additionalProperties": False,
}

SWEEP_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "spec": {"const": SPEC_TAG},
        "workers": {"type": "integer", "minimum": 1},
        "runs": {"type": "array", "items": {"type": "object"}, "minItems": 1},
    },
    "required": ["spec", "runs"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Malformed or schema-invalid configuration (exit code 2)."""


def parse_config_text(text: str, schema: dict = RUN_SCHEMA) -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    validate_config(cfg, schema)
    return cfg


def validate_config(cfg, schema: dict = RUN_SCHEMA) -> dict:
    errors = sorted(Draft202012Validator(schema).iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            msgs.append(f"{where}: {e.message}")
        raise ConfigError("schema violation: " + "; ".join(msgs))
    return cfg


def load_config(path, schema: dict = RUN_SCHEMA) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e.strerror}") from None
    return parse_config_text(text, schema)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))
    return p


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path, columns: dict) -> Path:
    """Header row plus one row per sample; floats use 17 significant digits."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("CSV columns differ in length")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_fmt(c[i]) for c in cols))
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return p


def write_rows_csv(path, rows: list[dict], columns) -> Path:
    return write_csv(path, {c: [r[c] for r in rows] for c in columns})


def plot_svg(path, s, series: dict, xlabel: str = "s", title: str | None = None) -> Path:
    """Stacked static line plots, one panel per series, with reproducible SVG bytes."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "bartnik-forge", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(len(series), 1, figsize=(6.4, 1.9 * len(series)), sharex=True, squeeze=False)
        for ax, (name, ys) in zip(axes[:, 0], series.items()):
            ax.plot(s, ys, lw=1.0)
            ax.set_ylabel(name)
            ax.grid(True, lw=0.3)
        axes[-1, 0].set_xlabel(xlabel)
        if title:
            axes[0, 0].set_title(title)
        fig.tight_layout()
        fig.savefig(p, format="svg", metadata={"Date": None})
        plt.close(fig)
    return p
