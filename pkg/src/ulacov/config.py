"""Run-config schema (version 1) and the schemas of JSON written to stdout."""

from __future__ import annotations

import json
import os
from pathlib import Path

import jsonschema

from .errors import ConfigurationError

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "ULACOV_OUTPUT_DIR"

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_count = {"type": "integer", "minimum": 1}
_vec = {"type": "array", "items": _num, "minItems": 1}

POTENTIAL_SCHEMA = {
    "oneOf": [
        {"type": "object", "additionalProperties": False,
         "required": ["kind", "alpha", "dim"],
         "properties": {"kind": {"const": "gaussian_iso"}, "alpha": _pos, "dim": _count,
                        "minimizer": _vec}},
        {"type": "object", "additionalProperties": False,
         "required": ["kind", "precision"],
         "properties": {"kind": {"const": "gaussian_diag"},
                        "precision": {"type": "array", "items": _pos, "minItems": 1},
                        "minimizer": _vec}},
        {"type": "object", "additionalProperties": False,
         "required": ["kind", "a", "b", "dim"],
         "properties": {"kind": {"const": "logcosh"}, "a": _pos, "b": _pos, "dim": _count}},
    ]
}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "potential", "mode"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "potential": POTENTIAL_SCHEMA,
        "mode": {"enum": ["single", "parallel"]},
        "seed": {"type": "integer", "minimum": 0},
        "init": _vec,
        "chain": {
            "type": "object", "additionalProperties": False,
            "required": ["eta", "burn_in"],
            "properties": {"eta": _pos, "burn_in": {"type": "integer", "minimum": 0},
                           "n": _count, "N": _count},
        },
        "plan": {
            "type": "object", "additionalProperties": False,
            "required": ["epsilon", "delta"],
            "properties": {"epsilon": _pos, "delta": _pos, "eta": _pos,
                           "relax": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
        },
        "experiment": {
            "type": "object", "additionalProperties": False,
            "properties": {"replications": _count, "workers": _count,
                           "max_grad_evals": _pos, "timing": {"type": "boolean"},
                           "epsilon": _pos, "delta": _pos, "reference_n": _count},
        },
        "outputs": {
            "type": "object", "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "csv": {"type": "string"},
                           "summary": {"type": "string"}},
        },
    },
    "oneOf": [{"required": ["chain"]}, {"required": ["plan"]}],
}

_opt_num = {"type": ["number", "null"]}

PLAN_OUTPUT_SCHEMA = {
    "type": "object",
    "required": ["mode", "eta", "m", "n_or_N", "total_samples", "lsi_joint",
                 "lsi_marginal_limit", "epsilon", "delta", "certified"],
    "properties": {
        "mode": {"enum": ["single", "parallel"]},
        "eta": _pos, "m": {"type": "integer", "minimum": 0}, "n_or_N": _count,
        "total_samples": _count, "lsi_joint": _pos, "lsi_marginal_limit": _num,
        "epsilon": _pos, "delta": _pos, "certified": {"type": "boolean"},
        "relax": _pos, "notes": {"type": "array", "items": {"type": "string"}},
    },
}

_quant = {"type": ["object", "null"], "additionalProperties": _num}

SUMMARY_OUTPUT_SCHEMA = {
    "type": "object",
    "required": ["mode", "eta", "burn_in", "size", "replications", "grad_evals",
                 "coverage", "err_disc", "err_nonstat", "quantiles"],
    "properties": {
        "mode": {"enum": ["single", "parallel"]},
        "eta": _pos, "burn_in": {"type": "integer"}, "size": _count,
        "replications": _count, "grad_evals": {"type": "integer"},
        "coverage": _opt_num, "err_disc": _opt_num, "err_nonstat": _opt_num,
        "triangle_ok": {"type": ["boolean", "null"]},
        "quantiles": {"type": "object", "properties": {"err_total": _quant, "err_var": _quant}},
        "outputs": {"type": "object"},
    },
}


def validate(obj, schema):
    try:
        jsonschema.validate(obj, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config error at {where}: {exc.message}") from None
    return obj


def load_run_config(path):
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    validate(obj, RUN_SCHEMA)
    chain = obj.get("chain")
    if chain is not None:
        key = "n" if obj["mode"] == "single" else "N"
        if key not in chain or len({"n", "N"} & set(chain)) != 1:
            raise ConfigurationError(f"config error at chain: {obj['mode']} mode needs '{key}' only")
    return obj


def output_dir(cfg_outputs=None, override=None):
    if override:
        return Path(override)
    if cfg_outputs and cfg_outputs.get("dir"):
        return Path(cfg_outputs["dir"])
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))
