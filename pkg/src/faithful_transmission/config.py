"""Experiment config files: schema, loading and conversion to
:class:`~faithful_transmission.harness.ExperimentSpec`.

Complex numbers are written as explicit ``re``/``im`` pairs.
"""
from __future__ import annotations

import copy
import json
from pathlib import Path as FsPath
from typing import Any

import jsonschema

from .elements import ConfigError
from .harness import ExperimentSpec
from .noise import KINDS, NoiseFamily
from .protocol import VARIANTS, DecoderConfig, InputQubit
from .state import Path

_COMPLEX = {
    "type": "object",
    "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
    "required": ["re", "im"],
    "additionalProperties": False,
}
_QUBIT_PROPS = {
    "alpha_re": {"type": "number"},
    "alpha_im": {"type": "number"},
    "beta_re": {"type": "number"},
    "beta_im": {"type": "number"},
}
_UNIT = {"type": "number", "minimum": 0, "maximum": 1}
_OUTPUT_PATHS = [p.value for p in (Path.OUT_3X, Path.OUT_3Y, Path.OUT_4X, Path.OUT_4Y)]

SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "input": {
            "type": "object",
            "properties": _QUBIT_PROPS,
            "required": ["alpha_re", "beta_re"],
            "additionalProperties": False,
        },
        "ensemble": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {"weight": {"type": "number", "minimum": 0}, **_QUBIT_PROPS},
                "required": ["weight", "alpha_re", "beta_re"],
                "additionalProperties": False,
            },
        },
        "noise": {
            "type": "object",
            "properties": {
                "kind": {"enum": list(KINDS)},
                "parameters": {
                    "type": "object",
                    "properties": {
                        "phi": {"type": "number"},
                        "theta": {"type": "number"},
                        "matrix": {
                            "type": "array",
                            "minItems": 2,
                            "maxItems": 2,
                            "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": _COMPLEX},
                        },
                    },
                    "additionalProperties": False,
                },
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "decoder": {
            "type": "object",
            "properties": {
                "variant": {"enum": list(VARIANTS)},
                "eta": _UNIT,
                "t": _UNIT,
                "with_hwp0": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "run": {
            "type": "object",
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "sweep": {
                    "type": "object",
                    "properties": {
                        "parameter": {"enum": ["eta", "t"]},
                        "values": {"type": "array", "minItems": 1, "items": _UNIT},
                    },
                    "required": ["parameter", "values"],
                    "additionalProperties": False,
                },
                "oracle_check": {"type": "boolean"},
                "output": {"type": "string"},
                "correction": {"enum": ["fixed", "adaptive"]},
                "filter": {
                    "type": "object",
                    "properties": {
                        "branches": {
                            "type": "array",
                            "items": {
                                "type": "array",
                                "prefixItems": [{"enum": _OUTPUT_PATHS[::2]}, {"enum": _OUTPUT_PATHS[1::2]}],
                                "minItems": 2,
                                "maxItems": 2,
                            },
                        },
                        "outcomes": {"type": "array", "items": {"enum": ["plus_x", "minus_x"]}},
                    },
                    "additionalProperties": False,
                },
                "records": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["noise"],
    "oneOf": [{"required": ["input"]}, {"required": ["ensemble"]}],
    "additionalProperties": False,
}


def _where(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate(doc: Any) -> None:
    """Raise :class:`ConfigError` listing every schema violation by field."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        lines = []
        for e in errors:
            msg = e.message
            if e.validator == "oneOf" and not e.absolute_path:
                msg = "exactly one of 'input' or 'ensemble' is required"
            lines.append(f"{_where(e)}: {msg}")
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))


def load(path: str | FsPath) -> dict[str, Any]:
    try:
        text = FsPath(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validate(doc)
    return doc


def _qubit(d: dict[str, Any], where: str) -> InputQubit:
    alpha = complex(d["alpha_re"], d.get("alpha_im", 0.0))
    beta = complex(d["beta_re"], d.get("beta_im", 0.0))
    try:
        return InputQubit(alpha, beta)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _noise(d: dict[str, Any]) -> NoiseFamily:
    params = dict(d.get("parameters", {}))
    if "matrix" in params:
        params["matrix"] = [[complex(z["re"], z["im"]) for z in row] for row in params["matrix"]]
    try:
        return NoiseFamily(kind=d["kind"], params=params, seed=d.get("seed", 0))
    except ConfigError as exc:
        raise ConfigError(f"noise: {exc}") from None


def to_spec(doc: dict[str, Any]) -> ExperimentSpec:
    if "input" in doc:
        inputs = ((1.0, _qubit(doc["input"], "input")),)
    else:
        inputs = tuple((float(e["weight"]), _qubit(e, f"ensemble.{i}")) for i, e in enumerate(doc["ensemble"]))
    dec = doc.get("decoder", {})
    decoder = DecoderConfig(
        variant=dec.get("variant", "frequency_dual_fs"),
        fs_efficiency=float(dec.get("eta", 1.0)),
        eraser_transmission=float(dec.get("t", 0.5)),
        with_hwp0=dec.get("with_hwp0", True),
    )
    run = doc.get("run", {})
    sweep = None
    if "sweep" in run:
        sweep = (run["sweep"]["parameter"], tuple(float(v) for v in run["sweep"]["values"]))
    filt = run.get("filter")
    branch_filter = outcome_filter = None
    if filt is not None:
        if "branches" in filt:
            branch_filter = tuple((Path(x), Path(y)) for x, y in filt["branches"])
        if "outcomes" in filt:
            outcome_filter = tuple(filt["outcomes"])
    noise = _noise(doc["noise"])
    try:
        return ExperimentSpec(
            inputs=inputs,
            noise=noise,
            decoder=decoder,
            trials=run.get("trials", 1000),
            seed=noise.seed,
            sweep=sweep,
            oracle_check=run.get("oracle_check", False),
            correction=run.get("correction", "fixed"),
            branch_filter=branch_filter,
            outcome_filter=outcome_filter,
            keep_records=run.get("records", False),
        )
    except ConfigError as exc:
        where = "ensemble" if "weights" in str(exc) else "run"
        raise ConfigError(f"{where}: {exc}") from None


def echo(doc: dict[str, Any]) -> dict[str, Any]:
    """Config as recorded in reports; the output location is not part of
    the experiment."""
    out = copy.deepcopy(doc)
    out.get("run", {}).pop("output", None)
    return out
