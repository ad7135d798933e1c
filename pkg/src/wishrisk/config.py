"""YAML run configurations: schema, loading and conversion to model objects."""

import re
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .exceptions import ValidationError, WishriskError
from .inversion import InversionConfig
from .riskmeasures import OneDate, SpectralPayoff, TailQuery, TwoDates
from .wishart import TWO_DATE_CONVENTIONS, WishartParams

SCHEMA_VERSION = 1


class ConfigError(WishriskError, ValueError):
    """Invalid or unreadable configuration."""


_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_payoff = {"oneOf": [
    {"type": "string", "pattern": r"^(s|x[1-9][1-9])$"},
    {"type": "object", "additionalProperties": False, "required": ["theta"],
     "properties": {"theta": _matrix, "label": {"type": "string"}}},
]}
_positive = {"type": "number", "exclusiveMinimum": 0}
_level = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

_query = {
    "type": "object", "additionalProperties": False,
    "required": ["conditioner", "threshold"],
    "properties": {
        "label": {"type": "string"},
        "conditioner": _payoff,
        "threshold": {"type": "number"},
        "targets": {"type": "array", "items": {
            "type": "array", "prefixItems": [_payoff, {"type": "integer", "minimum": 0}],
            "minItems": 2, "maxItems": 2}},
        "t": _positive,
        "t1": _positive,
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object", "additionalProperties": False,
    "required": ["schema_version", "model"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": {
            "type": "object", "additionalProperties": False, "required": ["m", "sigma"],
            "properties": {
                "beta": {"type": "number"},
                "omega": _matrix,
                "m": _matrix,
                "sigma": {"oneOf": [_matrix, {
                    "type": "object", "additionalProperties": False,
                    "required": ["s11", "s22"],
                    "properties": {"s11": _positive, "s22": _positive,
                                   "rho": {"type": "number", "minimum": -1, "maximum": 1},
                                   "s12": {"type": "number"}}}]},
                "x0": {"oneOf": [{"const": "stationary-mean"}, _matrix]},
            },
        },
        "inversion": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "tol": _positive,
                "alpha_policy": {"enum": ["auto", "fixed"]},
                "alpha": {"type": "number"},
                "side": {"enum": ["auto", "positive", "negative"]},
                "u_max": _positive,
                "max_subdivisions": {"type": "integer", "minimum": 1},
            },
        },
        "convention": {"enum": list(TWO_DATE_CONVENTIONS)},
        "diff_mode": {"enum": ["relative", "points"]},
        "format": {"enum": ["table", "json", "csv"]},
        "queries": {"type": "array", "items": _query},
        "figure": {
            "type": "object", "additionalProperties": False,
            "required": ["id", "axis", "conditioner", "values"],
            "properties": {
                "id": {"type": "string"},
                "axis": {"enum": ["threshold", "t1"]},
                "conditioner": _payoff,
                "target": _payoff,
                "order": {"type": "integer", "minimum": 0},
                "threshold": {"type": "number"},
                "t": _positive,
                "values": {"oneOf": [
                    {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    {"type": "object", "additionalProperties": False,
                     "required": ["start", "stop", "num"],
                     "properties": {"start": {"type": "number"}, "stop": {"type": "number"},
                                    "num": {"type": "integer", "minimum": 1},
                                    "spacing": {"enum": ["linear", "log"]}}}]},
            },
        },
        "allocation": {
            "type": "object", "additionalProperties": False, "required": ["budget"],
            "properties": {
                "losses": {"type": "array", "items": _payoff, "minItems": 2},
                "conditioner": _payoff,
                "budget": _positive,
                "gamma": {"type": "number", "minimum": 0},
                "quantile_level": _level,
                "z_star": {"type": "number"},
                "t": _positive,
                "starts": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "estimate": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "csv": {"type": "string"},
                "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                "line_columns": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "date_column": {"type": "string"},
                "delimiter": {"type": "string", "minLength": 1, "maxLength": 1},
                "date_format": {"type": "string"},
                "min_obs": {"type": "integer", "minimum": 2},
                "ddof": {"type": "integer", "minimum": 0},
                "quantile_level": _level,
                "synthetic": {"type": "boolean"},
            },
        },
        "simulation": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "paths": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "scheme": {"enum": ["exact", "euler"]},
                "dt": _positive,
                "workers": {"type": "integer", "minimum": 1},
                "n_se": _positive,
                "dump": {"type": "string"},
            },
        },
    },
}


def _error_path(err):
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def validate(raw, source="<config>"):
    """Check ``raw`` against :data:`SCHEMA`; raise :class:`ConfigError` with the key path."""
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(f"{source}: {_error_path(first)}: {first.message}")
    return raw


def load(path):
    """Read and validate a YAML config file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    return validate(raw, str(path))


def bundled(name):
    """Path of a bundled config (``name`` with or without ``.cfg``)."""
    if not name.endswith(".cfg"):
        name += ".cfg"
    ref = resources.files("wishrisk") / "configs" / name
    if not ref.is_file():
        raise ConfigError(f"no bundled config named {name}")
    return Path(str(ref))


def bundled_names():
    root = resources.files("wishrisk") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def _sigma(spec):
    if isinstance(spec, dict):
        s11, s22 = spec["s11"], spec["s22"]
        if "s12" in spec and "rho" in spec:
            raise ConfigError("model/sigma: give rho or s12, not both")
        s12 = spec.get("s12", spec.get("rho", 0.0) * np.sqrt(s11 * s22))
        return np.array([[s11, s12], [s12, s22]])
    return np.array(spec, dtype=float)


def build_params(raw):
    """:class:`WishartParams` from the ``model`` section."""
    model = raw["model"]
    x0 = model.get("x0", "stationary-mean")
    try:
        return WishartParams(m=np.array(model["m"], dtype=float), sigma=_sigma(model["sigma"]),
                             x0=None if x0 == "stationary-mean" else np.array(x0, dtype=float),
                             beta=model.get("beta"),
                             omega=None if "omega" not in model else np.array(model["omega"]))
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from exc


def build_inversion(raw):
    try:
        return InversionConfig(**raw.get("inversion", {}))
    except (ValidationError, TypeError) as exc:
        raise ConfigError(f"inversion: {exc}") from exc


_NAMED = re.compile(r"^x([1-9])([1-9])$")


def payoff(spec, n):
    """:class:`SpectralPayoff` from ``"x11"``, ``"x12"``, ``"s"`` or ``{theta: ...}``."""
    if isinstance(spec, dict):
        th = np.array(spec["theta"], dtype=float)
        if th.shape != (n, n):
            raise ConfigError(f"payoff theta must be {n}x{n}")
        return SpectralPayoff(th, spec.get("label", ""))
    if spec == "s":
        return SpectralPayoff.portfolio(n)
    i, j = (int(c) - 1 for c in _NAMED.match(spec).groups())
    if max(i, j) >= n:
        raise ConfigError(f"payoff {spec} exceeds dimension {n}")
    return SpectralPayoff.loss(i, n) if i == j else SpectralPayoff.covariance(i, j, n)


def build_queries(raw, n, two_dates=None):
    """Tail queries; ``two_dates=(t0, t1)`` overrides every query's dates."""
    out = []
    for k, q in enumerate(raw.get("queries", [])):
        try:
            if two_dates is not None:
                dates = TwoDates(*two_dates)
            elif "t1" in q:
                dates = TwoDates(q.get("t", 1.0), q["t1"])
            else:
                dates = OneDate(q.get("t", 1.0))
            targets = tuple((payoff(p, n), o) for p, o in q.get("targets", []))
            out.append(TailQuery(payoff(q["conditioner"], n), q["threshold"], targets, dates,
                                 q.get("label", "")))
        except ValidationError as exc:
            raise ConfigError(f"queries/{k}: {exc}") from exc
    return out


def grid(spec):
    if isinstance(spec, list):
        return np.array(spec, dtype=float)
    fn = np.geomspace if spec.get("spacing") == "log" else np.linspace
    return fn(spec["start"], spec["stop"], spec["num"])


__all__ = ["SCHEMA", "SCHEMA_VERSION", "ConfigError", "validate", "load", "bundled",
           "bundled_names", "build_params", "build_inversion", "build_queries", "payoff", "grid"]
