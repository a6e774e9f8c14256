"""Experiment configuration: parsing, validation, canonicalisation.

Configs are TOML (JSON accepted as an alternative). Every file is reduced
to a normalized dictionary with defaults filled in; unknown keys are
rejected with their path. The canonical form (sorted-key JSON) is hashed
into the run manifest so identical experiments are recognisable.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib  # type: ignore[import-not-found]
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError

KINDS = ("cov", "classify", "derivative", "renormalize", "simulate",
         "girsanov", "embed", "counterexample", "paper-suite")

# schema: key -> (default, type); nested dicts are sub-schemas.
_MODEL_SCHEMA = {"kind": ("fbm", str), "hurst": (0.7, float),
                 "horizon": (1.0, float)}
_SCHEDULE_SCHEMA = {"h0": (None, float), "ratio": (0.5, float),
                    "steps": (20, int), "mode": ("forward", str)}
_CONDITIONING_SCHEMA = {"kind": ("span", str),
                        "times": ([], list),
                        "indices": ([], list)}

_SCHEMAS: dict[str, dict] = {
    "cov": {"model": _MODEL_SCHEMA,
            "pairs": ([[0.25, 0.75]], list)},
    "classify": {"model": _MODEL_SCHEMA,
                 "t": (0.5, float),
                 "conditioning": _CONDITIONING_SCHEMA,
                 "schedule": _SCHEDULE_SCHEMA},
    "derivative": {"model": _MODEL_SCHEMA,
                   "t": (0.5, float),
                   "variable_times": ([0.5], list),
                   "variable_weights": ([1.0], list)},
    "renormalize": {"model": _MODEL_SCHEMA,
                    "t": (0.5, float),
                    "alpha": (1.0, float),
                    "conditioning": _CONDITIONING_SCHEMA,
                    "schedule": _SCHEDULE_SCHEMA},
    "simulate": {"hurst": (0.7, float), "horizon": (1.0, float),
                 "steps": (64, int), "n_paths": (1000, int),
                 "method": ("circulant", str), "oversample": (0, int),
                 "drift_a": (0.0, float), "x0": (0.0, float)},
    "girsanov": {"hurst": (0.7, float), "horizon": (1.0, float),
                 "steps": (256, int), "n_paths": (10000, int),
                 "drift_a": (1.0, float),
                 "probe_pairs": ([[0.25, 0.75]], list)},
    "embed": {"a": (1.0, float), "b": (0.5, float),
              "constants": ([1.0, 1.0], list),
              "times": ([0.25, 0.5, 0.75], list),
              "mc_paths": (0, int)},
    "counterexample": {"level": (256, int), "t": (0.5, float),
                       "h": (2.0 ** -8, float),
                       "truncations": ([64, 256, 1024], list),
                       "kink_exponent": (0.3, float)},
    "paper-suite": {"criteria": ([], list), "disable": ([], list),
                    "scale": (1.0, float)},
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: dict
    seed: int = 0
    out_dir: Optional[str] = None
    threads: int = 1
    fmt: str = "csv"

    def canonical_json(self) -> str:
        body = {"kind": self.kind, "params": self.params, "seed": self.seed,
                "format": self.fmt}
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _coerce(value, default, typ, path: str):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}", path)
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}", path)
        return int(value)
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}", path)
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}", path)
        return value
    raise ConfigError(f"{path}: unsupported schema type", path)


def _normalize(data: dict, schema: dict, path: str = "") -> dict:
    out = {}
    for key, val in data.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown key {here!r}", here)
        spec = schema[key]
        if isinstance(spec, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{here}: expected a table", here)
            out[key] = _normalize(val, spec, here)
        else:
            default, typ = spec
            out[key] = _coerce(val, default, typ, here)
    for key, spec in schema.items():
        if key in out:
            continue
        if isinstance(spec, dict):
            out[key] = _normalize({}, spec, f"{path}.{key}" if path else key)
        else:
            out[key] = spec[0]
    return out


def validate_params(kind: str, params: dict) -> dict:
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}", "kind")
    normalized = _normalize(params or {}, _SCHEMAS[kind])
    _domain_checks(kind, normalized)
    return normalized


def _domain_checks(kind: str, p: dict) -> None:
    def _hurst(value, path):
        if not (0.0 < value < 1.0):
            raise ConfigError(f"{path}: Hurst index must lie in (0,1),"
                              f" got {value}", path)

    if "model" in p and p["model"]["kind"] == "fbm":
        _hurst(p["model"]["hurst"], "model.hurst")
    if "hurst" in p:
        _hurst(p["hurst"], "hurst")
    if "alpha" in p and not (0.0 < p["alpha"] <= 1.0):
        raise ConfigError(f"alpha: must lie in (0,1], got {p['alpha']}", "alpha")
    if "n_paths" in p and p["n_paths"] < 1:
        raise ConfigError("n_paths: must be at least 1", "n_paths")


def load_config(path, kind: Optional[str] = None, seed: int = 0,
                out_dir: Optional[str] = None, threads: int = 1,
                fmt: str = "csv") -> ExperimentConfig:
    """Parse a TOML or JSON experiment file into a validated config."""
    raw: dict[str, Any]
    p = Path(path)
    text = p.read_bytes()
    if p.suffix.lower() == ".json" or text.lstrip()[:1] == b"{":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}", "") from e
    else:
        try:
            raw = tomllib.loads(text.decode())
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"invalid TOML: {e}", "") from e
    file_kind = raw.pop("kind", None)
    kind = kind or file_kind
    if kind is None:
        raise ConfigError("no experiment kind given (file key 'kind' or CLI)",
                          "kind")
    if file_kind is not None and file_kind != kind:
        raise ConfigError(
            f"config kind {file_kind!r} conflicts with subcommand {kind!r}",
            "kind")
    seed = int(raw.pop("seed", seed))
    params = validate_params(kind, raw)
    return ExperimentConfig(kind=kind, params=params, seed=seed,
                            out_dir=out_dir, threads=threads, fmt=fmt)


def default_config(kind: str, seed: int = 0, out_dir: Optional[str] = None,
                   threads: int = 1, fmt: str = "csv") -> ExperimentConfig:
    return ExperimentConfig(kind=kind, params=validate_params(kind, {}),
                            seed=seed, out_dir=out_dir, threads=threads,
                            fmt=fmt)
