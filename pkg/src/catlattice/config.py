"""Experiment configuration: INI-style sections, strict validation.

Grammar: standard configparser INI.  Sections and keys are fixed; unknown
keys or sections are rejected.  Values are numbers, comma-separated number
lists, or strings.  Overrides arrive as repeatable "section.key=value" flags.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field

import numpy as np

from .coupling import COUPLINGS


class ConfigError(Exception):
    pass


_SCHEMA = {
    "model": {
        "d": int, "N": int, "coupling": str, "eps": float, "eps_list": "floats",
    },
    "expansion": {
        "K": int, "P_max": int, "j_max": int, "t_cap": int, "prune_tol": float,
    },
    "symbolic": {
        "margin": float, "m": int,
    },
    "gibbs": {
        "h0": int, "ell": int, "molecule_cap": int, "cluster_cap": int,
        "sup_samples": int, "norm_floor": float,
    },
    "estimator": {
        "T": int, "burn_in": int, "T0": int, "n_windows": int,
        "zeta_points": int, "seed": int, "n_replicas": int, "V0": "ints",
    },
    "output": {
        "dir": str, "format": str,
    },
}

_DEFAULTS = {
    "model": {"d": 1, "N": 2, "coupling": "sine", "eps": 0.05,
              "eps_list": "0.02,0.04,0.06,0.08"},
    "expansion": {"K": 2, "P_max": 60, "j_max": 5, "t_cap": 20, "prune_tol": 1e-16},
    "symbolic": {"margin": 1e-9, "m": 25},
    "gibbs": {"h0": 2, "ell": 2, "molecule_cap": 4, "cluster_cap": 6,
              "sup_samples": 256, "norm_floor": 1e-12},
    "estimator": {"T": 200000, "burn_in": 1000, "T0": 50, "n_windows": 1000,
                  "zeta_points": 21, "seed": 0, "n_replicas": 16, "V0": ""},
    "output": {"dir": "out", "format": "csv"},
}


def _parse_value(kind, raw: str):
    if kind is int:
        v = float(raw)
        if v != int(v):
            raise ConfigError(f"expected integer, got {raw!r}")
        return int(v)
    if kind is float:
        return float(raw)
    if kind is str:
        return raw.strip()
    if kind == "floats":
        raw = raw.strip()
        return [float(x) for x in raw.split(",") if x.strip()] if raw else []
    if kind == "ints":
        raw = raw.strip()
        return [int(x) for x in raw.split(",") if x.strip()] if raw else []
    raise ConfigError(f"unknown schema kind {kind}")


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        sec, k = key.split(".")
        return self.values[sec][k]

    def get(self, key, default=None):
        try:
            return self[key]
        except KeyError:
            return default

    def digest(self) -> str:
        blob = repr(sorted((s, sorted(kv.items())) for s, kv in self.values.items()))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def validate(self):
        v = self.values
        if v["model"]["d"] < 1:
            raise ConfigError("model.d must be >= 1")
        if v["model"]["N"] < 0:
            raise ConfigError("model.N must be >= 0")
        if v["model"]["coupling"] not in COUPLINGS:
            raise ConfigError(f"unknown coupling {v['model']['coupling']!r}")
        if abs(v["model"]["eps"]) >= 1:
            raise ConfigError("model.eps must satisfy |eps| < 1")
        if v["expansion"]["K"] < 0 or v["expansion"]["P_max"] < 1:
            raise ConfigError("expansion.K >= 0 and P_max >= 1 required")
        if not (0 <= v["symbolic"]["margin"] < 0.1):
            raise ConfigError("symbolic.margin out of range")
        if v["gibbs"]["h0"] < 1 or v["gibbs"]["ell"] < 1:
            raise ConfigError("gibbs.h0 and gibbs.ell must be >= 1")
        if v["estimator"]["T"] < 10 * v["estimator"]["burn_in"]:
            raise ConfigError("estimator.T must be >= 10 * burn_in")
        return self


def load_config(path: str | None = None, overrides=()) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    if path is not None:
        read = cp.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
    values = {}
    for sec, keys in _SCHEMA.items():
        values[sec] = {}
        for k, kind in keys.items():
            raw = _DEFAULTS[sec].get(k, "")
            values[sec][k] = _parse_value(kind, str(raw))
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for k, raw in cp[sec].items():
            if k not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{k}")
            values[sec][k] = _parse_value(_SCHEMA[sec][k], raw)
    for ov in overrides:
        if "=" not in ov or "." not in ov.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value: {ov!r}")
        key, raw = ov.split("=", 1)
        sec, k = key.split(".", 1)
        if sec not in _SCHEMA or k not in _SCHEMA[sec]:
            raise ConfigError(f"unknown key {sec}.{k}")
        values[sec][k] = _parse_value(_SCHEMA[sec][k], raw)
    return ExperimentConfig(values).validate()
