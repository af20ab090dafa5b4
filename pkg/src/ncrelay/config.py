"""Experiment configuration: TOML or JSON files, schema validation, presets.

A config file looks like::

    name = "fig2"
    snr_db = [0, 5, 10, 15, 20]
    sr_mode = "realistic"        # or "ideal"
    demod = "ml"                 # or "mdd"

    [network]
    encoding = [[1, 0], [1, 1]]  # one row per relay, one column per source

    [topology]
    iid_sigma_sq = 1.0
    # or explicit tables: sigma_sq_sd = [..], sigma_sq_sr = [[..]], sigma_sq_rd = [..]
    # or geometry: sources = [[x, y], ..], relays = [[x, y], ..], destination = [x, y], alpha = 3

    [mc]
    seed = 1
    max_trials = 100000000
    target_errors = 400
    mode = "bsc"
    workers = 1

    [output]
    path = ""
    format = "csv"
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .channel import Topology
from .gf2code import NetworkCode
from .montecarlo import McConfig


class ConfigError(ValueError):
    pass


_bits_row = {"type": "array", "items": {"type": "integer", "enum": [0, 1]}, "minItems": 1}
_pos = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_posvar = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["network", "topology"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "snr_db": {"type": "array", "items": {"type": "number"}},
        "sr_mode": {"enum": ["realistic", "ideal"]},
        "demod": {"enum": ["ml", "mdd"]},
        "network": {
            "type": "object",
            "additionalProperties": False,
            "required": ["encoding"],
            "properties": {
                "encoding": {"type": "array", "items": _bits_row, "minItems": 1},
                "n_sources": {"type": "integer", "minimum": 1},
                "n_relays": {"type": "integer", "minimum": 1},
            },
        },
        "topology": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "iid_sigma_sq": _posvar,
                "sigma_sq_sd": {"type": "array", "items": _posvar},
                "sigma_sq_sr": {"type": "array", "items": {"type": "array", "items": _posvar}},
                "sigma_sq_rd": {"type": "array", "items": _posvar},
                "sources": {"type": "array", "items": _pos},
                "relays": {"type": "array", "items": _pos},
                "destination": _pos,
                "alpha": {"type": "number", "exclusiveMinimum": 0},
            },
            "oneOf": [
                {"required": ["iid_sigma_sq"]},
                {"required": ["sigma_sq_sd", "sigma_sq_sr", "sigma_sq_rd"]},
                {"required": ["sources", "relays", "destination", "alpha"]},
            ],
        },
        "mc": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "max_trials": {"type": "integer", "minimum": 1},
                "target_errors": {"type": "integer", "minimum": 1},
                "mode": {"enum": ["bsc", "waveform"]},
                "workers": {"type": "integer", "minimum": 1},
                "block_trials": {"type": "integer", "minimum": 1},
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "semi_samples": {"type": "integer", "minimum": 1},
                "literal_dh2": {"type": "boolean"},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "format": {"enum": ["csv", "json"]},
            },
        },
    },
}

MC_DEFAULTS = {"seed": 1, "max_trials": 10**8, "target_errors": 400, "mode": "bsc", "workers": 1}
ANALYSIS_DEFAULTS = {"semi_samples": 100_000, "literal_dh2": False}


@dataclass
class ExperimentConfig:
    """Validated experiment description. ``raw`` is the normalized document."""

    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        doc = copy.deepcopy(doc)
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as e:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(f"invalid config at {where}: {e.message}") from None
        enc = doc["network"]["encoding"]
        widths = {len(r) for r in enc}
        if len(widths) != 1:
            raise ConfigError("encoding rows must all have the same length")
        ns, nr = widths.pop(), len(enc)
        net = doc["network"]
        if net.get("n_sources", ns) != ns or net.get("n_relays", nr) != nr:
            raise ConfigError(f"encoding is {nr}x{ns} but n_sources/n_relays say otherwise")
        net["n_sources"], net["n_relays"] = ns, nr
        doc.setdefault("snr_db", [])
        doc.setdefault("sr_mode", "realistic")
        doc.setdefault("demod", "ml")
        doc["mc"] = {**MC_DEFAULTS, **doc.get("mc", {})}
        doc["analysis"] = {**ANALYSIS_DEFAULTS, **doc.get("analysis", {})}
        doc["output"] = {"path": "", "format": "csv", **doc.get("output", {})}
        cfg = cls(doc)
        cfg.topology()  # shape checks
        return cfg

    # -- accessors
    @property
    def name(self) -> str:
        return self.raw.get("name", "")

    @property
    def snr_db(self) -> list:
        return list(self.raw["snr_db"])

    @property
    def sr_mode(self) -> str:
        return self.raw["sr_mode"]

    @property
    def demod(self) -> str:
        return self.raw["demod"]

    def code(self) -> NetworkCode:
        return NetworkCode(np.array(self.raw["network"]["encoding"], dtype=np.uint8))

    def topology(self, sr_mode: str | None = None) -> Topology:
        t = self.raw["topology"]
        ns, nr = self.raw["network"]["n_sources"], self.raw["network"]["n_relays"]
        ideal = (sr_mode or self.sr_mode) == "ideal"
        try:
            if "iid_sigma_sq" in t:
                return Topology.iid(ns, nr, t["iid_sigma_sq"], ideal_sr=ideal)
            if "alpha" in t:
                if len(t["sources"]) != ns or len(t["relays"]) != nr:
                    raise ConfigError("number of node positions does not match the encoding matrix")
                return Topology.from_positions(t["sources"], t["relays"], t["destination"], t["alpha"], ideal)
            return Topology(np.array(t["sigma_sq_sd"]), np.array(t["sigma_sq_sr"]), np.array(t["sigma_sq_rd"]), ideal)
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"invalid topology: {e}") from None

    def mc_config(self, **overrides) -> McConfig:
        m = {**self.raw["mc"], **{k: v for k, v in overrides.items() if v is not None}}
        demod = overrides.get("demod") or self.demod
        m.pop("demod", None)
        try:
            return McConfig(snr_db=tuple(self.snr_db), demod=demod, **m)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid mc block: {e}") from None

    def updated(self, **changes) -> ExperimentConfig:
        """Copy with top-level or dotted (``mc.seed``) keys replaced; None values are ignored."""
        doc = copy.deepcopy(self.raw)
        for key, val in changes.items():
            if val is None:
                continue
            parts = key.split(".")
            node = doc
            for p in parts[:-1]:
                node = node.setdefault(p, {})
            node[parts[-1]] = val
        return ExperimentConfig.from_dict(doc)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def loads(text: str, fmt: str = "toml") -> ExperimentConfig:
    try:
        doc = json.loads(text) if fmt == "json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse {fmt}: {e}") from None
    return ExperimentConfig.from_dict(doc)


def dumps(cfg: ExperimentConfig, fmt: str = "toml") -> str:
    if fmt == "json":
        return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    return tomli_w.dumps(cfg.to_dict())


def load(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()  # OSError propagates to the caller
    return loads(text, "json" if path.suffix.lower() == ".json" else "toml")


def dump(cfg: ExperimentConfig, path) -> None:
    path = Path(path)
    path.write_text(dumps(cfg, "json" if path.suffix.lower() == ".json" else "toml"))


# ------------------------------------------------------------------ presets

_ALIASES = {"fig9": "fig9-s1", "fig10": "fig10-s1"}


def normalize_preset_name(name: str) -> str:
    return re.sub(r"[\s_]+", "-", name.strip().lower())


def preset_names() -> list[str]:
    files = resources.files("ncrelay").joinpath("presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".toml"))


def load_preset(name: str) -> ExperimentConfig:
    """Load a shipped preset. A trailing ``-ideal`` or ``-realistic`` selects the S->R setting."""
    key = normalize_preset_name(name)
    sr = None
    for suffix in ("ideal", "realistic"):
        if key.endswith("-" + suffix):
            key, sr = key[: -len(suffix) - 1], suffix
    key = _ALIASES.get(key, key)
    path = resources.files("ncrelay").joinpath("presets", key + ".toml")
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    cfg = loads(path.read_text(), "toml")
    return cfg.updated(sr_mode=sr) if sr else cfg
