"""Run configuration: loading (JSON or TOML), validation, and the per-stage
config hashes that keep cached artifacts honest.

Every stage's artifacts are stamped with a hash of exactly the config keys
that stage depends on. A downstream stage refuses to run when a
predecessor's stamp no longer matches the current configuration, and a
threshold-only change leaves upstream stages untouched.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .records import WELLNESS_LEVELS

try:
    import tomllib  # Python >= 3.11
except ImportError:
    import tomli as tomllib

STAGES = ("synth", "ingest", "graph", "features", "analyze", "train", "report")

# config keys each stage's output depends on (cumulative via DEPENDencies)
STAGE_KEYS: dict[str, tuple[str, ...]] = {
    "synth": ("synth", "seed"),
    "ingest": ("inputs", "study_start", "study_end", "delimiter", "column_maps",
               "compliance_threshold"),
    "graph": ("min_edge_frequency",),
    "features": ("target",),
    "analyze": ("correlation_threshold", "population_aggregator", "alpha"),
    "train": ("feature_groups", "split", "classifiers", "ensemble", "seed"),
    "report": (),
}
STAGE_DEPS: dict[str, tuple[str, ...]] = {
    "synth": (),
    "ingest": (),
    "graph": ("ingest",),
    "features": ("ingest", "graph"),
    "analyze": ("ingest", "graph", "features"),
    "train": ("features",),
    "report": ("analyze", "train"),
}


@dataclass
class RunConfig:
    """Validated pipeline configuration; see README for the key reference."""

    study_start: date
    study_end: date
    inputs: dict[str, str] = field(default_factory=dict)
    delimiter: str = ","
    column_maps: dict[str, dict[str, str]] = field(default_factory=dict)
    compliance_threshold: float = 0.8
    min_edge_frequency: int = 3
    correlation_threshold: float = 0.5
    population_aggregator: str = "mean"
    alpha: float = 0.05
    target: str = "stress"
    feature_groups: tuple[str, ...] = ("gender", "behavior", "structure")
    split: dict[str, Any] = field(default_factory=dict)
    classifiers: dict[str, Any] = field(default_factory=dict)
    ensemble: dict[str, Any] = field(default_factory=dict)
    synth: dict[str, Any] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.study_end <= self.study_start:
            raise ConfigError("study_end must be after study_start")
        if not (0.0 < self.compliance_threshold <= 1.0):
            raise ConfigError("compliance_threshold must be in (0, 1]")
        if self.min_edge_frequency < 1:
            raise ConfigError("min_edge_frequency must be >= 1")
        if not (0.0 < self.correlation_threshold <= 1.0):
            raise ConfigError("correlation_threshold must be in (0, 1]")
        if self.population_aggregator not in ("mean", "median"):
            raise ConfigError("population_aggregator must be 'mean' or 'median'")
        if self.target not in WELLNESS_LEVELS:
            raise ConfigError(f"target must be one of {sorted(WELLNESS_LEVELS)}")
        unknown = set(self.feature_groups) - {"gender", "behavior", "structure"}
        if unknown:
            raise ConfigError(f"unknown feature groups {sorted(unknown)}")
        self.split = {"mode": "row", "train_fraction": 0.75, **self.split}
        if self.split["mode"] not in ("row", "person"):
            raise ConfigError("split.mode must be 'row' or 'person'")

    # -- loading ------------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "RunConfig":
        data = dict(raw)
        for key in ("study_start", "study_end"):
            if key not in data:
                raise ConfigError(f"missing config key {key!r}")
            if isinstance(data[key], str):
                data[key] = date.fromisoformat(data[key])
        if "feature_groups" in data:
            data["feature_groups"] = tuple(data["feature_groups"])
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_bytes()
        if path.suffix == ".toml":
            try:
                raw = tomllib.loads(text.decode())
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"config is not valid TOML: {exc}")
        else:
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("config must be a table/object at top level")
        return cls.from_dict(raw)

    # -- hashing ------------------------------------------------------------

    def _jsonable(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, date):
                value = value.isoformat()
            if isinstance(value, tuple):
                value = list(value)
            out[name] = value
        return out

    def stage_hash(self, stage: str) -> str:
        """Hash of the config subset this stage (and its ancestors) read."""
        keys: set[str] = set()
        stack = [stage]
        while stack:
            s = stack.pop()
            keys.update(STAGE_KEYS[s])
            stack.extend(STAGE_DEPS[s])
        snapshot = {k: v for k, v in self._jsonable().items() if k in keys}
        blob = json.dumps(snapshot, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def input_path(self, kind: str, out_dir: Path) -> Path:
        """Resolve an input file; defaults to the synth stage's output when
        a synth section is configured and no explicit path was given."""
        if kind in self.inputs:
            return Path(self.inputs[kind])
        if self.synth is not None:
            return out_dir / "synth" / f"{kind}.csv"
        raise ConfigError(f"no input path configured for {kind!r}")
