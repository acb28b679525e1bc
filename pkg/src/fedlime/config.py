"""Strict JSON run configuration shared by all CLI subcommands.

Only the top-level ``seed`` is user-facing; every component seed is derived
from it, so the nested sections do not accept a ``seed`` key.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .curate import DEFAULT_KEEP_THRESHOLD, DEFAULT_MATCH_THRESHOLD
from .explain import LimeConfig
from .federated import FedConfig, PartitionSpec
from .features import VectorizerConfig
from .hashing import derive_seed
from .model import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Paths:
    train: str | None = None
    test: str | None = None
    unlabeled: str | None = None
    reference: str | None = None
    candidates: str | None = None
    model: str | None = None
    metrics: str | None = None
    output: str | None = None
    report: str | None = None


@dataclass(frozen=True)
class CurationConfig:
    match_threshold: float = DEFAULT_MATCH_THRESHOLD
    keep_threshold: float = DEFAULT_KEEP_THRESHOLD

    def __post_init__(self):
        for name in ("match_threshold", "keep_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    workers: int | None = None
    paths: Paths = field(default_factory=Paths)
    vectorizer: VectorizerConfig = field(default_factory=VectorizerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    federated: FedConfig = field(default_factory=FedConfig)
    partition: PartitionSpec = field(default_factory=PartitionSpec)
    lime: LimeConfig = field(default_factory=LimeConfig)
    curation: CurationConfig = field(default_factory=CurationConfig)

    def resolved_workers(self) -> int:
        return self.workers or os.cpu_count() or 1

    def with_seed(self, seed: int) -> "RunConfig":
        """Return a copy whose component seeds are all re-derived from ``seed``."""
        train = replace(self.train, seed=derive_seed(seed, "train"))
        return replace(
            self,
            seed=seed,
            train=train,
            # same seed as centralised training: K=1, C=1 runs reproduce it
            federated=replace(self.federated, train=train, seed=train.seed),
            partition=replace(self.partition, seed=derive_seed(seed, "partition")),
            lime=replace(self.lime, seed=derive_seed(seed, "lime")),
        )

    def to_json(self) -> dict:
        def section(obj, drop=("seed",)):
            return {k: v for k, v in dataclasses.asdict(obj).items() if k not in drop}

        return {
            "seed": self.seed,
            "workers": self.workers,
            "paths": section(self.paths, ()),
            "vectorizer": section(self.vectorizer, ()),
            "train": section(self.train),
            "federated": section(self.federated, ("seed", "train")),
            "partition": section(self.partition),
            "lime": section(self.lime),
            "curation": section(self.curation, ()),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


_SECTION_TYPES = {
    "paths": (Paths, ()),
    "vectorizer": (VectorizerConfig, ()),
    "train": (TrainConfig, ("seed",)),
    "federated": (FedConfig, ("seed", "train")),
    "partition": (PartitionSpec, ("seed",)),
    "lime": (LimeConfig, ("seed",)),
    "curation": (CurationConfig, ()),
}


def _coerce(name: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected a boolean, got {value!r}")
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        value = float(value)
    elif isinstance(default, str) or default is None:
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
    return value


def _section(name: str, obj: Any, overrides: dict | None = None):
    cls, hidden = _SECTION_TYPES[name]
    if not isinstance(obj, dict):
        raise ConfigError(f"{name}: expected an object")
    defaults = cls()
    allowed = {f.name for f in dataclasses.fields(cls)} - set(hidden)
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {sorted(unknown)}")
    kwargs = {k: _coerce(f"{name}.{k}", v, getattr(defaults, k)) for k, v in obj.items()}
    kwargs.update(overrides or {})
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def parse_config(obj: dict) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - ({"seed", "workers"} | set(_SECTION_TYPES))
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}")
    seed = _coerce("seed", obj.get("seed", 0), 0)
    workers = obj.get("workers")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
        raise ConfigError("workers must be a positive integer or null")
    sections = {name: _section(name, obj.get(name, {})) for name in _SECTION_TYPES if name != "federated"}
    sections["federated"] = _section("federated", obj.get("federated", {}), {"train": sections["train"]})
    return RunConfig(seed=seed, workers=workers, **sections).with_seed(seed)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig().with_seed(0)
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(obj)
