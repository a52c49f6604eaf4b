"""Extraction run configuration.

The config is a JSON object: a stimulus file, an output path, an optional
device hint, and a list of model declarations.  Every declared model must
carry an explicit scoring mode; there is no inference from checkpoint names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Tuple

from .errors import ConfigError

MODES = ("causal", "masked")

_MODEL_KEYS = {"model_id", "checkpoint", "mode", "revision"}
_TOP_KEYS = {"corpus", "output", "device", "models"}


@dataclass(frozen=True)
class ModelDecl:
    """One checkpoint to run, with its declared scoring mode."""

    model_id: str
    checkpoint: str
    mode: str
    revision: Optional[str] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(
                f"model {self.model_id!r}: unknown mode {self.mode!r}, "
                f"expected one of {MODES}"
            )


@dataclass(frozen=True)
class ExtractorConfig:
    corpus: Path
    output: Path
    models: Tuple[ModelDecl, ...]
    device: str = "cpu"

    def __post_init__(self):
        if not self.models:
            raise ConfigError("config declares no models")
        seen = set()
        for decl in self.models:
            if decl.model_id in seen:
                raise ConfigError(f"duplicate model_id {decl.model_id!r}")
            seen.add(decl.model_id)


def _require(mapping: Mapping, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return mapping[key]


def from_mapping(raw: Mapping, base_dir: Path = Path(".")) -> ExtractorConfig:
    """Build a config from a parsed JSON object.

    Relative paths are resolved against base_dir (the config file's
    directory when loaded via from_file).
    """
    if not isinstance(raw, Mapping):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(raw) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    corpus = base_dir / str(_require(raw, "corpus", "config"))
    output = base_dir / str(_require(raw, "output", "config"))
    entries = _require(raw, "models", "config")
    if not isinstance(entries, list):
        raise ConfigError("'models' must be a list")

    decls = []
    for i, entry in enumerate(entries):
        where = f"models[{i}]"
        if not isinstance(entry, Mapping):
            raise ConfigError(f"{where}: expected an object")
        unknown = sorted(set(entry) - _MODEL_KEYS)
        if unknown:
            raise ConfigError(f"{where}: unknown keys: {', '.join(unknown)}")
        decls.append(
            ModelDecl(
                model_id=str(_require(entry, "model_id", where)),
                checkpoint=str(_require(entry, "checkpoint", where)),
                mode=str(_require(entry, "mode", where)),
                revision=(
                    str(entry["revision"]) if entry.get("revision") is not None else None
                ),
            )
        )

    return ExtractorConfig(
        corpus=corpus,
        output=output,
        models=tuple(decls),
        device=str(raw.get("device", "cpu")),
    )


def from_file(path: Path) -> ExtractorConfig:
    try:
        with open(path, encoding="utf-8") as fp:
            raw = json.load(fp)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}")
    return from_mapping(raw, base_dir=Path(path).parent)
