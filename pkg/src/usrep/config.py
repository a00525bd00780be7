"""Tool configuration: defaults, config-file loading, CLI-flag overrides.

Precedence is CLI flag > config file > built-in default.  The effective
configuration is embedded in run manifests so every artifact records the
settings that produced it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .datasetgen import DEFAULT_PROMPT_TEXTS

__all__ = ["ConfigError", "ToolConfig", "load_config"]

DEFAULT_DELIMITERS = ",;.，；。"


class ConfigError(ValueError):
    """Rejected configuration file or value."""


@dataclass(frozen=True)
class ToolConfig:
    """Every knob the pipeline exposes, with working defaults."""

    delimiters: str = DEFAULT_DELIMITERS
    fragment_join: str = ","
    terminal_mark: str = "."
    image_token_count: int = 1
    query_images: bool = True
    bleu_mode: str = "corpus"
    cider_scale: float = 10.0
    rouge_beta: float = 1.0
    prompt_texts: dict[str, dict[str, str]] = field(
        default_factory=lambda: {k: dict(v) for k, v in DEFAULT_PROMPT_TEXTS.items()}
    )

    def __post_init__(self) -> None:
        if not self.delimiters:
            raise ConfigError("delimiters must be non-empty")
        if self.bleu_mode not in ("corpus", "sentence"):
            raise ConfigError(f"bleu_mode must be 'corpus' or 'sentence', got {self.bleu_mode!r}")
        if self.image_token_count < 1:
            raise ConfigError("image_token_count must be >= 1")
        if self.cider_scale <= 0:
            raise ConfigError("cider_scale must be positive")
        if self.rouge_beta <= 0:
            raise ConfigError("rouge_beta must be positive")

    @property
    def delimiter_set(self) -> frozenset[str]:
        return frozenset(self.delimiters)

    def as_dict(self) -> dict[str, Any]:
        return {
            "delimiters": self.delimiters,
            "fragment_join": self.fragment_join,
            "terminal_mark": self.terminal_mark,
            "image_token_count": self.image_token_count,
            "query_images": self.query_images,
            "bleu_mode": self.bleu_mode,
            "cider_scale": self.cider_scale,
            "rouge_beta": self.rouge_beta,
            "prompt_texts": {k: dict(v) for k, v in self.prompt_texts.items()},
        }


_FIELD_TYPES = {f.name: f.type for f in fields(ToolConfig)}


def _coerce(name: str, value: Any) -> Any:
    if name == "prompt_texts":
        if not isinstance(value, dict):
            raise ConfigError("prompt_texts must be a mapping of prompt type to texts")
        return {str(k): {str(a): str(b) for a, b in v.items()} for k, v in value.items()}
    if name in ("image_token_count",):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        return value
    if name in ("cider_scale", "rouge_beta"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)
    if name == "query_images":
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be a boolean")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a string")
    return value


def load_config(
    path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> ToolConfig:
    """Build the effective configuration.

    *path* points to a JSON object file; unknown keys are rejected so typos
    do not silently fall back to defaults.  *overrides* (typically parsed CLI
    flags, with None meaning "not given") take precedence over the file.
    """
    settings: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})")
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        for key, value in data.items():
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}: unknown setting {key!r}")
            settings[key] = _coerce(key, value)
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown setting {key!r}")
            settings[key] = _coerce(key, value)
    try:
        return ToolConfig(**settings)
    except TypeError as exc:
        raise ConfigError(str(exc))
