"""Typed run configuration with per-task defaults and sanity checking.

Configs are immutable values; ``check`` returns diagnostics instead of
raising so callers can report every violation at once.  Config files are
either flat ``key=value`` text or a JSON object; unknown keys are warnings,
not errors.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any


class TaskKind(str, Enum):
    ASC = "ASC"
    ATESC = "ATESC"

    @classmethod
    def parse(cls, text: str) -> "TaskKind":
        label = text.strip().upper()
        for member in cls:
            if member.value == label:
                return member
        raise ValueError(f"unknown task {text!r}")


LCF_MODES = ("cdw", "cdm")
SAVE_MODES = ("none", "state")

DEFAULT_MODEL_IDS = {TaskKind.ASC: "bow-logreg", TaskKind.ATESC: "iob-perceptron"}


class ConfigError(ValueError):
    pass


class UnknownFieldError(ConfigError):
    pass


class ParseFailureError(ConfigError):
    def __init__(self, field_name: str, value: str):
        super().__init__(f"cannot parse {value!r} for field {field_name}")
        self.field = field_name
        self.value = value


@dataclass(frozen=True)
class ConfigDiagnostic:
    field: str
    rule: str
    value: Any

    def __str__(self) -> str:
        return f"{self.field}: {self.rule} (got {self.value!r})"


@dataclass(frozen=True)
class RunConfig:
    """Training/inference settings for one run."""

    task: TaskKind = TaskKind.ASC
    model_id: str = "bow-logreg"
    max_seq_len: int = 80
    epochs: int = 10
    seeds: tuple[int, ...] = (42,)
    lcf: str = "cdw"
    learning_rate: float = 0.1
    l2_reg: float = 1e-4
    batch_size: int = 32
    checkpoint_save_mode: str = "state"
    load_aug: bool = False
    window: int = 3

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(self.seeds))

    def to_dict(self) -> dict[str, Any]:
        data = dataclasses.asdict(self)
        data["task"] = self.task.value
        data["seeds"] = list(self.seeds)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> tuple["RunConfig", list[str]]:
        """Build a config from a mapping; unknown keys come back as warnings."""
        known = {f.name for f in dataclasses.fields(cls)}
        warnings = [f"unknown config key: {key}" for key in data if key not in known]
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key not in known:
                continue
            if key == "task":
                kwargs[key] = TaskKind.parse(str(value))
            elif key == "seeds":
                kwargs[key] = tuple(int(v) for v in value)
            else:
                kwargs[key] = value
        return cls(**kwargs), warnings


def defaults(task: TaskKind) -> RunConfig:
    """Complete valid configuration for a task (epochs default 10)."""
    return RunConfig(task=task, model_id=DEFAULT_MODEL_IDS[task])


def check(config: RunConfig) -> list[ConfigDiagnostic]:
    """Sanity-check a config; empty list iff every invariant holds."""
    diagnostics: list[ConfigDiagnostic] = []

    def bad(field: str, rule: str, value: Any) -> None:
        diagnostics.append(ConfigDiagnostic(field, rule, value))

    if not isinstance(config.task, TaskKind):
        bad("task", "must be ASC or ATESC", config.task)
    if not config.model_id or not isinstance(config.model_id, str):
        bad("model_id", "must be a nonempty string", config.model_id)
    if not isinstance(config.max_seq_len, int) or not 8 <= config.max_seq_len <= 4096:
        bad("max_seq_len", "must be an integer in [8, 4096]", config.max_seq_len)
    if not isinstance(config.epochs, int) or not 1 <= config.epochs <= 1000:
        bad("epochs", "must be an integer in [1, 1000]", config.epochs)
    if not config.seeds:
        bad("seeds", "must be nonempty", config.seeds)
    elif len(set(config.seeds)) != len(config.seeds):
        bad("seeds", "must be duplicate-free", config.seeds)
    elif not all(isinstance(s, int) for s in config.seeds):
        bad("seeds", "must be integers", config.seeds)
    if config.lcf not in LCF_MODES:
        bad("lcf", "must be one of cdw, cdm", config.lcf)
    if not config.learning_rate > 0:
        bad("learning_rate", "must be positive", config.learning_rate)
    if config.l2_reg < 0:
        bad("l2_reg", "must be nonnegative", config.l2_reg)
    if not isinstance(config.batch_size, int) or config.batch_size < 1:
        bad("batch_size", "must be a positive integer", config.batch_size)
    if config.checkpoint_save_mode not in SAVE_MODES:
        bad("checkpoint_save_mode", "must be one of none, state", config.checkpoint_save_mode)
    if not isinstance(config.load_aug, bool):
        bad("load_aug", "must be a boolean", config.load_aug)
    if not isinstance(config.window, int) or config.window < 1:
        bad("window", "must be a positive integer", config.window)
    return diagnostics


_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def _coerce(field_name: str, field_type: Any, value: str) -> Any:
    try:
        if field_name == "task":
            return TaskKind.parse(value)
        if field_name == "seeds":
            return tuple(int(part) for part in str(value).split(",") if part.strip())
        if field_type is int or field_type == "int":
            return int(value)
        if field_type is float or field_type == "float":
            return float(value)
        if field_type is bool or field_type == "bool":
            lowered = str(value).strip().lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(value)
        return str(value)
    except (TypeError, ValueError):
        raise ParseFailureError(field_name, str(value)) from None


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
# dataclass field types are strings under `from __future__ import annotations`
_TYPE_NAMES = {
    "int": int,
    "float": float,
    "bool": bool,
    "str": str,
    "TaskKind": TaskKind,
    "tuple[int, ...]": tuple,
}


def override(config: RunConfig, key: str, value: str) -> RunConfig:
    """Return a new config with one field replaced from its string form."""
    if key not in _FIELD_TYPES:
        raise UnknownFieldError(f"unknown config field: {key}")
    field_type = _TYPE_NAMES.get(str(_FIELD_TYPES[key]), str)
    return dataclasses.replace(config, **{key: _coerce(key, field_type, value)})


def apply_overrides(config: RunConfig, pairs: dict[str, str]) -> RunConfig:
    for key, value in pairs.items():
        config = override(config, key, value)
    return config


def load_config(path: str | Path, base: RunConfig | None = None) -> tuple[RunConfig, list[str]]:
    """Load a config file (JSON object or key=value lines) over defaults.

    Returns the config and a list of warnings for unknown keys.
    """
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        if base is None:
            return RunConfig.from_dict(data)
        known = {f.name for f in dataclasses.fields(RunConfig)}
        warnings = [f"unknown config key: {key}" for key in data if key not in known]
        config = base
        for key, value in data.items():
            if key in known:
                config = override(config, key, _unparse(value))
        return config, warnings
    config = base if base is not None else RunConfig()
    warnings: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            warnings.append(f"ignoring malformed line: {line}")
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            config = override(config, key, value)
        except UnknownFieldError:
            warnings.append(f"unknown config key: {key}")
    return config, warnings


def _unparse(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)
