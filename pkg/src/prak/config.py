"""Configuration: defaults in dataclasses, overrides from INI files.

Sections mirror the processing stages.  Unknown sections or keys are an
error, not a warning: a typo in a config silently falling back to defaults
is the worst failure mode a training run can have.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError


@dataclass
class MfccConfig:
    dither: bool = False


@dataclass
class AmSection:
    hidden_dims: tuple[int, ...] = (120, 120)
    seed: int = 0


@dataclass
class DecoderConfig:
    alpha: float = 1.0
    min_duration: int = 1


@dataclass
class TrainerConfig:
    epochs: int = 10
    learning_rate: float = 1e-3
    batch_size: int = 256
    passes_per_epoch: int = 1
    seed: int = 0
    change_threshold: float = 0.001  # stop when under 0.1% of frames move


@dataclass
class PathsConfig:
    inventory: str = ""
    rules: str = ""
    model: str = ""


@dataclass
class Config:
    mfcc: MfccConfig = field(default_factory=MfccConfig)
    am: AmSection = field(default_factory=AmSection)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def describe(self) -> str:
        lines = []
        for section_field in fields(self):
            section = getattr(self, section_field.name)
            for f in fields(section):
                value = getattr(section, f.name)
                if isinstance(value, tuple):
                    value = ",".join(str(v) for v in value)
                lines.append(f"{section_field.name}.{f.name} = {value}")
        return "\n".join(lines)


def _parse_value(section: str, key: str, raw: str, kind):
    try:
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "dims":
            return tuple(int(p) for p in raw.replace(",", " ").split())
        return raw
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind}") from None


_SCHEMA = {
    "mfcc": {"dither": "bool"},
    "am": {"hidden_dims": "dims", "seed": "int"},
    "decoder": {"alpha": "float", "min_duration": "int"},
    "trainer": {
        "epochs": "int",
        "learning_rate": "float",
        "batch_size": "int",
        "passes_per_epoch": "int",
        "seed": "int",
        "change_threshold": "float",
    },
    "paths": {"inventory": "str", "rules": "str", "model": "str"},
}


def load_config(path: str | Path | None = None) -> Config:
    """Defaults, optionally overridden by an INI file."""
    cfg = Config()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from None

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        schema = _SCHEMA[section]
        target = getattr(cfg, section)
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}] of {path}")
            setattr(target, key, _parse_value(section, key, raw, schema[key]))

    if cfg.decoder.min_duration < 1:
        raise ConfigError("decoder.min_duration must be at least 1")
    if cfg.trainer.epochs < 1:
        raise ConfigError("trainer.epochs must be at least 1")
    if cfg.trainer.batch_size < 1:
        raise ConfigError("trainer.batch_size must be at least 1")
    if not cfg.am.hidden_dims:
        raise ConfigError("am.hidden_dims must list at least one layer size")
    return cfg
