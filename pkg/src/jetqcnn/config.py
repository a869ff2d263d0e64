"""Flat ``section.key = value`` experiment config files.

Grammar: one assignment per line, ``#`` starts a comment, blank lines are
ignored, keys are ``section.name`` with section in {data, model, train, dea}.
Values are parsed according to the key's declared type; unknown keys and
missing path targets are errors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError


def _path(v: str) -> str:
    return v


SCHEMA = {
    "data.jets": _path,
    "data.images": _path,
    "data.features": _path,
    "data.split_seed": int,
    "data.fraction": float,
    "model.kind": str,
    "model.circuit": str,
    "model.encoding": str,
    "model.dense": int,
    "model.filters": int,
    "model.circuit_file": _path,
    "model.ring": lambda v: {"true": True, "false": False}[v.lower()],
    "train.epochs": int,
    "train.batch": int,
    "train.lr": float,
    "train.loss": str,
    "train.runs": int,
    "train.seed": int,
    "dea.tolerance": float,
    "dea.points": int,
    "dea.seed": int,
}
PATH_KEYS = {k for k, conv in SCHEMA.items() if conv is _path}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def section(self, name: str) -> dict:
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}


def parse_config(text: str, base_dir: str | Path = ".") -> ExperimentConfig:
    base = Path(base_dir)
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            known = ", ".join(sorted(SCHEMA))
            raise ConfigurationError(f"config line {lineno}: unknown key {key!r} (known: {known})")
        try:
            parsed = SCHEMA[key](value)
        except (ValueError, KeyError):
            raise ConfigurationError(f"config line {lineno}: bad value {value!r} for {key}") from None
        if key in PATH_KEYS:
            p = Path(parsed)
            if not p.is_absolute():
                p = base / p
            if not p.exists():
                raise ConfigurationError(f"config line {lineno}: {key} path does not exist: {p}")
            parsed = str(p)
        values[key] = parsed
    return ExperimentConfig(values)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent)
