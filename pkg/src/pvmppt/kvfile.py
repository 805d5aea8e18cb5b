"""Line-oriented ``key = value`` text files.

Used for panel specs, converter designs, normalization parameters, run
manifests and metrics. Blank lines and ``#`` comments are ignored; a line of
the form ``[name]`` opens a section.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


def parse(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` text. Sections are not allowed here."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def parse_sections(text: str) -> list[tuple[str, dict[str, str]]]:
    sections: list[tuple[str, dict[str, str]]] = []
    current: dict[str, str] | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = {}
            sections.append((line[1:-1].strip(), current))
            continue
        if "=" not in line or current is None:
            raise ConfigError(f"line {lineno}: expected 'key = value' inside a section")
        key, value = (s.strip() for s in line.split("=", 1))
        current[key] = value
    return sections


def dump(values: dict[str, object], header: str | None = None) -> str:
    lines = [f"# {header}"] if header else []
    for key, value in values.items():
        lines.append(f"{key} = {format_value(value)}")
    return "\n".join(lines) + "\n"


def format_value(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def load_dataclass(cls, source, defaults=None):
    """Build dataclass ``cls`` from a ``key = value`` file or mapping.

    Unknown keys raise :class:`ConfigError` naming the key. Values are coerced
    with the field's default type (int or float).
    """
    if isinstance(source, (str, Path)):
        values = parse(Path(source).read_text())
    else:
        values = dict(source)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = dict(defaults or {})
    for key, value in values.items():
        if key not in fields:
            raise ConfigError(f"unknown key {key!r} for {cls.__name__}")
        kwargs[key] = coerce(value, fields[key].type)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from exc


def coerce(value, annotation):
    if not isinstance(value, str):
        return value
    name = annotation if isinstance(annotation, str) else getattr(annotation, "__name__", "")
    try:
        if name == "int":
            return int(value)
        if name == "float":
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"cannot convert {value!r} to {name}") from exc
    return value
