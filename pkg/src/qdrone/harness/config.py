"""Strict INI reading: every key must be consumed, leftovers are errors."""
from __future__ import annotations

import configparser
from pathlib import Path
from typing import Any, Callable


class ConfigError(ValueError):
    """Parse or validation failure in a user-supplied file."""


_MISSING = object()


def parse_ini(text: str, source: str = "<string>") -> configparser.ConfigParser:
    if not text.strip():
        raise ConfigError(f"{source}: parse error at line 1: file is empty")
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=(";", "#"), default_section="__defaults__"
    )
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}: parse error at line {exc.lineno}: missing [section] header") from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"{source}: parse error at line {exc.lineno}: {exc.message}") from None
    except configparser.ParsingError as exc:
        lines = ", ".join(str(lineno) for lineno, _ in exc.errors)
        raise ConfigError(f"{source}: parse error at line {lines}") from None
    return parser


def read_ini(path: str | Path) -> configparser.ConfigParser:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_ini(text, str(path))


def check_sections(parser: configparser.ConfigParser, allowed: Callable[[str], bool], source: str) -> None:
    for name in parser.sections():
        if not allowed(name):
            raise ConfigError(f"{source}: unknown section [{name}]")


class Section:
    """Typed accessor over one INI section that tracks consumed keys."""

    def __init__(self, parser: configparser.ConfigParser, name: str, source: str = ""):
        self.name = name
        self.source = source
        self.values = dict(parser[name]) if parser.has_section(name) else {}
        self.present = parser.has_section(name)
        self._used: set[str] = set()

    def get(self, key: str, kind: Callable[[str], Any] = str, default: Any = _MISSING) -> Any:
        self._used.add(key)
        if key not in self.values or self.values[key] == "":
            if default is _MISSING:
                raise ConfigError(f"{self.source}: [{self.name}] missing required field '{key}'")
            return default
        raw = self.values[key]
        try:
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.source}: [{self.name}] field '{key}' = {raw!r}: {exc}") from None

    def get_optional_str(self, key: str) -> str | None:
        value = self.get(key, str, None)
        if value is None or value.lower() == "none":
            return None
        return value

    def get_bool(self, key: str, default: bool) -> bool:
        value = self.get(key, str, None)
        if value is None:
            return default
        lowered = value.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{self.source}: [{self.name}] field '{key}' is not a boolean: {value!r}")

    def finish(self) -> None:
        unknown = sorted(set(self.values) - self._used)
        if unknown:
            raise ConfigError(f"{self.source}: [{self.name}] unknown field '{unknown[0]}'")


def format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_ini(sections: dict[str, dict[str, Any]]) -> str:
    lines = []
    for name, fields in sections.items():
        lines.append(f"[{name}]")
        for key, value in fields.items():
            lines.append(f"{key} = {format_value(value)}")
        lines.append("")
    return "\n".join(lines)
