"""Config file handling: a small TOML-style dialect of sections and scalars.

Supported syntax, which covers everything the CLI reads:

    # comment
    [augment]
    snr_db = 10.0
    factors = [0.5, 0.9, 1.0, 1.1, 1.5]
    fill = "utterance_mean"
    seed = 42

Values may be integers, floats, booleans, double-quoted strings, or flat
arrays of those.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


def _split_comment(line: str) -> str:
    out = []
    in_string = False
    for ch in line:
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            break
        out.append(ch)
    return "".join(out).strip()


def _parse_scalar(text: str, lineno: int):
    if text == "true":
        return True
    if text == "false":
        return False
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        return text[1:-1]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {text!r}") from None


def _parse_value(text: str, lineno: int):
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"line {lineno}: unterminated array")
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(part.strip(), lineno) for part in inner.split(",")]
    return _parse_scalar(text, lineno)


def parse_config(text: str) -> dict[str, dict[str, object]]:
    """Parse config text into {section: {key: value}}."""
    sections: dict[str, dict[str, object]] = {}
    current: dict[str, object] | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _split_comment(raw)
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {lineno}: empty section name")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        current[key] = _parse_value(value.strip(), lineno)
    return sections


def load_config(path: str | Path) -> dict[str, dict[str, object]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return repr(value)


def format_section(name: str, mapping: dict) -> str:
    lines = [f"[{name}]"]
    lines += [f"{key} = {_format_value(value)}" for key, value in mapping.items()]
    return "\n".join(lines) + "\n"
