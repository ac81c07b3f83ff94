"""Flat key-value run configuration files.

A config file is plain text, one `key = value` per line, with `#` comments
and blank lines ignored. Nested groups use dotted keys (``denoiser.d_model``,
``loss.lambda2``); list values are comma-separated. Every key has a default
taken from TrainConfig, so an empty file is a valid config, and the full
default set can be printed back out in the same format.
"""
from __future__ import annotations

from .training import TrainConfig


def _flatten(d: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _unflatten(flat: dict) -> dict:
    nested: dict = {}
    for name, value in flat.items():
        parts = name.split(".")
        node = nested
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return nested


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _parse_scalar(text: str, like, key: str):
    if isinstance(like, bool):
        low = text.lower()
        if low not in ("true", "false"):
            raise ValueError(f"{key}: expected true/false, got {text!r}")
        return low == "true"
    try:
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
    except ValueError:
        raise ValueError(f"{key}: cannot parse {text!r} as {type(like).__name__}") from None
    return text


def _parse_value(text: str, like, key: str):
    if isinstance(like, (list, tuple)):
        element = like[0] if len(like) else 0.0
        items = [p.strip() for p in text.split(",")] if text.strip() else []
        return [_parse_scalar(p, element, key) for p in items]
    return _parse_scalar(text, like, key)


def parse_config_text(text: str) -> dict:
    """-> flat {key: raw string value}; rejects malformed lines."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        if key in raw:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


def load_config(path=None, overrides: dict | None = None) -> TrainConfig:
    """Defaults, then the file at path (if any), then explicit overrides."""
    flat = _flatten(TrainConfig().to_dict())
    updates = {}
    if path is not None:
        with open(path) as f:
            updates.update(parse_config_text(f.read()))
    updates.update(overrides or {})
    for key, text in updates.items():
        if key not in flat:
            raise ValueError(f"unknown config key {key!r}")
        flat[key] = _parse_value(str(text), flat[key], key)
    return TrainConfig.from_dict(_unflatten(flat))


def format_config(cfg: TrainConfig | None = None) -> str:
    """Render a config as file text that parses back to the same values."""
    flat = _flatten((cfg or TrainConfig()).to_dict())
    return "".join(f"{key} = {_format_value(value)}\n" for key, value in flat.items())
