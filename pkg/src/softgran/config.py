"""Line-oriented ``key = value`` configuration files."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from typing import Mapping

from .errors import ConfigurationError


def parse_value(text: str):
    """Best-effort literal: none/true/false, int, float, ``a,b`` tuple, ``k:v,...`` mapping, else string."""
    text = text.strip()
    low = text.lower()
    if low in ("none", "null", ""):
        return None
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in text or ":" in text:
        items = [t.strip() for t in text.split(",") if t.strip()]
        if items and all(":" in t for t in items):
            return {k.strip(): parse_value(v) for k, v in (t.split(":", 1) for t in items)}
        if "," in text:
            return tuple(parse_value(t) for t in items)
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_config(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{n}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = parse_value(value)
    return out


def build(cls, values: Mapping, **overrides):
    """Instantiate a config dataclass from parsed values; unknown keys are ignored by the caller."""
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {k: v for k, v in values.items() if k in names}
    kwargs.update({k: v for k, v in overrides.items() if v is not None and k in names})
    for f in dataclasses.fields(cls):
        if f.name in kwargs and isinstance(f.default, float) and isinstance(kwargs[f.name], int) \
                and not isinstance(kwargs[f.name], bool):
            kwargs[f.name] = float(kwargs[f.name])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def as_dict(cfg) -> dict:
    d = dataclasses.asdict(cfg)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
