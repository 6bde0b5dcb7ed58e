"""Run harness plumbing: derived random streams, the flat key-value config
format, and CSV/manifest emission.

Random streams are counter-based (Philox) and derived by hashing
master_seed with a stream label, so every consumer draws from its own
stream regardless of interleaving; the same (seed, label) always yields
the same stream, which is what makes runs reproducible across worker
counts and lets paired comparisons share channel realizations.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ConfigError(ValueError):
    pass


def seed_stream(master_seed: int, label: str) -> np.random.Generator:
    """Independent generator for (master_seed, label)."""
    digest = hashlib.sha256(f"{master_seed}|{label}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class SeedStreams:
    """Stream factory that rejects duplicate labels within one run."""

    def __init__(self, master_seed: int):
        self.master_seed = master_seed
        self._used: set[str] = set()

    def stream(self, label: str) -> np.random.Generator:
        if label in self._used:
            raise ValueError(f"duplicate stream label {label!r}")
        self._used.add(label)
        return seed_stream(self.master_seed, label)


# ---------------------------------------------------------------- config

def parse_kv_text(text: str) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment; keys use dotted
    section prefixes (scenario.*, channel.*, transport.*)."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value': {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value: {raw!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _convert(key: str, value: str, typ: type):
    try:
        if typ is bool:
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        return typ(value)
    except ValueError:
        raise ConfigError(
            f"{key}: cannot parse {value!r} as {typ.__name__}") from None


def apply_keymap(raw: dict[str, str], keymap: dict[str, tuple[str, type]],
                 *, ignore: Iterable[str] = ()) -> dict:
    """Map dotted config keys onto dataclass fields, rejecting unknowns."""
    out = {}
    skip = set(ignore)
    for key, value in raw.items():
        if key in skip:
            continue
        if key not in keymap:
            raise ConfigError(f"unknown config key {key!r}")
        field_name, typ = keymap[key]
        out[field_name] = _convert(key, value, typ)
    return out


def config_hash(raw: dict[str, str]) -> str:
    canonical = "\n".join(f"{k} = {raw[k]}" for k in sorted(raw))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------- output

def fmt_value(v) -> str:
    """CSV cell formatting: floats at 9 significant digits, ints plain."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def write_csv(path: Path, header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt_value(v) for v in row) + "\n")


class RunClock:
    def __init__(self):
        self.start = time.monotonic()

    def seconds(self) -> float:
        return time.monotonic() - self.start


def write_manifest(outdir: Path, raw_config: dict[str, str], seed: int,
                   files: Sequence[str], duration_seconds: float) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "seed": seed,
        "config": dict(sorted(raw_config.items())),
        "config_hash": config_hash(raw_config),
        "files": sorted(files),
        "duration_seconds": round(duration_seconds, 3),
    }
    path = outdir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
