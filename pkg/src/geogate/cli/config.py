"""Flat ``key = value`` scenario files.

Lines hold ``key = value`` pairs; ``#`` starts a comment. ``sweep.<key>``
lines declare swept parameters, either ``start:stop:count`` (inclusive
linear grid) or an explicit comma-separated list. Frequency keys accept
``_mhz``/``_ghz`` suffixed variants, converted to multiples of the
reference coupling ``g_ref_mhz`` (default: the first ``g_mhz`` value).
Laboratory frequencies are ordinary frequencies ``nu = omega / 2 pi``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import GeogateError

FREQUENCY_KEYS = ("g", "delta", "Omega", "omega_r")
MAX_GRID = 10_000


class ConfigError(GeogateError, ValueError):
    """The scenario file or an override is malformed."""


def _number(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return complex(text.replace("i", "j").replace(" ", ""))
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def as_float(text):
    value = _number(text) if isinstance(text, str) else text
    if isinstance(value, complex):
        raise ConfigError(f"expected a real number, got {text!r}")
    return float(value)


def as_int(text):
    value = _number(text) if isinstance(text, str) else text
    if isinstance(value, complex) or int(value) != value:
        raise ConfigError(f"expected an integer, got {text!r}")
    return int(value)


def as_float_list(text):
    if isinstance(text, (list, tuple)):
        return [as_float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [as_float(part) for part in str(text).split(",") if part.strip()]


def as_optional_float(text):
    if text is None or (isinstance(text, str) and text.strip().lower() in ("", "auto", "none")):
        return None
    return as_float(text)


def as_cutoff(text):
    if text is None or (isinstance(text, str) and text.strip().lower() == "auto"):
        return None
    return as_int(text)


def as_str(text):
    return str(text).strip()


def as_bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def parse_lines(text: str) -> dict[str, str]:
    """Raw ``key -> value`` strings; duplicate keys are an error."""
    entries = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def parse_sweep(value: str) -> list[float]:
    value = value.strip()
    if ":" in value:
        parts = value.split(":")
        if len(parts) != 3:
            raise ConfigError(f"sweep range must be start:stop:count, got {value!r}")
        start, stop, count = as_float(parts[0]), as_float(parts[1]), as_int(parts[2])
        if count < 1:
            raise ConfigError("sweep count must be positive")
        return [float(v) for v in np.linspace(start, stop, count)]
    values = as_float_list(value)
    if not values:
        raise ConfigError("empty sweep list")
    return values


@dataclass
class ScenarioConfig:
    """Fully resolved run configuration (dimensionless parameters)."""

    scenario: str
    parameters: dict
    sweeps: dict[str, list[float]] = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    workers: int = 1
    units: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("workers")
        return d


def _convert_units(entries: dict[str, str], sweeps: dict[str, str]):
    """Replace ``<key>_mhz``/``<key>_ghz`` entries by dimensionless ``<key>``."""
    scale = None
    if "g_ref_mhz" in entries:
        scale = as_float(entries.pop("g_ref_mhz"))
    elif "g_mhz" in entries:
        scale = as_float_list(entries["g_mhz"])[0]
    units = {}
    for table, is_sweep in ((entries, False), (sweeps, True)):
        for key in list(table):
            for suffix, factor in (("_mhz", 1.0), ("_ghz", 1000.0)):
                if key.endswith(suffix) and key[: -len(suffix)] in FREQUENCY_KEYS:
                    base = key[: -len(suffix)]
                    if scale is None or scale == 0:
                        raise ConfigError(f"{key} needs a reference coupling (g_mhz or g_ref_mhz)")
                    if base in table:
                        raise ConfigError(f"both {base} and {key} given")
                    raw = table.pop(key)
                    lab = parse_sweep(raw) if is_sweep else as_float_list(raw)
                    dimless = [v * factor / scale for v in lab]
                    units[("sweep." if is_sweep else "") + key] = lab
                    table[base] = dimless if (is_sweep or len(dimless) > 1 or base == "g") else dimless[0]
    if scale is not None:
        units["g_ref_mhz"] = scale
    return units, scale


def resolve(
    entries: dict[str, str],
    schemas: dict,
    overrides=(),
    fock_cutoff=None,
    seed=None,
    out=None,
    workers=1,
) -> ScenarioConfig:
    """Validate raw entries against the scenario schema and build a :class:`ScenarioConfig`."""
    entries = dict(entries)
    raw = dict(entries)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        entries[key] = value
        raw[key] = value
    if fock_cutoff is not None:
        entries["fock_cutoff"] = str(fock_cutoff)
        raw["fock_cutoff"] = str(fock_cutoff)
    scenario = entries.pop("scenario", None)
    if scenario is None:
        raise ConfigError("missing 'scenario' key")
    if scenario not in schemas:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {sorted(schemas)}")
    if "seed" in entries:
        file_seed = as_int(entries.pop("seed"))
        seed = file_seed if seed is None else seed
    seed = 0 if seed is None else int(seed)
    if seed < 0:
        raise ConfigError("seed must be non-negative")

    sweep_raw = {k[len("sweep.") :]: entries.pop(k) for k in list(entries) if k.startswith("sweep.")}
    units, scale = _convert_units(entries, sweep_raw)
    schema = schemas[scenario]
    unknown = sorted(set(entries) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {scenario}: {unknown}")
    params = {}
    for key, (convert, default) in schema.items():
        value = entries.get(key, default)
        try:
            params[key] = convert(value) if value is not None else None
        except ConfigError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    sweeps = {}
    for key, value in sweep_raw.items():
        if key not in schema:
            raise ConfigError(f"cannot sweep unknown key {key!r}")
        sweeps[key] = value if isinstance(value, list) else parse_sweep(value)
    if len(sweeps) > 2:
        raise ConfigError("at most two keys may be swept")
    size = math.prod(len(v) for v in sweeps.values()) if sweeps else 1
    if size > MAX_GRID:
        raise ConfigError(f"sweep grid of {size} points exceeds {MAX_GRID}")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    return ScenarioConfig(
        scenario=scenario,
        parameters=params,
        sweeps=sweeps,
        out=out,
        seed=seed,
        workers=workers,
        units=units,
        raw=raw,
    )


def load_config(path, schemas, **kwargs) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc}") from None
    return resolve(parse_lines(text), schemas, **kwargs)
