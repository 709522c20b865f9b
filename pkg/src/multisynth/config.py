"""INI-style run configuration.

Example::

    [scenario]
    input_kind = even-cat
    alpha = 3.0
    n_total = 2
    r = 0.7071
    engine = auto

    [window]
    theta = 0        ; radians
    x0 = 0           ; shot-noise units
    dx = 0.1         ; shot-noise units, or "inf"

    [scan]
    r_min = 0.05
    r_max = 0.7071
    r_step = 0.01

Sections other than ``scenario`` and ``window`` are read by individual
commands; unknown keys are rejected so typos do not silently fall back to
defaults.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .protocol import ScenarioConfig
from .window import HomodyneWindow

KNOWN = {
    "scenario": {"input_kind", "alpha", "n_total", "r", "engine", "dim", "seed_kind"},
    "window": {"theta", "x0", "dx"},
    "scan": {"r_min", "r_max", "r_step", "gamma_min", "gamma_max", "gamma_step", "parity"},
    "sweep": {"n_values", "dx_values"},
    "compare": {"dx_values"},
    "wigner": {"points", "half_width"},
    "fit": {"a_seeds"},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    path: Path
    parser: configparser.ConfigParser
    lines: list[str]

    def where(self, section: str, key: str | None = None) -> str:
        """'file:line [section] key' for diagnostics."""
        in_section = False
        for no, line in enumerate(self.lines, 1):
            s = line.strip()
            if s.startswith("["):
                in_section = s.strip("[]").strip() == section
                if in_section and key is None:
                    return f"{self.path}:{no} [{section}]"
                continue
            if in_section and key and re.match(rf"{re.escape(key)}\s*[=:]", s):
                return f"{self.path}:{no} [{section}] {key}"
        return f"{self.path} [{section}]" + (f" {key}" if key else "")

    def has(self, section: str, key: str | None = None) -> bool:
        if not self.parser.has_section(section):
            return False
        return key is None or self.parser.has_option(section, key)

    def raw(self, section: str, key: str, default=None):
        if self.has(section, key):
            return self.parser.get(section, key).strip()
        return default

    def number(self, section: str, key: str, default=None, kind=float):
        value = self.raw(section, key)
        if value is None or value == "":
            if default is None:
                raise ConfigError(f"{self.where(section, key)}: required value missing")
            return default
        try:
            if kind is float and value.lower() in ("inf", "infinite", "infinity"):
                return math.inf
            return kind(value)
        except ValueError:
            raise ConfigError(
                f"{self.where(section, key)}: expected {kind.__name__}, got {value!r}"
            ) from None

    def numbers(self, section: str, key: str, default=None, kind=float) -> list:
        value = self.raw(section, key)
        if value is None:
            if default is None:
                raise ConfigError(f"{self.where(section, key)}: required list missing")
            return list(default)
        out = []
        for item in value.split(","):
            item = item.strip()
            try:
                if kind is float and item.lower() in ("inf", "infinite", "infinity"):
                    out.append(math.inf)
                else:
                    out.append(kind(item))
            except ValueError:
                raise ConfigError(
                    f"{self.where(section, key)}: bad list entry {item!r}"
                ) from None
        return out

    def as_dict(self) -> dict:
        return {s: dict(self.parser.items(s)) for s in self.parser.sections()}


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(path, parser, text.splitlines())
    for section in parser.sections():
        if section not in KNOWN:
            raise ConfigError(f"{cfg.where(section)}: unknown section")
        for key in parser.options(section):
            if key not in KNOWN[section]:
                raise ConfigError(f"{cfg.where(section, key)}: unknown key")
    if not parser.has_section("scenario"):
        raise ConfigError(f"{path}: missing [scenario] section")
    return cfg


def window_from(cfg: RunConfig, default_theta: float = 0.0) -> HomodyneWindow:
    theta = cfg.number("window", "theta", default_theta)
    x0 = cfg.number("window", "x0", 0.0)
    dx = cfg.number("window", "dx", 0.1)
    try:
        return HomodyneWindow(theta, x0, dx)
    except ValueError as exc:
        raise ConfigError(f"{cfg.where('window', 'dx')}: {exc}") from None


_FIELD_KEYS = {
    "reflectivity": "r",
    "n_total": "n_total",
    "N >= 2": "n_total",
    "input_kind": "input_kind",
    "seed_kind": "seed_kind",
    "engine": "engine",
    "alpha": "alpha",
    "dim": "dim",
    "single-photon": "engine",
}


def scenario_from(cfg: RunConfig, engine: str | None = None, default_theta: float = 0.0,
                  **overrides) -> ScenarioConfig:
    dim = cfg.raw("scenario", "dim")
    fields = dict(
        input_kind=cfg.raw("scenario", "input_kind", "even-cat"),
        alpha=cfg.number("scenario", "alpha", 0.0),
        n_total=cfg.number("scenario", "n_total", 2, kind=int),
        r=cfg.number("scenario", "r", 1.0 / math.sqrt(2.0)),
        window=window_from(cfg, default_theta),
        engine=engine or cfg.raw("scenario", "engine", "auto"),
        dim=int(dim) if dim else None,
        seed_kind=cfg.raw("scenario", "seed_kind") or None,
    )
    fields.update(overrides)
    try:
        return ScenarioConfig(**fields)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for pat, k in _FIELD_KEYS.items() if pat in msg), None)
        raise ConfigError(f"{cfg.where('scenario', key)}: {msg}") from None


def grid(cfg: RunConfig, section: str, prefix: str, lo: float, hi: float, step: float) -> np.ndarray:
    lo = cfg.number(section, f"{prefix}_min", lo)
    hi = cfg.number(section, f"{prefix}_max", hi)
    step = cfg.number(section, f"{prefix}_step", step)
    if not (step > 0 and hi >= lo):
        raise ConfigError(f"{cfg.where(section, prefix + '_step')}: need step > 0 and max >= min")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)
