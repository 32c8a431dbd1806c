"""Run configuration: an INI file naming the measured responses and every
tunable the design solve uses.

Parsing is strict. An unknown section or key is a hard ConfigError naming
the offender, because a silently ignored misspelling ("tolerence_db")
would change the result without anyone noticing. Every key outside [io]
has a default, listed in _DEFAULTS below.

[io] names the four loudspeaker measurements. Each one is either a
single WAV (`primary_left = ...`) or a microphone pair averaged on load
(`primary_left_a = ...` plus `primary_left_b = ...`). Paths are resolved
relative to the config file.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

from .audio import ImpulseResponse, read_wav
from .errors import ConfigError
from .gammatone import FilterbankSpec, make_spec
from .render import (
    DEFAULT_DECORRELATOR_LEN,
    DEFAULT_DELAY_MS,
    DEFAULT_SEED_LEFT,
    DEFAULT_SEED_RIGHT,
)
from .rirs import CHANNEL_NAMES, RirSet, average_pair
from .solver import SolverConfig
from .target import TargetFunction

_DEFAULTS = {
    "filterbank": {"f_low": 80.0, "f_high": 16000.0, "bands_per_erb": 1.0},
    "target": {"slope_db": 5.0, "f_ref_low": 20.0, "f_ref_high": 20000.0},
    "solver": {
        "tolerance_db": 0.5,
        "max_iterations": 50,
        "damping": 0.7,
        "anchor_mode": "percentile-95",
    },
    "render": {
        "delay_ms": DEFAULT_DELAY_MS,
        "decorrelator_len": DEFAULT_DECORRELATOR_LEN,
        "seed_left": DEFAULT_SEED_LEFT,
        "seed_right": DEFAULT_SEED_RIGHT,
    },
}

_IO_KEYS = ("output_dir",) + tuple(
    name + suffix for name in CHANNEL_NAMES for suffix in ("", "_a", "_b")
)


@dataclass(frozen=True)
class RunConfig:
    """Everything a design run needs, fully typed and defaulted."""

    rir_paths: dict  # channel name -> tuple of one or two absolute paths
    output_dir: str
    f_low: float
    f_high: float
    bands_per_erb: float
    slope_db: float
    f_ref_low: float
    f_ref_high: float
    tolerance_db: float
    max_iterations: int
    damping: float
    anchor_mode: str
    delay_ms: float
    decorrelator_len: int
    seed_left: int
    seed_right: int

    def filterbank(self, sample_rate: int) -> FilterbankSpec:
        return make_spec(
            sample_rate, self.f_low, self.f_high, bands_per_erb=self.bands_per_erb
        )

    def target(self) -> TargetFunction:
        return TargetFunction(
            slope_db=self.slope_db,
            f_ref_low=self.f_ref_low,
            f_ref_high=self.f_ref_high,
        )

    def solver(self) -> SolverConfig:
        return SolverConfig(
            tolerance_db=self.tolerance_db,
            max_iterations=self.max_iterations,
            damping=self.damping,
            anchor_mode=self.anchor_mode,
        )

    def load_rirs(self) -> RirSet:
        """Read the configured WAVs, averaging microphone pairs."""
        loaded = {}
        for name, paths in self.rir_paths.items():
            captures = [
                ImpulseResponse(read_wav(p), label=name) for p in paths
            ]
            loaded[name] = (
                captures[0]
                if len(captures) == 1
                else average_pair(captures[0], captures[1])
            )
        return RirSet(**loaded)


def _typed(section: str, key: str, raw: str, like) -> object:
    try:
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
    except ValueError:
        raise ConfigError(
            "[%s] %s: %r is not a valid %s"
            % (section, key, raw, type(like).__name__)
        ) from None
    return raw


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError("cannot parse %s: %s" % (path, exc)) from exc

    known = set(_DEFAULTS) | {"io"}
    for section in parser.sections():
        if section not in known:
            raise ConfigError("unknown section [%s] in %s" % (section, path))

    values = {}
    for section, defaults in _DEFAULTS.items():
        for key, default in defaults.items():
            values[key] = default
        if not parser.has_section(section):
            continue
        for key, raw in parser[section].items():
            if key not in defaults:
                raise ConfigError("unknown key %r in section [%s]" % (key, section))
            values[key] = _typed(section, key, raw, defaults[key])

    if not parser.has_section("io"):
        raise ConfigError("missing required section [io]")
    io_sec = dict(parser["io"])
    for key in io_sec:
        if key not in _IO_KEYS:
            raise ConfigError("unknown key %r in section [io]" % key)

    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: str) -> str:
        return os.path.normpath(os.path.join(base, p))

    rir_paths = {}
    for name in CHANNEL_NAMES:
        single = io_sec.get(name)
        pair = (io_sec.get(name + "_a"), io_sec.get(name + "_b"))
        if single is not None and any(pair):
            raise ConfigError(
                "[io] %s: give either one path or an _a/_b pair, not both" % name
            )
        if single is not None:
            rir_paths[name] = (resolve(single),)
        elif all(pair):
            rir_paths[name] = (resolve(pair[0]), resolve(pair[1]))
        elif any(pair):
            raise ConfigError("[io] %s: _a/_b pair is incomplete" % name)
        else:
            raise ConfigError("[io] is missing a path for %s" % name)

    return RunConfig(
        rir_paths=rir_paths,
        output_dir=resolve(io_sec.get("output_dir", ".")),
        **values,
    )
