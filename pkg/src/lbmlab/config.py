"""Run configuration files: flat "key = value" sections, strictly parsed.

Unknown sections or keys are rejected so a typo can never silently fall
back to a default.  Values are typed by the schema below; command-line
flags override file values, and built-in defaults fill the rest.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .errors import ConfigError

_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(text: str) -> bool:
    try:
        return _BOOL_WORDS[text.strip().lower()]
    except KeyError as exc:
        raise ConfigError(f"expected a boolean, got {text!r}") from exc


def parse_pair(text: str, kind=float) -> tuple:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ConfigError(f"expected two comma-separated values, got {text!r}")
    try:
        return (kind(parts[0]), kind(parts[1]))
    except ValueError as exc:
        raise ConfigError(f"could not parse pair {text!r}") from exc


SCHEMA: dict[str, dict[str, type]] = {
    "scheme": {
        "kind": str,
        "nu": float,
        "s_q": float,
        "quartic": bool,
        "s_e": float,
        "s_eps": float,
        "stencil": int,
        "theta_xy_sign": str,
    },
    "analysis": {
        "direction": str,
        "k": float,
        "k_max": float,
        "samples": int,
        "fit_k_max": float,
        "velocity": float,
        "delta": float,
    },
    "shear_wave": {
        "extent": int,
        "multiples": str,
        "amplitude": float,
        "mean_velocity": float,
        "max_steps": int,
        "fit_start": int,
        "corr_floor": float,
    },
    "stokes": {
        "family": str,
        "index": int,
        "radius": float,
        "extent": int,
        "center": str,
        "amplitude": float,
        "max_steps": int,
        "fit_start": int,
        "corr_floor": float,
        "population_rule": str,
    },
    "poiseuille": {
        "width": int,
        "xi": float,
        "nx": int,
        "ny": int,
        "force": float,
        "max_steps": int,
        "check_every": int,
        "tol": float,
        "population_rule": str,
    },
    "tables": {"which": str},
    "output": {"directory": str},
}


def load_config(path: str | Path) -> dict[str, dict[str, object]]:
    """Parse one configuration file against the schema."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    out: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        known = SCHEMA[section]
        values: dict[str, object] = {}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kind = known[key]
            try:
                if kind is bool:
                    values[key] = _parse_bool(raw)
                else:
                    values[key] = kind(raw)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {section}.{key}: {raw!r} (expected {kind.__name__})"
                ) from exc
        out[section] = values
    return out
