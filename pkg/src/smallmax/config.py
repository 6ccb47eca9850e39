"""Declarative experiment configs (TOML): strict parsing, unknown keys are errors."""

from __future__ import annotations

import hashlib
from typing import Any, Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "experiment": {"name": str, "seed": int, "out_dir": str, "mode": str},
    "instance": {"family": str, "k": int, "s": int, "lambda": float, "mu": float,
                 "rho": float, "D": float, "a": float, "x_lo": float, "x_hi": float,
                 "dim_y": int, "radius": float, "quad_scale": float,
                 "instance_seed": int},
    "sweep": {"lambda": list, "mu": list, "rho": list, "D": list, "eps": list,
              "k": list},
    "solver": {"algorithm": str, "x0": float, "y_hat": (float, str),
               "epsilon": float, "coupled": bool, "naive": bool, "p_fail": float,
               "q_fail": float, "T_override": int, "iteration_cap": int},
    "verify": {"grid_resolution": int, "prox_tol": float, "check_moreau": bool,
               "stationarity_tol": float},
    "krylov": {"d": int, "n_matrices": int, "R": float, "delta": float,
               "q_fail": float, "norm_bound": float},
    "assert": {"certified": bool, "not_certified": bool,
               "surrogate_stationary": bool, "true_violation": bool,
               "admissible": bool, "min_certified_fraction": float,
               "max_eps_star": float, "min_pass_fraction": float},
}

_REQUIRED = {"experiment": ("name", "seed")}
_MODES = ("run", "certify", "check-diameter", "krylov-bench")


def _coerce(path: str, value: Any, expected) -> Any:
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    kinds = expected if isinstance(expected, tuple) else (expected,)
    if bool not in kinds and isinstance(value, bool):
        raise ConfigError(f"{path}: expected {kinds[0].__name__}, got bool")
    if not isinstance(value, kinds):
        names = "/".join(k.__name__ for k in kinds)
        raise ConfigError(f"{path}: expected {names}, got {type(value).__name__}")
    return value


def validate(raw: dict) -> dict:
    """Validate the raw TOML dict against the schema; unknown keys are errors."""
    cfg: dict = {}
    for section, content in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"[{section}] must be a table")
        out = {}
        for key, value in content.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            out[key] = _coerce(f"[{section}].{key}", value, _SCHEMA[section][key])
        cfg[section] = out
    for section, keys in _REQUIRED.items():
        if section not in cfg:
            raise ConfigError(f"missing required section [{section}]")
        for key in keys:
            if key not in cfg[section]:
                raise ConfigError(f"missing required key '{key}' in [{section}]")
    mode = cfg["experiment"].get("mode")
    if mode is not None and mode not in _MODES:
        raise ConfigError(f"[experiment].mode must be one of {_MODES}, got {mode!r}")
    for key, values in cfg.get("sweep", {}).items():
        if len(values) == 0:
            raise ConfigError(f"[sweep].{key} must not be empty")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                   for v in values):
            raise ConfigError(f"[sweep].{key} must contain numbers")
    return cfg


def load(path: str) -> tuple[dict, str]:
    """Parse and validate a config file; returns (config, sha256 of the bytes)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    return validate(raw), hashlib.sha256(data).hexdigest()[:16]
