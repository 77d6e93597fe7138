"""Run configuration: the flat key=value config format and its validation.

A config file is UTF-8 text, one ``key = value`` per line, ``#`` starts a
comment, blank lines ignored, unknown keys rejected.  Command-line flags
override file values.  Presets fix the equation of state, the domain and
the initial data; overriding a preset-fixed quantity with a contradictory
value is a config error.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .core import DtPolicy
from .errors import ConfigError
from .presets import PRESET_NAMES

_STEPPERS = ("ap", "explicit_llf", "ice")
_VARIANTS = ("nl", "l", "ld")
_STENCILS = ("wide", "reduced")

# Preset-fixed quantities: (dimension, lambda_coeff, gamma, domain_a, domain_b)
_PRESET_FIXED = {
    "example1": (1, 1.0, 2.0, 0.0, 1.0),
    "example2": (1, 1.0, 1.4, -1.0, 1.0),
    "example3": (2, 1.0, 2.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class RunConfig:
    """A complete experiment description."""

    preset: str = "example1"
    dimension: int = 1
    lambda_coeff: float = 1.0
    gamma: float = 2.0
    epsilon: float = 0.8
    alpha: float = 1.0
    sigma: float = 0.5
    m: int = 100
    m1: int = 20
    m2: int = 20
    dt_policy: DtPolicy = field(default_factory=DtPolicy.adaptive)
    t_final: float = 0.1
    stepper: str = "ap"
    variant: str = "ld"
    stencil: str = "reduced"
    snapshot_times: tuple = ()
    output_dir: str = "out"
    dphi2_literal: bool = True
    domain_a: float = 0.0
    domain_b: float = 1.0
    rho0: float = 1.0
    q0: float = 0.0

    def effective_snapshots(self):
        times = self.snapshot_times if self.snapshot_times else (self.t_final,)
        return tuple(sorted(times))


_BOOL_VALUES = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _parse_bool(key, raw):
    try:
        return _BOOL_VALUES[raw.strip().lower()]
    except KeyError:
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}") from None


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


_KEY_PARSERS = {
    "preset": str,
    "dimension": _parse_int,
    "lambda_coeff": _parse_float,
    "gamma": _parse_float,
    "epsilon": _parse_float,
    "alpha": _parse_float,
    "sigma": _parse_float,
    "m": _parse_int,
    "m1": _parse_int,
    "m2": _parse_int,
    "dt": _parse_float,
    "dt_policy": str,
    "t_final": _parse_float,
    "stepper": str,
    "variant": str,
    "stencil": str,
    "snapshot_times": str,
    "output_dir": str,
    "dphi2_literal": _parse_bool,
    "domain_a": _parse_float,
    "domain_b": _parse_float,
    "rho0": _parse_float,
    "q0": _parse_float,
}


def parse_config_file(path) -> dict:
    """Read a key=value config file into a raw-value dict."""
    raw = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def build_config(raw: dict) -> RunConfig:
    """Turn raw (string or typed) key/values into a validated RunConfig."""
    for key in raw:
        if key not in _KEY_PARSERS:
            raise ConfigError(f"unknown key {key!r}")

    values = {}
    for key, value in raw.items():
        if isinstance(value, str) and _KEY_PARSERS[key] is not str:
            values[key] = _KEY_PARSERS[key](key, value)
        else:
            values[key] = value

    preset = values.get("preset", "example1")
    if preset not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {preset!r}; choose one of {PRESET_NAMES}")

    if preset in _PRESET_FIXED:
        dim, lam, gam, dom_a, dom_b = _PRESET_FIXED[preset]
        for key, fixed in (
            ("dimension", dim),
            ("lambda_coeff", lam),
            ("gamma", gam),
            ("domain_a", dom_a),
            ("domain_b", dom_b),
        ):
            if key in values and values[key] != fixed:
                raise ConfigError(
                    f"{key}={values[key]} contradicts preset {preset} (fixed to {fixed})"
                )
            values[key] = fixed

    dt_kind = values.pop("dt_policy", None)
    dt_value = values.pop("dt", None)
    if dt_kind is None:
        dt_kind = "fixed" if dt_value is not None else "adaptive"
    if dt_kind == "fixed":
        if dt_value is None:
            raise ConfigError("dt_policy=fixed requires dt")
        policy = DtPolicy.fixed(dt_value)
    elif dt_kind == "adaptive":
        if dt_value is not None:
            raise ConfigError("dt is only meaningful with dt_policy=fixed")
        policy = DtPolicy.adaptive()
    else:
        raise ConfigError(f"dt_policy must be fixed or adaptive, got {dt_kind!r}")
    values["dt_policy"] = policy

    snap_raw = values.get("snapshot_times")
    if snap_raw is not None and isinstance(snap_raw, str):
        try:
            values["snapshot_times"] = tuple(float(part) for part in snap_raw.split(",") if part.strip())
        except ValueError:
            raise ConfigError(f"snapshot_times: expected comma-separated numbers, got {snap_raw!r}") from None
    elif snap_raw is not None:
        values["snapshot_times"] = tuple(float(t) for t in snap_raw)

    cfg = RunConfig(**values)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: RunConfig) -> None:
    if cfg.dimension not in (1, 2):
        raise ConfigError(f"dimension must be 1 or 2, got {cfg.dimension}")
    if cfg.stepper not in _STEPPERS:
        raise ConfigError(f"stepper must be one of {_STEPPERS}, got {cfg.stepper!r}")
    if cfg.dimension == 2 and cfg.stepper != "ap":
        raise ConfigError(f"2D runs support only the ap stepper, got {cfg.stepper!r}")
    if cfg.variant not in _VARIANTS:
        raise ConfigError(f"variant must be one of {_VARIANTS}, got {cfg.variant!r}")
    if cfg.stencil not in _STENCILS:
        raise ConfigError(f"stencil must be one of {_STENCILS}, got {cfg.stencil!r}")
    if not cfg.t_final > 0.0:
        raise ConfigError(f"t_final must be > 0, got {cfg.t_final}")
    for t in cfg.snapshot_times:
        if not (0.0 <= t <= cfg.t_final):
            raise ConfigError(f"snapshot time {t} outside [0, t_final={cfg.t_final}]")
    if cfg.dimension == 1 and cfg.m < 1:
        raise ConfigError(f"m must be positive, got {cfg.m}")
    if cfg.dimension == 2 and (cfg.m1 < 4 or cfg.m2 < 4):
        raise ConfigError(f"m1, m2 must be >= 4, got {cfg.m1}, {cfg.m2}")
    if not cfg.domain_b > cfg.domain_a:
        raise ConfigError("domain_b must exceed domain_a")
    if cfg.preset == "custom" and not cfg.rho0 > 0.0:
        raise ConfigError("custom preset requires rho0 > 0")


def config_to_dict(cfg: RunConfig) -> dict:
    """Flat, JSON-friendly echo of a config (for manifests)."""
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, DtPolicy):
            out["dt_policy"] = value.kind
            if value.dt is not None:
                out["dt"] = value.dt
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out
