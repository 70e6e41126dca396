"""Run configuration: flat ``key = value`` files overridden by CLI flags."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError, InvalidValue, UnknownKey
from .estimators import BandwidthPolicy, ThetaGrid
from .kernels import KernelSpec
from .transforms import TransformFamily

ALIASES = {"transform": "family"}


@dataclass(frozen=True)
class RunConfig:
    family: str = "boxcox"
    method: str = "md"
    grid: tuple[float, float, float] = (-0.5, 1.5, 0.0625)
    bandwidth: str = "fixed"
    h0: float = 0.5
    h_per_coord: tuple[float, ...] | None = None
    cv_grid: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5)
    kernel: str = "quartic"
    seed: int = 0
    B: int = 200
    level: float = 0.95
    recenter: str = "bootstrap"
    g: float | None = None
    g_rule: str = "silverman"
    theta: float = 1.0
    models: tuple[int, ...] = (1,)
    thetas: tuple[float, ...] = (0.0, 0.5, 1.0)
    methods: tuple[str, ...] = ("md",)
    h0_list: tuple[float, ...] = (0.3,)
    n: int = 100
    reps: int = 500
    threads: int = 1
    out: str | None = None

    @property
    def theta_grid(self) -> ThetaGrid:
        return ThetaGrid(*self.grid)

    @property
    def policy(self) -> BandwidthPolicy:
        if self.bandwidth == "cv":
            return BandwidthPolicy.cv(self.cv_grid)
        if self.h_per_coord is not None:
            return BandwidthPolicy.fixed(self.h_per_coord)
        return BandwidthPolicy.fixed(self.h0)

    @property
    def kernel_spec(self) -> KernelSpec:
        return KernelSpec.from_token(self.kernel)

    @property
    def family_spec(self) -> TransformFamily:
        return TransformFamily.from_token(self.family)


def _real(key, text, positive=False):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise InvalidValue(key, text, "not a number") from None
    if not math.isfinite(v):
        raise InvalidValue(key, text, "not finite")
    if positive and v <= 0:
        raise InvalidValue(key, text, "must be positive")
    return v


def _int(key, text, minimum=None):
    try:
        v = int(str(text).strip())
    except ValueError:
        raise InvalidValue(key, text, "not an integer") from None
    if minimum is not None and v < minimum:
        raise InvalidValue(key, text, f"must be >= {minimum}")
    return v


def _list(text):
    if isinstance(text, (list, tuple)):
        return list(text)
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _token(key, text, allowed):
    v = str(text).strip().lower()
    if v not in allowed:
        raise InvalidValue(key, text, f"expected one of {', '.join(allowed)}")
    return v


def _grid(key, text):
    parts = _list(text)
    if len(parts) != 3:
        raise InvalidValue(key, text, "expected lo,hi,step")
    lo, hi, step = (_real(key, p) for p in parts)
    try:
        ThetaGrid(lo, hi, step)
    except ValueError as exc:
        raise InvalidValue(key, text, str(exc)) from None
    return (lo, hi, step)


def _reals(key, text, positive=False):
    vals = tuple(_real(key, p, positive) for p in _list(text))
    if not vals:
        raise InvalidValue(key, text, "empty list")
    return vals


def _optional_real(key, text, positive=False):
    if text is None or str(text).strip().lower() in ("", "none", "auto"):
        return None
    return _real(key, text, positive)


_PARSERS = {
    "family": lambda k, v: _token(k, v, ("boxcox", "zellner", "arcsinh")),
    "method": lambda k, v: _token(k, v, ("md", "pl")),
    "grid": _grid,
    "bandwidth": lambda k, v: _token(k, v, ("fixed", "cv")),
    "h0": lambda k, v: _real(k, v, positive=True),
    "h_per_coord": lambda k, v: None if v is None else _reals(k, v, positive=True),
    "cv_grid": lambda k, v: _reals(k, v, positive=True),
    "kernel": lambda k, v: _token(k, v, ("quartic", "gaussian")),
    "seed": lambda k, v: _int(k, v, 0),
    "B": lambda k, v: _int(k, v, 1),
    "level": lambda k, v: _level(k, v),
    "recenter": lambda k, v: _token(k, v, ("bootstrap", "original")),
    "g": lambda k, v: _optional_real(k, v, positive=True),
    "g_rule": lambda k, v: _token(k, v, ("silverman",)),
    "theta": _real,
    "models": lambda k, v: _models(k, v),
    "thetas": _reals,
    "methods": lambda k, v: tuple(_token(k, p, ("md", "pl")) for p in _nonempty(k, v)),
    "h0_list": lambda k, v: _reals(k, v, positive=True),
    "n": lambda k, v: _int(k, v, 3),
    "reps": lambda k, v: _int(k, v, 1),
    "threads": lambda k, v: _int(k, v, 1),
    "out": lambda k, v: None if v is None or str(v).strip() == "" else str(v).strip(),
}


def _nonempty(key, text):
    parts = _list(text)
    if not parts:
        raise InvalidValue(key, text, "empty list")
    return parts


def _level(key, text):
    v = _real(key, text)
    if not 0 < v < 1:
        raise InvalidValue(key, text, "must lie in (0, 1)")
    return v


def _models(key, text):
    vals = tuple(_int(key, p) for p in _nonempty(key, text))
    if any(v not in (1, 2, 3) for v in vals):
        raise InvalidValue(key, text, "models are 1, 2, 3")
    return vals


def _canonical(key: str) -> str:
    k = key.strip()
    k = ALIASES.get(k.lower(), k)
    if k in _PARSERS:
        return k
    low = k.lower()
    for name in _PARSERS:
        if name.lower() == low:
            return name
    raise UnknownKey(f"unknown config key {key!r}")


def read_config_file(path) -> dict[str, str]:
    """Raw ``key -> value`` strings from a flat config file (``#`` comments)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[_canonical(key)] = value.strip()
    return out


def parse_config(path=None, overrides: dict | None = None, base: RunConfig | None = None) -> RunConfig:
    """Defaults, then file values, then ``overrides`` (CLI flags; ``None`` means unset)."""
    values = {}
    if path is not None:
        values.update(read_config_file(path))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[_canonical(k)] = v
    parsed = {k: _PARSERS[k](k, v) for k, v in values.items()}
    cfg = replace(base or RunConfig(), **parsed)
    if cfg.h_per_coord is not None and cfg.bandwidth == "cv":
        raise InvalidValue("h_per_coord", cfg.h_per_coord, "conflicts with bandwidth = cv")
    return cfg


def config_keys() -> list[str]:
    return [f.name for f in fields(RunConfig)]

