"""Experiment configuration: a flat ``key = value`` text format with typed, strict fields.

Lines starting with ``#`` are comments.  Keys prefixed ``ic.`` are parameters of the
initial-data preset named by ``ic``; every other key must be a field of
:class:`ExperimentConfig`.  Unknown keys and values of the wrong type raise
:class:`ConfigError` naming the offending field.
"""
from __future__ import annotations

import hashlib
import typing
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

MODELS = ("euler1d", "sqg-exact", "sqg-approx", "degregorio", "vortex", "gap3", "lift-query", "kernel-decay")
STEPPERS = ("pseudospectral-rk4", "semi-lagrangian")
FIT_KINDS = ("none", "power", "exponential")
MAX_BUMP_WIDTH = 0.25


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "euler1d"
    name: str = "run"
    ic: str = "modes"
    ic_params: dict = field(default_factory=dict)
    n: int = 256
    dt: Optional[float] = None
    cfl: float = 0.5
    t_end: float = 1.0
    sample_interval: Optional[float] = None
    symmetry_m: int = 1
    odd_axis: Optional[float] = None
    stepper: str = "pseudospectral-rk4"
    dealias: bool = True
    refine: int = 4
    spectral_filter: bool = False
    a: Optional[float] = None
    blowup_threshold: float = 1e6
    tail_limit: float = 1e-4
    fit: str = "none"
    theta: tuple = ()
    weights: tuple = ()
    z1: float = 0.5235987755982988
    z2: float = 0.5235987755982988
    points: tuple = ()
    alpha: float = 0.5
    m_values: tuple = (2, 3, 4)
    ratios: tuple = (2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1000.0)
    output_dir: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        validate(self)

    def echo(self) -> str:
        """Canonical text form; parsing it back gives an equal config."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "ic_params":
                continue
            if v is None:
                continue
            lines.append(f"{f.name} = {_format(v)}")
        for k in sorted(self.ic_params):
            lines.append(f"ic.{k} = {_format(self.ic_params[k])}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.echo().encode()).hexdigest()[:10]

    def with_updates(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    return str(v)


_HINTS = None


def _hints() -> dict:
    global _HINTS
    if _HINTS is None:
        _HINTS = typing.get_type_hints(ExperimentConfig)
    return _HINTS


def _parse_scalar(key: str, text: str, kind):
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(key, f"expected {kind.__name__}, got {text!r}") from None


def _parse_value(key: str, text: str):
    hint = _hints()[key]
    optional = typing.get_origin(hint) is typing.Union
    if optional:
        if text.strip().lower() in ("none", ""):
            return None
        hint = [a for a in typing.get_args(hint) if a is not type(None)][0]
    if hint is tuple:
        if key == "points":
            out = []
            for item in filter(None, (s.strip() for s in text.split(","))):
                r, _, th = item.partition(":")
                if not _:
                    raise ConfigError(key, f"points are r:theta pairs, got {item!r}")
                out.append((_parse_scalar(key, r, float), _parse_scalar(key, th, float)))
            return tuple(out)
        kind = int if key == "m_values" else float
        return tuple(_parse_scalar(key, s, kind) for s in text.split(",") if s.strip())
    return _parse_scalar(key, text, hint)


def _ic_value(key: str, text: str):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"initial-data parameters are numbers, got {text!r}") from None


def parse_config(text: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse the flat key-value format; ``overrides`` maps key to raw text and wins."""
    known = {f.name for f in fields(ExperimentConfig)} - {"ic_params"}
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or f"line {lineno}", "expected 'key = value'")
        if key in raw:
            raise ConfigError(key, "duplicate key")
        raw[key] = value.strip()
    raw.update(overrides or {})
    kw, ic_params = {}, {}
    for key, value in raw.items():
        if key.startswith("ic."):
            ic_params[key[3:]] = _ic_value(key, value)
        elif key in known:
            kw[key] = _parse_value(key, value)
        else:
            raise ConfigError(key, "unknown key")
    return ExperimentConfig(ic_params=ic_params, **kw)


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, overrides)


def validate(cfg: ExperimentConfig) -> None:
    if cfg.model not in MODELS:
        raise ConfigError("model", f"unknown model {cfg.model!r}; choose from {', '.join(MODELS)}")
    if cfg.stepper not in STEPPERS:
        raise ConfigError("stepper", f"unknown stepper {cfg.stepper!r}")
    if cfg.fit not in FIT_KINDS:
        raise ConfigError("fit", f"unknown fit {cfg.fit!r}")
    if cfg.n < 8 or cfg.n % 2:
        raise ConfigError("n", f"grid size must be even and at least 8, got {cfg.n}")
    if not cfg.t_end > 0:
        raise ConfigError("t_end", "must be positive")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError("dt", "must be positive")
    if not cfg.cfl > 0:
        raise ConfigError("cfl", "must be positive")
    if cfg.sample_interval is not None and not cfg.sample_interval > 0:
        raise ConfigError("sample_interval", "must be positive")
    if cfg.symmetry_m < 1:
        raise ConfigError("symmetry_m", "must be at least 1")
    if cfg.model == "degregorio" and cfg.a is None:
        raise ConfigError("a", "the degregorio model needs the parameter a")
    if cfg.refine < 1:
        raise ConfigError("refine", "must be at least 1")
    if cfg.ic in ("bump", "ramp_bump"):
        eps = cfg.ic_params.get("epsilon")
        if eps is None:
            raise ConfigError("ic.epsilon", "the bump preset needs a width")
        if not 0 < eps <= MAX_BUMP_WIDTH:
            raise ConfigError("ic.epsilon", f"bump width must lie in (0, {MAX_BUMP_WIDTH}], got {eps}")
    if cfg.model == "vortex":
        if not cfg.theta:
            raise ConfigError("theta", "the vortex model needs initial angles")
        if cfg.weights and len(cfg.weights) != len(cfg.theta):
            raise ConfigError("weights", "needs one weight per vortex")
    if cfg.model == "lift-query" and not cfg.points:
        raise ConfigError("points", "the lift query needs r:theta points")
