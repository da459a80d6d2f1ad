"""Initial-data construction and the named experiment presets with their analyses.

A preset bundles a config builder, optional per-sample extra measurements (kept out of
the trajectory CSV, whose columns are fixed) and an analysis that turns the collected
series into a summary and, where a growth law is expected, a :class:`FitReport`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .. import profiles
from ..circle_field import nodes
from ..sqg1d import blowup_time_estimate
from .config import MAX_BUMP_WIDTH, ConfigError, ExperimentConfig
from .fitting import FitError, fit_exponential, fit_power


# --------------------------------------------------------------------------- initial data

def _need(params: dict, key: str, default=None):
    if key in params:
        return params[key]
    if default is None:
        raise ConfigError(f"ic.{key}", "missing initial-data parameter")
    return default


def build_profile(cfg: ExperimentConfig) -> profiles.Profile:
    p = dict(cfg.ic_params)
    m = cfg.symmetry_m if cfg.symmetry_m > 1 else 4
    if cfg.ic == "constant":
        return profiles.constant(_need(p, "c", 1.0))
    if cfg.ic == "modes":
        if not p:
            raise ConfigError("ic", "the modes preset needs at least one ic.cosK, ic.sinK or ic.const")
        try:
            return profiles.modes(p)
        except ValueError as exc:
            raise ConfigError("ic", str(exc)) from None
    if cfg.ic in ("bump", "ramp_bump"):
        eps = _need(p, "epsilon")
        if not 0 < eps <= MAX_BUMP_WIDTH:
            raise ConfigError("ic.epsilon", f"bump width must lie in (0, {MAX_BUMP_WIDTH}]")
        return profiles.ramp_bump(eps, _need(p, "amplitude", 1.0), m)
    if cfg.ic == "sector_sine":
        return profiles.sector_sine(int(_need(p, "m", float(m))))
    if cfg.ic == "pattern":
        return profiles.pattern(_need(p, "c1"), _need(p, "c2"), m, p.get("width", 0.0))
    raise ConfigError("ic", f"unknown initial data {cfg.ic!r}")


# --------------------------------------------------------------------------- extra measurements

def fine_samples(state) -> tuple:
    """(angles, values) on the finest grid the state carries."""
    if getattr(state, "lagrangian", None) is not None:
        h = np.asarray(state.lagrangian.h_fine)
    else:
        h = state.h.refined(4)
    return nodes(len(h)), h


def plateau_distance(state, delta: float = 0.05, m: int = 4, level: float = 1.0) -> float:
    """Integral of |h - level| over (delta, pi/m - delta)."""
    theta, h = fine_samples(state)
    sel = (theta > delta) & (theta < np.pi / m - delta)
    return float(np.sum(np.abs(h[sel] - level)) * 2 * np.pi / len(h))


def mode_phase(state, m: int = 4) -> float:
    return float(np.angle(state.h.coefficient(m)))


# --------------------------------------------------------------------------- analyses

def analyze_growth(cfg: ExperimentConfig, series: dict):
    """Mass bracket and gradient power law for the compact bump."""
    eps = cfg.ic_params["epsilon"]
    t = np.asarray(series["t"])
    mass = np.asarray(series["l1"]) / (2 * cfg.symmetry_m)
    grad = np.asarray(series["grad_linf"])
    m0 = mass[0]
    lo = 1.0 / (t + 1.0 / m0)
    hi = 1.0 / ((1 - 8 * eps ** 2) * t + 1.0 / m0)
    fit = fit_power(t, grad, abscissa=m0 * t + 1.0, variable="M0*t+1")
    bracket = (2 * (1 - 2 * eps ** 2) - 0.1, 2 / (1 - 8 * eps ** 2) + 0.1)
    summary = {
        "sector_mass_initial": m0,
        "mass_over_lower_min": float(np.min(mass / lo)),
        "mass_over_upper_max": float(np.max(mass / hi)),
        "mass_in_bracket": bool(np.all(mass >= 0.95 * lo) and np.all(mass <= 1.05 * hi)),
        "mass_strictly_decreasing": bool(np.all(np.diff(mass) < 0)),
        "exponent": fit.exponent_or_rate,
        "exponent_bracket": list(bracket),
        "exponent_in_bracket": bool(bracket[0] <= fit.exponent_or_rate <= bracket[1]),
    }
    return fit, summary


def analyze_boundary(cfg: ExperimentConfig, series: dict):
    """Exponential gradient growth, approach to the plateau and the stream slope at 0."""
    t = np.asarray(series["t"])
    grad = np.asarray(series["grad_linf"])
    dist = np.asarray(series["plateau_distance"])
    fit = fit_exponential(t, grad)
    settled = t >= 0.1 * t[-1]
    late = t >= t[0] + 2 * (t[-1] - t[0]) / 3
    minus_h0 = -np.asarray(series["hprime0"])
    summary = {
        "rate": fit.exponent_or_rate,
        "r_squared": fit.r_squared,
        "distance_initial": float(dist[0]),
        "distance_final": float(dist[-1]),
        "distance_monotone": bool(np.all(np.diff(dist[settled]) <= 1e-12)),
        "minus_hprime0_late_min": float(np.min(minus_h0[late])),
        "hprime0_bound_holds": bool(np.min(minus_h0[late]) >= 0.25),
    }
    return fit, summary


def analyze_rotation(cfg: ExperimentConfig, series: dict):
    """Angular speed of the m-fold pattern from the phase of its leading harmonic."""
    m = cfg.symmetry_m
    t = np.asarray(series["t"])
    phase = np.unwrap(np.asarray(series["mode_phase"]))
    speed = float(np.polyfit(t, phase, 1)[0] / m)
    c1, c2 = cfg.ic_params["c1"], cfg.ic_params["c2"]
    return None, {"measured_speed": speed, "quarter_sum": (c1 + c2) / 4, "half_sum": (c1 + c2) / 2}


def analyze_blowup(cfg: ExperimentConfig, series: dict):
    verdicts = series["verdict"]
    out = {"verdict": verdicts[-1], "t_stop": float(series["t"][-1])}
    if verdicts[-1] == "suspected-blowup":
        try:
            out["blowup_time_estimate"] = blowup_time_estimate(series["t"], series["grad_linf"])
        except ValueError as exc:
            out["blowup_time_estimate"] = None
            out["estimate_error"] = str(exc)
    return None, out


# --------------------------------------------------------------------------- presets

@dataclass(frozen=True)
class Preset:
    name: str
    build: Callable[..., ExperimentConfig]
    analyze: Optional[Callable] = None
    extras: Optional[Callable[[ExperimentConfig], dict]] = None


def preset_theorem_growth(epsilon: float = 0.1, n: int = 1024, t_end: float = 50.0,
                          amplitude: float = 1.0) -> ExperimentConfig:
    if not 0 < epsilon <= MAX_BUMP_WIDTH:
        raise ConfigError("ic.epsilon", f"bump width must lie in (0, {MAX_BUMP_WIDTH}], got {epsilon}")
    return ExperimentConfig(model="euler1d", name="thm-growth", ic="bump",
                            ic_params={"epsilon": epsilon, "amplitude": amplitude}, n=n, t_end=t_end,
                            sample_interval=t_end / 100, symmetry_m=4, odd_axis=0.0,
                            stepper="semi-lagrangian", fit="power")


def preset_theorem_boundary(n: int = 1024, t_end: float = 30.0) -> ExperimentConfig:
    return ExperimentConfig(model="euler1d", name="thm-boundary", ic="sector_sine", ic_params={"m": 4.0},
                            n=n, t_end=t_end, sample_interval=t_end / 120, symmetry_m=4, odd_axis=0.0,
                            stepper="semi-lagrangian", fit="exponential")


def preset_rotating_pattern(c1: float = 1.0, c2: float = 0.0, n: int = 512, t_end: float = 2.0,
                            width: float = 0.02) -> ExperimentConfig:
    return ExperimentConfig(model="euler1d", name="rotating-pattern", ic="pattern",
                            ic_params={"c1": c1, "c2": c2, "width": width}, n=n, t_end=t_end,
                            sample_interval=t_end / 20, symmetry_m=4)


def preset_ccf_blowup(n: int = 512, t_end: float = 5.0, threshold: float = 20.0) -> ExperimentConfig:
    return ExperimentConfig(model="degregorio", name="ccf-blowup", ic="modes", ic_params={"sin1": 1.0},
                            n=n, t_end=t_end, sample_interval=0.01, a=-1.0, blowup_threshold=threshold)


PRESETS = {
    "thm-growth": Preset("thm-growth", preset_theorem_growth, analyze_growth),
    "thm-boundary": Preset("thm-boundary", preset_theorem_boundary, analyze_boundary,
                           lambda cfg: {"plateau_distance": lambda s, d: plateau_distance(s, 0.05, cfg.symmetry_m)}),
    "rotating-pattern": Preset("rotating-pattern", preset_rotating_pattern, analyze_rotation,
                               lambda cfg: {"mode_phase": lambda s, d: mode_phase(s, cfg.symmetry_m)}),
    "ccf-blowup": Preset("ccf-blowup", preset_ccf_blowup, analyze_blowup),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


__all__ = [
    "FitError",
    "Preset",
    "PRESETS",
    "analyze_blowup",
    "analyze_boundary",
    "analyze_growth",
    "analyze_rotation",
    "build_profile",
    "fine_samples",
    "get_preset",
    "mode_phase",
    "plateau_distance",
    "preset_ccf_blowup",
    "preset_rotating_pattern",
    "preset_theorem_boundary",
    "preset_theorem_growth",
]
