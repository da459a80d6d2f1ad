"""Least-squares growth fits on log-log (power) or semi-log (exponential) axes."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

MIN_SAMPLES = 10


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FitReport:
    kind: str
    exponent_or_rate: float
    window: tuple
    r_squared: float
    prefactor: float
    n_samples: int
    variable: str = "t"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def default_window(times, values) -> tuple:
    """Final third of the horizon, starting no earlier than the first doubling of ``values``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    lo = t[0] + 2.0 * (t[-1] - t[0]) / 3.0
    doubled = np.nonzero(v >= 2.0 * v[0])[0]
    if doubled.size:
        lo = max(lo, t[doubled[0]])
    if np.count_nonzero(t >= lo) < MIN_SAMPLES:
        lo = t[max(len(t) - MIN_SAMPLES, 0)]
    return float(lo), float(t[-1])


def _select(times, values, window, abscissa):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    x = t if abscissa is None else np.asarray(abscissa, dtype=float)
    if window is None:
        window = default_window(t, v)
    lo, hi = window
    if lo < t[0] - 1e-12 or hi > t[-1] + 1e-12 or lo >= hi:
        raise FitError(f"window {window} is not inside the run horizon [{t[0]}, {t[-1]}]")
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if np.count_nonzero(sel) < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} samples in the window, got {np.count_nonzero(sel)}")
    if np.any(v[sel] <= 0):
        raise FitError("values must be positive inside the fit window")
    return x[sel], v[sel], (float(lo), float(hi))


def _linear(x, y):
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), float(icpt), min(max(r2, 0.0), 1.0)


def fit_power(times: Sequence[float], values: Sequence[float], window: Optional[tuple] = None,
              abscissa: Optional[Sequence[float]] = None, variable: str = "t") -> FitReport:
    """values ~ C x^p.  ``x`` is the time unless an ``abscissa`` of the same length is given;
    the window always refers to time."""
    x, v, win = _select(times, values, window, abscissa)
    if np.any(x <= 0):
        raise FitError("the power-law abscissa must be positive in the window")
    p, c, r2 = _linear(np.log(x), np.log(v))
    return FitReport("power", p, win, r2, float(np.exp(c)), len(x), variable)


def fit_exponential(times: Sequence[float], values: Sequence[float], window: Optional[tuple] = None) -> FitReport:
    """values ~ C exp(rate t)."""
    x, v, win = _select(times, values, window, None)
    rate, c, r2 = _linear(x, np.log(v))
    return FitReport("exponential", rate, win, r2, float(np.exp(c)), len(x))
