"""Initial profiles on the circle, each with an exact derivative where one is available.

Every profile is a 2pi-periodic callable accepting arbitrary real angles, which the
semi-Lagrangian stepper composes with the characteristic map.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .circle_field import CircleField, derivative, make_field, nodes


def _wrap(theta):
    return np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi


@dataclass
class Profile:
    """A named initial profile.  ``deriv`` is None when only samples are known."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    deriv: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def __call__(self, theta):
        return self.func(theta)

    def sample(self, n: int) -> CircleField:
        return make_field(self.func(nodes(n)) * np.ones(n))


def constant(c: float) -> Profile:
    return Profile("constant", lambda t: np.full(np.shape(t), float(c)),
                   lambda t: np.zeros(np.shape(t)), {"c": c})


def modes(coeffs: dict) -> Profile:
    """Trigonometric polynomial from {"cos4": 1.0, "sin8": 0.3, "const": 2.0}."""
    terms = []
    for key, amp in coeffs.items():
        if key == "const":
            terms.append(("const", 0, float(amp)))
            continue
        kind, k = key[:3], int(key[3:])
        if kind not in ("cos", "sin"):
            raise ValueError(f"unknown mode key {key!r}; use cosK, sinK or const")
        terms.append((kind, k, float(amp)))

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for kind, k, a in terms:
            out += a if kind == "const" else a * (np.cos(k * t) if kind == "cos" else np.sin(k * t))
        return out

    def df(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for kind, k, a in terms:
            if kind == "cos":
                out -= a * k * np.sin(k * t)
            elif kind == "sin":
                out += a * k * np.cos(k * t)
        return out

    return Profile("modes", f, df, dict(coeffs))


def _odd_extension(base, dbase, m):
    """Odd-about-0, m-fold extension of a profile given on [0, pi/m]."""
    half = np.pi / m

    def f(t):
        phi = np.mod(np.asarray(t, dtype=float) + half, 2 * half) - half
        return np.sign(phi) * base(np.abs(phi))

    def df(t):
        phi = np.mod(np.asarray(t, dtype=float) + half, 2 * half) - half
        return dbase(np.abs(phi))

    return f, df


def ramp_bump(epsilon: float, amplitude: float = 1.0, m: int = 4) -> Profile:
    """C^1 bump on [0, epsilon]: A sin(s)(1 + cos s)/2 with s = pi theta/epsilon.

    Positive on (0, epsilon) with slope A pi/epsilon at 0, extended oddly and m-fold.
    Its sector mass is A epsilon/pi.
    """
    if not 0 < epsilon <= np.pi / m:
        raise ValueError(f"bump width must lie in (0, pi/{m}], got {epsilon}")
    c = np.pi / epsilon

    def base(x):
        s = np.clip(c * x, 0.0, np.pi)
        return amplitude * np.sin(s) * (1 + np.cos(s)) / 2

    def dbase(x):
        s = c * x
        inside = s < np.pi
        s = np.clip(s, 0.0, np.pi)
        val = amplitude * c * (np.cos(s) * (1 + np.cos(s)) - np.sin(s) ** 2) / 2
        return np.where(inside, val, 0.0)

    f, df = _odd_extension(base, dbase, m)
    return Profile("ramp_bump", f, df, {"epsilon": epsilon, "amplitude": amplitude, "m": m})


def sector_sine(m: int = 4) -> Profile:
    """sin(m theta/2) on the sector [0, pi/m], so h(0) = 0 and h(pi/m) = 1, odd m-fold extension.

    The extension jumps from +1 to -1 across theta = pi/m; the jump nodes take the value 0.
    """
    half = np.pi / m

    def base(x):
        return np.where(np.abs(x - half) < 2e-15, 0.0, np.sin(m * x / 2))

    def dbase(x):
        return np.where(np.abs(x - half) < 2e-15, 0.0, m / 2 * np.cos(m * x / 2))

    f, df = _odd_extension(base, dbase, m)
    return Profile("sector_sine", f, df, {"m": m})


def pattern(c1: float, c2: float, m: int = 4, width: float = 0.0) -> Profile:
    """Two-valued m-fold pattern: c1 on [2j pi/m, (2j+1) pi/m), c2 elsewhere.

    ``width > 0`` mollifies each jump with a tanh profile of that width; jumps of the
    sharp pattern take the midpoint value at the nodes that fall on them.
    """
    mid, amp = (c1 + c2) / 2, (c1 - c2) / 2

    def f(t):
        s = np.sin(m * np.asarray(t, dtype=float))
        if width > 0:
            return mid + amp * np.tanh(s / (m * width))
        return mid + amp * np.where(np.abs(s) < 1e-12, 0.0, np.sign(s))

    def df(t):
        t = np.asarray(t, dtype=float)
        if width > 0:
            s = np.sin(m * t)
            return amp * np.cos(m * t) / width / np.cosh(s / (m * width)) ** 2
        return np.zeros_like(t)

    return Profile("pattern", f, df if width > 0 else None, {"c1": c1, "c2": c2, "m": m, "width": width})


def from_samples(values) -> Profile:
    """Profile from node samples, interpolated by the local periodic cubic used elsewhere."""
    from .interp import periodic_cubic

    f0 = make_field(values)
    vals = np.array(f0.values)
    dvals = np.array(derivative(f0).values)
    return Profile("samples", lambda t: periodic_cubic(vals, t), lambda t: periodic_cubic(dvals, t),
                   {"n": len(vals)})
