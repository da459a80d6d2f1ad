"""Planar fields rebuilt from angular profiles, the symmetrised planar kernel, and a ring norm.

A profile h on the circle defines the radially homogeneous Euler solution with vorticity
omega = h(theta), stream function Psi = r^2 H(theta) and velocity u = grad-perp Psi.  The SQG
lift uses Theta = r^(2 - 2 alpha) g(theta) and Psi = r^2 G(theta).  Everything is evaluated
on demand at query points.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .circle_field import CircleField, derivative
from .kernels import solve_stream_euler, solve_stream_sqg

__all__ = [
    "LiftConfigError",
    "SingularConfiguration",
    "PlanePoint",
    "LiftedEuler",
    "LiftedSQG",
    "lift_euler",
    "lift_sqg",
    "biot_savart",
    "k2d_symmetrized",
    "decay_ratio",
    "far_field_integral",
    "RingSamples",
    "ring_samples",
    "ring_norm",
    "plain_quotient",
    "holder_norm_1d",
    "growth_constant",
]


class LiftConfigError(ValueError):
    """The lift was asked for something it cannot compute without more input."""


class SingularConfiguration(ValueError):
    """A kernel evaluation hit its singularity."""


@dataclass(frozen=True)
class PlanePoint:
    r: float
    theta: float

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"radius must be nonnegative, got {self.r}")

    @classmethod
    def from_cartesian(cls, x1: float, x2: float) -> "PlanePoint":
        return cls(float(np.hypot(x1, x2)), float(np.arctan2(x2, x1)))

    @property
    def x1(self) -> float:
        return self.r * np.cos(self.theta)

    @property
    def x2(self) -> float:
        return self.r * np.sin(self.theta)

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x1, self.x2])


@dataclass(frozen=True)
class LiftedEuler:
    omega: float
    u: np.ndarray
    psi: float

    def record(self, p: PlanePoint) -> dict:
        return {"x1": p.x1, "x2": p.x2, "omega": self.omega,
                "u1": float(self.u[0]), "u2": float(self.u[1]), "psi": self.psi}


@dataclass(frozen=True)
class LiftedSQG:
    theta_scalar: float
    u: np.ndarray
    psi: float

    def record(self, p: PlanePoint) -> dict:
        return {"x1": p.x1, "x2": p.x2, "theta_scalar": self.theta_scalar,
                "u1": float(self.u[0]), "u2": float(self.u[1]), "psi": self.psi}


def _frame(theta: float):
    e_r = np.array([np.cos(theta), np.sin(theta)])
    e_t = np.array([-np.sin(theta), np.cos(theta)])
    return e_r, e_t


def _values(f: CircleField, theta: float) -> float:
    return float(f.evaluate(np.array([theta]))[0])


def lift_euler(h: CircleField, p: PlanePoint, H: Optional[CircleField] = None) -> LiftedEuler:
    """omega = h, u = 2H r e_theta - H' r e_r, Psi = r^2 H at the point ``p``.

    ``H`` may be passed in to avoid repeating the stream solve for many points.
    """
    if H is None:
        H = solve_stream_euler(h, warn=False)
    e_r, e_t = _frame(p.theta)
    Hv = _values(H, p.theta)
    dH = _values(derivative(H), p.theta)
    u = p.r * (2.0 * Hv * e_t - dH * e_r)
    return LiftedEuler(_values(h, p.theta), u, p.r ** 2 * Hv)


def lift_sqg(g: CircleField, alpha: float, p: PlanePoint, G: Optional[CircleField] = None) -> LiftedSQG:
    """Theta = r^(2 - 2 alpha) g, u = -2G r e_theta + G' r e_r, Psi = r^2 G."""
    if G is None:
        if alpha != 0.5:
            raise LiftConfigError("the stream profile G must be supplied when alpha != 1/2")
        G = solve_stream_sqg(g)
    e_r, e_t = _frame(p.theta)
    Gv = _values(G, p.theta)
    dG = _values(derivative(G), p.theta)
    u = p.r * (-2.0 * Gv * e_t + dG * e_r)
    scal = p.r ** (2.0 - 2.0 * alpha) * _values(g, p.theta)
    return LiftedSQG(float(scal), u, p.r ** 2 * Gv)


# --------------------------------------------------------------------------- kernels

def biot_savart(z) -> np.ndarray:
    """K(z) = z^perp / (2 pi |z|^2), vectorised over the leading axes."""
    z = np.asarray(z, dtype=float)
    r2 = np.sum(z * z, axis=-1, keepdims=True)
    if np.any(r2 == 0):
        raise SingularConfiguration("Biot-Savart kernel evaluated at z = 0")
    return np.stack([-z[..., 1], z[..., 0]], axis=-1) / (2 * np.pi * r2)


def _rotate(y: np.ndarray, a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.stack([c * y[..., 0] - s * y[..., 1], s * y[..., 0] + c * y[..., 1]], axis=-1)


def k2d_symmetrized(x, y, m: int) -> np.ndarray:
    """(1/m) sum_i K(x - O^i y) with O the rotation by 2 pi / m.

    ``x`` and ``y`` are PlanePoints or arrays of Cartesian points with last axis 2.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    x = x.xy if isinstance(x, PlanePoint) else np.asarray(x, dtype=float)
    y = y.xy if isinstance(y, PlanePoint) else np.asarray(y, dtype=float)
    scale = np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1)
    out = 0.0
    for i in range(m):
        z = x - _rotate(y, 2 * np.pi * i / m)
        if np.any(np.sum(z * z, axis=-1) <= 1e-24 * scale):
            raise SingularConfiguration(f"x coincides with a rotated copy of y (m = {m})")
        out = out + biot_savart(z)
    return out / m


def decay_ratio(m: int, ratio: float, n_dirs: int = 1000, seed: int = 0) -> np.ndarray:
    """|K^(m)(x, y)| |y|^m / |x|^(m-1) with |x| = 1, |y| = ratio, over random directions."""
    rng = np.random.default_rng(seed)
    ax, ay = rng.uniform(0, 2 * np.pi, (2, n_dirs))
    x = np.c_[np.cos(ax), np.sin(ax)]
    y = ratio * np.c_[np.cos(ay), np.sin(ay)]
    return np.linalg.norm(k2d_symmetrized(x, y, m), axis=-1) * ratio ** m


def far_field_integral(m: int, ratio: float, n_r: int = 2000, n_phi: int = 256) -> float:
    """(1/|x|) times the integral of |K^(m)(x, y)| over 2|x| < |y| < ratio |x|, with x = (1, 0).

    For m >= 3 this stays bounded as ratio grows; for m = 2 it grows like log(ratio).
    """
    if ratio <= 2:
        return 0.0
    u = np.linspace(np.log(2.0), np.log(ratio), n_r)
    phi = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    uu, pp = np.meshgrid(u, phi, indexing="ij")
    rho = np.exp(uu)
    y = np.stack([rho * np.cos(pp), rho * np.sin(pp)], axis=-1)
    f = np.linalg.norm(k2d_symmetrized(np.array([1.0, 0.0]), y, m), axis=-1) * rho ** 2
    return float(np.trapezoid(2 * np.pi * f.mean(axis=1), u))


# --------------------------------------------------------------------------- ring norm

@dataclass(frozen=True)
class RingSamples:
    """Values of a planar scalar on a log-radial by uniform-angular grid, shape (n_r, n_theta)."""

    radii: np.ndarray
    angles: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r, a, v = self.radii, self.angles, self.values
        if r.ndim != 1 or a.ndim != 1 or len(r) < 2 or len(a) < 2:
            raise ValueError("ring grid needs at least two radii and two angles")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        if v.shape != (len(r), len(a)):
            raise ValueError(f"values have shape {v.shape}, expected {(len(r), len(a))}")


def ring_samples(func, r_min: float = 1e-8, r_max: float = 1.0, n_r: int = 33,
                 n_theta: int = 128) -> RingSamples:
    """Sample ``func(r, theta)`` (vectorised) on the standard grid."""
    radii = np.geomspace(r_min, r_max, n_r)
    angles = -np.pi + 2 * np.pi * np.arange(n_theta) / n_theta
    rr, tt = np.meshgrid(radii, angles, indexing="ij")
    return RingSamples(radii, angles, np.asarray(func(rr, tt), dtype=float))


def _pair_quotients(s: RingSamples, i: int, j: int, alpha: float, weighted: bool) -> float:
    ri, rj = s.radii[i], s.radii[j]
    a = s.angles
    d = a[:, None] - a[None, :]
    dist2 = ri ** 2 + rj ** 2 - 2 * ri * rj * np.cos(d)
    dist = np.sqrt(np.maximum(dist2, 0.0))
    diff = np.abs(s.values[i][:, None] - s.values[j][None, :])
    ok = dist > 1e-14 * max(ri, rj)
    q = diff[ok] / dist[ok] ** alpha
    if weighted:
        q = q * min(ri, rj) ** alpha
    return float(q.max()) if q.size else 0.0


def ring_norm(s: RingSamples, alpha: float) -> float:
    """sup |f| + sup over sampled pairs of min(|x|, |x'|)^alpha |f(x) - f(x')| / |x - x'|^alpha.

    Pairs are all pairs on one ring plus all pairs on adjacent rings.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    best = 0.0
    for i in range(len(s.radii)):
        best = max(best, _pair_quotients(s, i, i, alpha, True))
        if i + 1 < len(s.radii):
            best = max(best, _pair_quotients(s, i, i + 1, alpha, True))
    return float(np.max(np.abs(s.values))) + best


def plain_quotient(s: RingSamples, alpha: float, ring: int = 0) -> float:
    """Unweighted Hoelder quotient sup |f(x) - f(x')| / |x - x'|^alpha on one ring."""
    return _pair_quotients(s, ring, ring, alpha, False)


def holder_norm_1d(values: np.ndarray, alpha: float) -> float:
    """sup |h| + sup |h(a) - h(b)| / |a - b|^alpha on a uniform periodic grid (arc distance)."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    k = np.arange(n)
    d = np.abs(k[:, None] - k[None, :])
    d = np.minimum(d, n - d) * 2 * np.pi / n
    diff = np.abs(values[:, None] - values[None, :])
    ok = d > 0
    return float(np.max(np.abs(values)) + np.max(diff[ok] / d[ok] ** alpha))


def growth_constant(h: CircleField, n_points: int = 4096) -> float:
    """Measured sup of |u(x)| / (||h||_inf |x|) for the Euler lift of ``h``.

    By homogeneity the quotient depends on the angle only, so this samples a uniform
    angular grid.
    """
    hs = h.sup_norm()
    if hs == 0:
        return 0.0
    H = solve_stream_euler(h, warn=False)
    theta = -np.pi + 2 * np.pi * np.arange(n_points) / n_points
    speed = np.hypot(2 * H.evaluate(theta), derivative(H).evaluate(theta))
    return float(speed.max() / hs)
