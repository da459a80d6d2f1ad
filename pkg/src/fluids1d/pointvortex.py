"""Point vortices on the fundamental sector of a 4-fold symmetric configuration.

Angles live on the circle of length pi/2 (the sector [0, pi/2) with its ends identified),
and each vortex moves with

    dtheta_j/dt = (2/pi) * sum_l a_l * sin(|2 theta_l - 2 theta_j|),

where differences are taken in (-pi/2, pi/2] so that the kernel |sin 2x| is used
consistently on the sector circle.  For three equal vortices the two gaps obey a planar
Hamiltonian system; :func:`gap_rhs` integrates it in its own time variable, related to
the vortex time by the constant returned from :func:`measure_gap_time_constant`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

SECTOR = np.pi / 2
MIN_GAP = 1e-9
DT_CAP = 1e-2
GAP_TIME_CONSTANT = -2.0 / np.pi


class OrderingError(RuntimeError):
    """Two vortices met or swapped; the true dynamics preserves order, so dt was too large."""


class DomainError(ValueError):
    """Gap coordinates outside the open triangle z1, z2 > 0, z1 + z2 < pi/2."""


@dataclass(frozen=True)
class VortexSystem:
    theta: np.ndarray
    weights: np.ndarray
    t: float = 0.0

    @property
    def n(self) -> int:
        return len(self.theta)

    @classmethod
    def make(cls, theta, weights=None, t: float = 0.0) -> "VortexSystem":
        theta = np.mod(np.asarray(theta, dtype=float), SECTOR)
        weights = np.ones_like(theta) if weights is None else np.asarray(weights, dtype=float)
        if weights.shape != theta.shape:
            raise ValueError("one weight per vortex")
        if theta.size > 1 and np.any(np.diff(theta) <= 0):
            raise OrderingError("initial angles must be strictly increasing in [0, pi/2)")
        return cls(theta, weights, t)

    def gaps(self) -> np.ndarray:
        """Cyclic gaps theta_{j+1} - theta_j on the sector circle; the last one wraps."""
        return cyclic_gaps(self.theta)


@dataclass(frozen=True)
class GapState:
    z: np.ndarray
    energy: Optional[float] = None


def cyclic_gaps(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.mod(np.diff(np.r_[theta, theta[0] + SECTOR]), SECTOR)


def vortex_rhs(theta, weights) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    weights = np.asarray(weights, dtype=float)
    d = np.subtract.outer(theta, theta)          # d[j, l] = theta_j - theta_l
    d = np.mod(d + SECTOR / 2, SECTOR) - SECTOR / 2
    return 2.0 / np.pi * (np.abs(np.sin(2.0 * d)) @ weights)


def _check_order(theta: np.ndarray) -> None:
    if theta.size < 2:
        return
    g = cyclic_gaps(theta)
    if abs(g.sum() - SECTOR) > 1e-9 or g.min() < MIN_GAP:
        raise OrderingError(f"vortex ordering lost (min gap {g.min():.3e}); reduce dt")


def step_rk4(v: VortexSystem, dt: float, cap: float = DT_CAP) -> VortexSystem:
    if not 0 < dt <= cap:
        raise ValueError(f"dt must lie in (0, {cap}]")
    th, w = v.theta, v.weights
    k1 = vortex_rhs(th, w)
    k2 = vortex_rhs(th + 0.5 * dt * k1, w)
    k3 = vortex_rhs(th + 0.5 * dt * k2, w)
    k4 = vortex_rhs(th + dt * k3, w)
    new = np.mod(th + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), SECTOR)
    _check_order(new)
    return replace(v, theta=new, t=v.t + dt)


def integrate_vortices(v: VortexSystem, t_end: float, dt: float = 1e-3, sample_every: int = 1):
    """Return (times, unwrapped angles) sampled every ``sample_every`` steps.

    Unwrapped angles accumulate the rotation, so total rotation and quasi-periodicity can
    be read off directly.
    """
    nsteps = int(round((t_end - v.t) / dt))
    times = [v.t]
    unwrapped = [v.theta.copy()]
    lift = v.theta.copy()
    for i in range(1, nsteps + 1):
        prev = v.theta
        v = step_rk4(v, dt)
        lift = lift + np.mod(v.theta - prev + SECTOR / 2, SECTOR) - SECTOR / 2
        if i % sample_every == 0 or i == nsteps:
            times.append(v.t)
            unwrapped.append(lift.copy())
    return np.array(times), np.array(unwrapped)


# --------------------------------------------------------------------------- gap system

def _in_triangle(z1, z2) -> bool:
    return bool(np.all(z1 > 0) and np.all(z2 > 0) and np.all(z1 + z2 < SECTOR))


def gap_rhs(z1, z2):
    if not _in_triangle(np.asarray(z1), np.asarray(z2)):
        raise DomainError(f"gaps ({z1}, {z2}) outside the triangle z1, z2 > 0, z1 + z2 < pi/2")
    s = np.sin(2 * z1 + 2 * z2)
    return s - np.sin(2 * z2), np.sin(2 * z1) - s


def hamiltonian(z1, z2):
    return np.cos(2 * z1) + np.cos(2 * z2) - np.cos(2 * z1 + 2 * z2)


def gap_divergence(z1, z2, h: float = 1e-6):
    """Central-difference divergence of the gap field."""
    a = (gap_rhs(z1 + h, z2)[0] - gap_rhs(z1 - h, z2)[0]) / (2 * h)
    b = (gap_rhs(z1, z2 + h)[1] - gap_rhs(z1, z2 - h)[1]) / (2 * h)
    return a + b


def level_point(energy: float) -> tuple:
    """Point (z, z) on the diagonal with E = energy, for 1 < energy < 3/2."""
    if not 1.0 < energy < 1.5:
        raise DomainError("energy levels of the gap system lie in (1, 3/2)")
    z = brentq(lambda x: hamiltonian(x, x) - energy, 1e-12, np.pi / 6)
    return z, z


def measure_gap_time_constant(seed: int = 0, samples: int = 20) -> float:
    """Least-squares ratio between gap velocities from the vortex law and from gap_rhs."""
    rng = np.random.default_rng(seed)
    num = den = 0.0
    for _ in range(samples):
        th = np.sort(rng.uniform(0, SECTOR, 3))
        v = vortex_rhs(th, np.ones(3))
        dz = np.array([v[1] - v[0], v[2] - v[1]])
        z1, z2 = th[1] - th[0], th[2] - th[1]
        g = np.array(gap_rhs(z1, z2))
        num += dz @ g
        den += g @ g
    return float(num / den)


@dataclass
class GapOrbit:
    t: np.ndarray
    z: np.ndarray        # shape (len(t), 2)
    dz: np.ndarray       # gap_rhs along the orbit

    @property
    def energy(self) -> np.ndarray:
        return hamiltonian(self.z[:, 0], self.z[:, 1])


def _gap_scalar(a, b):
    s = math.sin(2 * a + 2 * b)
    return s - math.sin(2 * b), math.sin(2 * a) - s


def integrate_gaps(z0, t_end: float, dt: float = 1e-3) -> GapOrbit:
    """Classical RK4 for the gap system, every step stored."""
    gap_rhs(*z0)                      # domain check on the start point
    nsteps = int(np.ceil(t_end / dt - 1e-9))
    z = np.empty((nsteps + 1, 2))
    dz = np.empty_like(z)
    a, b = float(z0[0]), float(z0[1])
    fa, fb = _gap_scalar(a, b)
    z[0] = a, b
    dz[0] = fa, fb
    h2 = 0.5 * dt
    for i in range(nsteps):
        k2a, k2b = _gap_scalar(a + h2 * fa, b + h2 * fb)
        k3a, k3b = _gap_scalar(a + h2 * k2a, b + h2 * k2b)
        k4a, k4b = _gap_scalar(a + dt * k3a, b + dt * k3b)
        a += dt / 6.0 * (fa + 2 * k2a + 2 * k3a + k4a)
        b += dt / 6.0 * (fb + 2 * k2b + 2 * k3b + k4b)
        fa, fb = _gap_scalar(a, b)
        z[i + 1] = a, b
        dz[i + 1] = fa, fb
    if not _in_triangle(z[:, 0], z[:, 1]):
        raise DomainError("gap orbit left the triangle; reduce dt")
    return GapOrbit(dt * np.arange(nsteps + 1), z, dz)


@dataclass(frozen=True)
class PeriodResult:
    period: Optional[float]
    fixed_point: bool = False
    closure: Optional[float] = None     # distance between start and the refined return point


def _hermite(t0, t1, y0, y1, d0, d1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def detect_period(orbit: GapOrbit, tol: float = 1e-5, stationary_tol: float = 1e-12) -> PeriodResult:
    """First return to the start on the section through it, refined by bisection.

    The section is the line through the start point across the flow, using whichever
    coordinate moves faster there.  Returns ``PeriodResult(0.0, fixed_point=True)`` at
    the stationary point and ``PeriodResult(None)`` when the orbit does not come back
    within ``tol`` in the stored horizon.
    """
    z, dz, t = orbit.z, orbit.dz, orbit.t
    if np.max(np.abs(dz[0])) < stationary_tol:
        return PeriodResult(0.0, fixed_point=True, closure=0.0)
    c = int(np.argmax(np.abs(dz[0])))
    other = 1 - c
    sign = np.sign(dz[0, c])
    f = z[:, c] - z[0, c]
    # wait until the orbit has left the start point before looking for a return
    moved = np.argmax(np.linalg.norm(z - z[0], axis=1) > 10 * tol)
    if moved == 0:
        return PeriodResult(None)
    for i in range(max(moved, 1), len(t) - 1):
        if f[i] * sign < 0 <= f[i + 1] * sign:
            args = (t[i], t[i + 1], f[i], f[i + 1], dz[i, c], dz[i + 1, c])
            lo, hi = t[i], t[i + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _hermite(*args, mid) * sign < 0:
                    lo = mid
                else:
                    hi = mid
            tp = 0.5 * (lo + hi)
            zo = _hermite(t[i], t[i + 1], z[i, other], z[i + 1, other], dz[i, other], dz[i + 1, other], tp)
            closure = abs(zo - z[0, other])
            if closure <= tol:
                return PeriodResult(tp - t[0], closure=closure)
    return PeriodResult(None)


def period_at_energy(energy: float, dt: float = 1e-3, max_time: float = 200.0, tol: float = 1e-5):
    """Period of the gap orbit through the diagonal point of the given energy.

    Integrates in growing chunks and stops at the first detected return.  Returns the
    :class:`PeriodResult` and the orbit integrated so far.
    """
    horizon = min(8.0, max_time)
    while True:
        orbit = integrate_gaps(level_point(energy), horizon, dt)
        res = detect_period(orbit, tol)
        if res.period is not None or horizon >= max_time:
            return res, orbit
        horizon = min(2 * horizon, max_time)


def rotation_number(theta0, gap_period: float, dt: float = 1e-3) -> float:
    """Mean rotation over one gap period, as a fraction of the sector (mod 1).

    After one gap period the configuration repeats up to a rigid rotation; the motion of
    the positions is periodic only when this number is rational.
    """
    v = VortexSystem.make(theta0)
    t_gap = abs(gap_period / GAP_TIME_CONSTANT)
    steps = int(np.ceil(t_gap / dt))
    ts, th = integrate_vortices(v, steps * (t_gap / steps), t_gap / steps)
    shift = th[-1, 0] - th[0, 0]
    return float(np.mod(shift / SECTOR, 1.0))


def nearest_rational(x: float, max_den: int = 20):
    """Closest p/q with q <= max_den, and its distance from x."""
    best = (0, 1, abs(x))
    for q in range(1, max_den + 1):
        p = round(x * q)
        d = abs(x - p / q)
        if d < best[2]:
            best = (p, q, d)
    return best
