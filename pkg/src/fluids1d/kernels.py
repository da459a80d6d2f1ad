"""Biot-Savart laws on the circle: h -> H for the Euler reduction, g -> G for SQG.

Both laws are diagonal in Fourier space.  The Euler law solves ``4H + H'' = h`` and the
SQG law comes from the homogeneous ansatz of degree one.  Closed-form convolution kernels
are kept for cross-checks and for the symmetrised kernels used in positivity arguments.
"""
from __future__ import annotations

import warnings

import numpy as np

from .circle_field import CircleField, PreconditionError, SymmetrySpec, project_symmetry

__all__ = [
    "ModeTwoWarning",
    "SymmetryError",
    "euler_multiplier",
    "sqg_multiplier",
    "k_circle",
    "k_circle_prime",
    "k_circle_symmetrized",
    "symmetrized_amplitude",
    "solve_stream_euler",
    "solve_stream_sqg",
    "h_prime_endpoints",
    "convolve_quadrature",
]

MODE_TWO_TOL = 1e-8


class ModeTwoWarning(UserWarning):
    """Input carries |k| = 2 content, which the Euler law cannot see (m < 3 regime)."""


class SymmetryError(ValueError):
    pass


def euler_multiplier(k) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=float))
    out = np.zeros_like(k)
    ok = k != 2
    out[ok] = 1.0 / (4.0 - k[ok] ** 2)
    return out


def sqg_multiplier(k) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=float))
    out = np.zeros_like(k)
    ok = k >= 2
    kk = k[ok]
    out[ok] = 1.0 / (-kk - 3.0 * kk / (kk ** 2 - 1.0))
    return out


def _reduce(theta):
    return np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi


def k_circle(theta):
    """Euler kernel on the circle; H = (1/2pi) K * h."""
    t = _reduce(theta)
    s2 = np.sin(2 * t)
    return 0.5 * np.pi * s2 * np.sign(t) - 0.5 * s2 * t - 0.125 * np.cos(2 * t)


def k_circle_prime(theta):
    """Derivative of :func:`k_circle` away from 0; it jumps by 2pi across 0."""
    t = _reduce(theta)
    c2 = np.cos(2 * t)
    return np.pi * c2 * np.sign(t) - t * c2 - 0.25 * np.sin(2 * t)


def symmetrized_amplitude(m: int) -> float:
    """Amplitude A_m in the m-fold averaged kernel A_m * cos(2 (theta' - pi/m))."""
    return np.pi / (2 * m * np.sin(2 * np.pi / m))


def k_circle_symmetrized(theta, m: int = 4):
    """Average of ``k_circle`` over the m rotations by 2 pi j / m.

    Between the kinks at multiples of 2 pi/m the average solves 4G + G'' = const with mean
    1/4, which pins it to A_m cos(2 (theta' - pi/m)), theta' = theta mod 2 pi/m.  For m = 4
    this is (pi/8)|sin 2 theta|.
    """
    if m < 3:
        raise ValueError(f"symmetrised kernel needs m >= 3, got {m}")
    period = 2 * np.pi / m
    tp = np.mod(np.asarray(theta, dtype=float), period)
    return symmetrized_amplitude(m) * np.cos(2 * (tp - np.pi / m))


def convolve_quadrature(h: CircleField, kernel=k_circle, order: int = 256) -> np.ndarray:
    """(1/2pi) * integral K(theta - s) h(s) ds at the nodes by direct quadrature.

    The kernel has derivative jumps at 0 and at +-pi, so each target integral is split
    there and Gauss-Legendre is applied on the two smooth halves, with ``h`` evaluated
    through its trigonometric interpolant.  O(n * order) work; used as a check of the
    multiplier path.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * np.pi * (x + 1.0)           # nodes on [0, pi]
    wu = 0.5 * np.pi * w
    out = np.empty(h.n_samples)
    for j, t in enumerate(h.theta):
        # s = t - u covers (t - pi, t), s = t + u covers (t, t + pi)
        left = np.sum(wu * kernel(u) * h.evaluate(t - u))
        right = np.sum(wu * kernel(-u) * h.evaluate(t + u))
        out[j] = (left + right) / (2 * np.pi)
    return out


def solve_stream_euler(h: CircleField, warn: bool = True) -> CircleField:
    k = h.k
    if warn:
        c2 = max(abs(h.coefficient(2)), abs(h.coefficient(-2)))
        if c2 > MODE_TWO_TOL:
            warnings.warn(f"|h_hat(+-2)| = {c2:.3e} exceeds {MODE_TWO_TOL:g}; those modes are dropped",
                          ModeTwoWarning, stacklevel=2)
    return h.apply_multiplier(euler_multiplier(k))


def solve_stream_sqg(g: CircleField, tol: float = 1e-10) -> CircleField:
    for k in (0, 1, -1):
        c = g.coefficient(k)
        if abs(c) > tol:
            raise PreconditionError(f"SQG stream solve needs g_hat(0) = g_hat(+-1) = 0; coefficient k={k} is {c:.3e}")
    return g.apply_multiplier(sqg_multiplier(g.k))


def _trig_integral(coef: np.ndarray, k: np.ndarray, weight: str, a: float, b: float) -> float:
    """Integral over [a, b] of w(2 theta) * sum_k c_k exp(-i k theta), exactly, w in {sin, cos}."""
    if weight == "cos":
        parts = [(0.5, -2), (0.5, 2)]     # cos 2t = (e^{2it} + e^{-2it})/2
    else:
        parts = [(-0.5j, -2), (0.5j, 2)]  # sin 2t = (e^{2it} - e^{-2it})/(2i)
    total = 0.0 + 0.0j
    for w, shift in parts:
        q = k.astype(float) + shift        # w * e^{-i shift t} e^{-ikt} -> e^{-i q t}
        val = np.empty_like(coef)
        zero = q == 0
        val[zero] = b - a
        qz = q[~zero]
        val[~zero] = (np.exp(-1j * qz * b) - np.exp(-1j * qz * a)) / (-1j * qz)
        total += w * np.sum(coef * val)
    return float(total.real)


def h_prime_endpoints(h: CircleField, tol: float = 1e-8) -> tuple:
    """Return (H'(0), H'(pi/4)) for 4-fold data that is odd about 0.

    Uses H'(0) = -int_0^{pi/4} cos(2s) h(s) ds and H'(pi/4) = int_0^{pi/4} sin(2s) h(s) ds,
    integrated exactly for the trigonometric interpolant of ``h``.
    """
    proj = project_symmetry(h, SymmetrySpec(4, odd_axis=0.0))
    scale = max(1.0, float(np.max(np.abs(h.values))))
    err = float(np.max(np.abs(proj.values - h.values)))
    if err > tol * scale:
        raise SymmetryError(f"h is not 4-fold and odd about 0 (projection residual {err:.3e})")
    c = h.spectrum.copy()
    c[h.n_samples // 2] = 0.0
    a = np.pi / 4
    hp0 = -_trig_integral(c, h.k, "cos", 0.0, a)
    hpq = _trig_integral(c, h.k, "sin", 0.0, a)
    return hp0, hpq
