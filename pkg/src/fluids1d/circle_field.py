"""Periodic scalar profiles on the circle and the spectral operators shared by every model.

Nodes are ``theta_j = -pi + 2*pi*j/n``.  Coefficients follow the analysis convention

    f_hat[k] = (1/2pi) * integral f(theta) exp(+i k theta) dtheta,

so that ``f(theta) = sum_k f_hat[k] exp(-i k theta)``.  Coefficient arrays are stored in
numpy FFT index order (``k = 0, 1, ..., n/2-1, -n/2, ..., -1``); use :attr:`CircleField.k`
to recover the signed wavenumber of each slot.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "CircleField",
    "FieldSizeError",
    "PreconditionError",
    "SymmetrySpec",
    "derivative",
    "extend_from_sector",
    "hilbert",
    "inv_modulus",
    "make_field",
    "nodes",
    "project_symmetry",
    "wavenumbers",
]


class FieldSizeError(ValueError):
    """Raised for grid sizes that are odd, too small or not a power of two."""


class PreconditionError(ValueError):
    """Raised when an operator's input violates its stated precondition."""


def _check_size(n: int) -> None:
    if n < 8 or n % 2 or (n & (n - 1)):
        raise FieldSizeError(f"grid size must be a power of two >= 8, got {n}")


def nodes(n: int) -> np.ndarray:
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def wavenumbers(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, 1.0 / n).astype(int)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SymmetrySpec:
    """m-fold rotational symmetry, optionally odd about the ray at ``odd_axis``."""

    m: int = 1
    odd_axis: Optional[float] = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"rotational order must be an integer >= 1, got {self.m}")
        if self.odd_axis is not None and not (-np.pi <= self.odd_axis < np.pi):
            raise ValueError("odd_axis must lie in [-pi, pi)")

    @property
    def trivial(self) -> bool:
        return self.m == 1 and self.odd_axis is None


class CircleField:
    """Real 2pi-periodic profile held as node samples with a cached coefficient view.

    Instances are immutable.  Build them with :func:`make_field` from samples or
    :meth:`from_spectrum` after a spectral operation; in the latter case the spectrum is
    authoritative and the node values are synthesised on first access.
    """

    __slots__ = ("_values", "_spectrum", "n_samples", "__dict__")

    def __init__(self, values: Optional[np.ndarray] = None, spectrum: Optional[np.ndarray] = None):
        if (values is None) == (spectrum is None):
            raise ValueError("give exactly one of values or spectrum")
        n = len(values) if values is not None else len(spectrum)
        _check_size(n)
        self.n_samples = n
        self._values = None if values is None else _frozen(np.asarray(values, dtype=float))
        self._spectrum = None if spectrum is None else _frozen(np.asarray(spectrum, dtype=complex))

    @classmethod
    def from_spectrum(cls, spectrum: np.ndarray) -> "CircleField":
        return cls(spectrum=spectrum)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], n: int) -> "CircleField":
        _check_size(n)
        return cls(values=np.asarray(func(nodes(n)), dtype=float) * np.ones(n))

    @cached_property
    def k(self) -> np.ndarray:
        return wavenumbers(self.n_samples)

    @cached_property
    def theta(self) -> np.ndarray:
        return nodes(self.n_samples)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            sign = np.where(self.k % 2 == 0, 1.0, -1.0)
            self._values = _frozen(np.fft.fft(sign * self._spectrum).real)
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            sign = np.where(self.k % 2 == 0, 1.0, -1.0)
            self._spectrum = _frozen(sign * np.fft.ifft(self._values))
        return self._spectrum

    def coefficient(self, k: int) -> complex:
        n = self.n_samples
        if not -n // 2 <= k < n // 2:
            raise IndexError(f"wavenumber {k} outside [-{n // 2}, {n // 2})")
        return complex(self.spectrum[k % n])

    def __repr__(self) -> str:
        return f"CircleField(n_samples={self.n_samples})"

    # arithmetic keeps whichever representation is cheaper to combine
    def _combine(self, other, op) -> "CircleField":
        if isinstance(other, CircleField):
            if other.n_samples != self.n_samples:
                raise FieldSizeError("fields live on different grids")
            return CircleField(values=op(self.values, other.values))
        return CircleField(values=op(self.values, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return CircleField.from_spectrum(-self.spectrum)

    def apply_multiplier(self, mult: np.ndarray) -> "CircleField":
        return CircleField.from_spectrum(self.spectrum * mult)

    # -- evaluation and norms -------------------------------------------------
    def evaluate(self, theta) -> np.ndarray:
        """Trigonometric interpolant at arbitrary angles (exact for band-limited data)."""
        theta = np.asarray(theta, dtype=float)
        c = self.spectrum.copy()
        nyq = self.n_samples // 2
        # split the Nyquist coefficient symmetrically so the interpolant stays real
        c_nyq = c[nyq]
        c[nyq] = 0.0
        phase = np.exp(-1j * np.multiply.outer(theta, self.k))
        out = (phase @ c).real
        out += (c_nyq * np.cos(nyq * theta)).real
        return out

    def refined(self, factor: int) -> np.ndarray:
        """Samples of the trigonometric interpolant on a grid ``factor`` times finer."""
        n = self.n_samples
        m = n * factor
        c = np.zeros(m, dtype=complex)
        half = n // 2
        c[:half] = self.spectrum[:half]
        c[-half + 1:] = self.spectrum[half + 1:]
        c[half] = 0.5 * self.spectrum[half]
        c[-half] = 0.5 * self.spectrum[half]
        kk = wavenumbers(m)
        sign = np.where(kk % 2 == 0, 1.0, -1.0)
        return np.fft.fft(sign * c).real

    def sup_norm(self, refine: int = 8) -> float:
        """Sup of |f| over the circle for the trigonometric interpolant."""
        fine = np.abs(self.refined(refine))
        j = int(np.argmax(fine))
        m = fine.size
        t0 = -np.pi + 2.0 * np.pi * j / m
        dt = 2.0 * np.pi / m
        res = minimize_scalar(lambda t: -abs(self.evaluate(t)), bounds=(t0 - dt, t0 + dt),
                              method="bounded", options={"xatol": 1e-13})
        return max(float(fine[j]), float(-res.fun))

    def mean(self) -> float:
        return float(self.spectrum[0].real)

    def l1(self, refine: int = 4) -> float:
        """Integral of |f| over the circle."""
        fine = self.refined(refine) if refine > 1 else self.values
        return float(2.0 * np.pi * np.mean(np.abs(fine)))

    # -- serialisation --------------------------------------------------------
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "value"])
            for t, v in zip(self.theta, self.values):
                w.writerow([repr(float(t)), repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "CircleField":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return make_field(np.array([float(r["value"]) for r in rows]))

    def spectrum_json(self) -> str:
        order = np.argsort(self.k)
        recs = [{"k": int(self.k[i]), "re": float(self.spectrum[i].real), "im": float(self.spectrum[i].imag)}
                for i in order]
        return json.dumps(recs)

    def dump_spectrum(self, path) -> None:
        Path(path).write_text(self.spectrum_json())


def make_field(samples) -> CircleField:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise FieldSizeError("samples must be one-dimensional")
    return CircleField(values=samples)


def project_symmetry(f: CircleField, s: SymmetrySpec) -> CircleField:
    if s.trivial:
        return f
    c = f.spectrum.copy()
    k = f.k
    if s.m > 1:
        c[k % s.m != 0] = 0.0
    if s.odd_axis is not None:
        n = f.n_samples
        # reflection about the axis: f(2a - theta) has coefficient f_hat[-k] * exp(2 i k a)
        c_neg = c[(-k) % n]
        c = 0.5 * (c - c_neg * np.exp(2j * k * s.odd_axis))
        c[n // 2] = 0.0
    return CircleField.from_spectrum(c)


def _nyquist_zeroed(mult: np.ndarray) -> np.ndarray:
    mult[len(mult) // 2] = 0.0
    return mult


def derivative(f: CircleField) -> CircleField:
    mult = _nyquist_zeroed(-1j * f.k.astype(float))
    return f.apply_multiplier(mult)


def hilbert(f: CircleField) -> CircleField:
    """Circle Hilbert transform with ``derivative(hilbert(f))`` equal to ``|nabla| f``."""
    mult = _nyquist_zeroed(1j * np.sign(f.k).astype(complex))
    return f.apply_multiplier(mult)


def inv_modulus(f: CircleField, tol: float = 1e-10) -> CircleField:
    c0 = f.spectrum[0]
    if abs(c0) > tol:
        raise PreconditionError(f"inv_modulus needs a mean-zero field; coefficient k=0 is {c0.real:.3e}")
    k = np.abs(f.k).astype(float)
    mult = np.zeros_like(k)
    mult[k > 0] = 1.0 / k[k > 0]
    return f.apply_multiplier(mult)


def modulus(f: CircleField) -> CircleField:
    """``|nabla|`` with multiplier ``|k|``."""
    return f.apply_multiplier(np.abs(f.k).astype(float))


def extend_from_sector(func: Callable[[np.ndarray], np.ndarray], m: int = 4) -> Callable:
    """Extend ``func`` given on [0, pi/m] to an m-fold profile that is odd about 0.

    The returned callable accepts arbitrary angles.
    """
    half = np.pi / m

    def extended(theta):
        phi = np.mod(np.asarray(theta, dtype=float) + half, 2 * half) - half
        out = np.sign(phi) * np.asarray(func(np.abs(phi)), dtype=float)
        return out

    return extended
