"""Transport of radially homogeneous vorticity profiles: dh/dt + 2 H dh/dtheta = 0.

Two steppers are provided:

* ``pseudospectral-rk4``: classical RK4 on the spectral right-hand side with 2/3-rule
  dealiasing and optional exponential filtering.
* ``semi-lagrangian``: the backward characteristic map X(t, .) is stored on the nodes
  as a periodic displacement D = X - theta and h = h0(X).  Feet are traced with RK4
  through a velocity that is a cubic polynomial in time across the last three levels
  and a predicted new level, corrected twice.  Lagrangian tracers carry log(dphi/da) so that the gradient
  sup-norm is available even when the profile steepens below the grid scale.  Once the map
  develops an unresolved layer at an odd axis, stencils near it stay inside the sector.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Iterator, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .circle_field import CircleField, SymmetrySpec, derivative, make_field, nodes, project_symmetry, wavenumbers
from .interp import periodic_lagrange as periodic_cubic
from .kernels import euler_multiplier, solve_stream_euler
from .profiles import Profile, from_samples

STEPPERS = ("pseudospectral-rk4", "semi-lagrangian")
EPS_FLOOR = 1e-12


class StepRejected(RuntimeError):
    """The requested dt violates the CFL bound; ``admissible_dt`` is the largest allowed."""

    def __init__(self, dt, admissible_dt):
        super().__init__(f"dt = {dt:.4g} exceeds the CFL bound {admissible_dt:.4g}")
        self.dt = dt
        self.admissible_dt = admissible_dt


class PhysicsAbort(RuntimeError):
    """Raised when a run produces non-finite values; carries the last good state."""

    def __init__(self, msg, last_state=None):
        super().__init__(msg)
        self.last_state = last_state


# --------------------------------------------------------------------------- spectral helpers

def dealias_mask(n: int) -> np.ndarray:
    return np.abs(wavenumbers(n)) <= n // 3


def filter_weights(n: int) -> np.ndarray:
    k = np.abs(wavenumbers(n)).astype(float)
    return np.exp(-36.0 * (k / (n / 2)) ** 36)


def tail_band(n: int, dealias: bool) -> np.ndarray:
    """Top third of the retained band: (2n/9, n/3] when dealiasing, else (n/3, n/2]."""
    k = np.abs(wavenumbers(n))
    if dealias:
        return (k > 2 * n / 9) & (k <= n // 3)
    return k > n / 3


def rhs(h: CircleField, dealias: bool = True) -> CircleField:
    """-2 H dh/dtheta, with both factors and the product truncated to |k| <= n/3 if asked."""
    if dealias:
        mask = dealias_mask(h.n_samples)
        h = CircleField.from_spectrum(h.spectrum * mask)
    H = solve_stream_euler(h, warn=False)
    prod = make_field(-2.0 * H.values * derivative(h).values)
    if dealias:
        prod = CircleField.from_spectrum(prod.spectrum * mask)
    return prod


def symmetrize_nodes(values: np.ndarray, spec: SymmetrySpec, odd: bool = True) -> np.ndarray:
    """Average node values over the symmetry group when it maps the grid onto itself.

    Used on the characteristic displacement, which shares the symmetry of h.  Falls back
    to spectral projection when the group does not act on the nodes.
    """
    n = len(values)
    if spec.trivial:
        return values
    step = n / spec.m
    shift_ok = abs(step - round(step)) < 1e-12
    axis_ok = True
    if spec.odd_axis is not None:
        a = (spec.odd_axis + np.pi) * n / (2 * np.pi)
        axis_ok = abs(2 * a - round(2 * a)) < 1e-9
    if not (shift_ok and axis_ok):
        return np.array(project_symmetry(make_field(values), spec).values)
    step = int(round(step))
    acc = np.zeros(n)
    for r in range(spec.m):
        acc += np.roll(values, -r * step)
    out = acc / spec.m
    if spec.odd_axis is not None:
        # node j reflects to node (2a - j) where theta_j = -pi + 2 pi j/n
        a2 = int(round(2 * (spec.odd_axis + np.pi) * n / (2 * np.pi)))
        idx = (a2 - np.arange(n)) % n
        out = 0.5 * (out - out[idx]) if odd else 0.5 * (out + out[idx])
    return out


# --------------------------------------------------------------------------- state

@dataclass(frozen=True)
class VelocityLevel:
    """2H and 2H' sampled on the fine grid at one time level."""

    t: float
    u: np.ndarray
    du: np.ndarray
    H: CircleField


@dataclass(frozen=True)
class LagrangianData:
    profile: Profile
    refine: int
    disp: np.ndarray                      # D = X - theta on the coarse nodes
    level: VelocityLevel                  # velocity at the current time
    history: tuple                        # earlier velocity levels, oldest first
    h_fine: np.ndarray
    time_order: int = 3                   # previous levels kept; 3 gives cubic-in-time velocity


@dataclass(frozen=True)
class Tracers:
    labels: np.ndarray
    phi: np.ndarray
    logjac: np.ndarray
    grad0: np.ndarray                     # |h0'(label)|


@dataclass(frozen=True)
class EulerState:
    t: float
    h: CircleField
    symmetry: SymmetrySpec = SymmetrySpec()
    stepper: str = "pseudospectral-rk4"
    dealias: bool = True
    spectral_filter: bool = False
    cfl: float = 0.5
    lagrangian: Optional[LagrangianData] = None
    tracers: Optional[Tracers] = None

    @property
    def n(self) -> int:
        return self.h.n_samples


@dataclass(frozen=True)
class EulerDiagnostics:
    t: float
    linf: float
    l1: float
    mean: float
    grad_linf: float
    hprime0: float
    hprime_quarter: float
    spectral_tail: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return [getattr(self, c) for c in self.columns()]


def _velocity_from_samples(h_fine: np.ndarray, t: float) -> VelocityLevel:
    hf = make_field(h_fine)
    H = hf.apply_multiplier(euler_multiplier(hf.k))
    return VelocityLevel(t, 2.0 * np.array(H.values), 2.0 * np.array(derivative(H).values), H)


WALL_STRETCH = 0.1


def _walls(spec: SymmetrySpec, n: int, tracers=None, points: int = 6):
    """Barriers for interpolating the map at the odd axes that have grown an unresolved layer.

    The flow fixes each odd axis.  Near a compressive axis the backward map X stretches
    the first cell over a growing share of the sector, and once that share exceeds
    ``WALL_STRETCH`` no centred stencil may reach across the axis.  Returns None when no
    barrier is active or the sectors are too narrow to hold a full stencil.
    """
    if spec.odd_axis is None or tracers is None:
        return None
    width = np.pi / spec.m
    dx = 2 * np.pi / n
    if width / dx - 1 < points:
        return None
    axes = spec.odd_axis + width * np.arange(2 * spec.m)
    idx = np.round((axes + np.pi) / dx).astype(int) % n
    stretch = np.exp(-tracers.logjac[idx]) * dx
    active = stretch > WALL_STRETCH * width
    if not active.any():
        return None
    return (spec.odd_axis, width, active)


def _interp_disp(disp: np.ndarray, x, spec: SymmetrySpec, tracers=None) -> np.ndarray:
    return periodic_cubic(disp, x, walls=_walls(spec, len(disp), tracers))


def _fine_samples(profile: Profile, disp: np.ndarray, refine: int, spec: SymmetrySpec, tracers=None) -> np.ndarray:
    n = len(disp)
    tf = nodes(n * refine)
    dfine = _interp_disp(disp, tf, spec, tracers)
    return np.asarray(profile(tf + dfine), dtype=float)


def initial_state(profile, n: int, stepper: str = "pseudospectral-rk4", symmetry: SymmetrySpec = SymmetrySpec(),
                  dealias: bool = True, refine: int = 4, spectral_filter: bool = False, cfl: float = 0.5,
                  t0: float = 0.0) -> EulerState:
    """Build the state at t0 from a :class:`Profile`, a callable or an array of node samples."""
    if stepper not in STEPPERS:
        raise ValueError(f"unknown stepper {stepper!r}; choose from {STEPPERS}")
    if isinstance(profile, CircleField):
        profile = from_samples(profile.values)
    elif not isinstance(profile, Profile):
        if callable(profile):
            profile = Profile("callable", profile)
        else:
            profile = from_samples(np.asarray(profile, dtype=float))
    h = profile.sample(n)
    if stepper == "pseudospectral-rk4":
        h = project_symmetry(h, symmetry)
        if dealias:
            h = CircleField.from_spectrum(h.spectrum * dealias_mask(n))
        return EulerState(t0, h, symmetry, stepper, dealias, spectral_filter, cfl)

    disp = np.zeros(n)
    h_fine = _fine_samples(profile, disp, refine, symmetry)
    level = _velocity_from_samples(h_fine, t0)
    lag = LagrangianData(profile, refine, disp, level, (), h_fine)
    labels = nodes(n)
    if profile.deriv is not None:
        grad0 = np.abs(profile.deriv(labels))
    else:
        grad0 = np.abs(derivative(h).values)
    tr = Tracers(labels, labels.copy(), np.zeros(n), grad0)
    return EulerState(t0, make_field(h_fine[::refine]), symmetry, stepper, False, False, cfl, lag, tr)


# --------------------------------------------------------------------------- stepping

def max_speed(s: EulerState) -> float:
    if s.lagrangian is not None:
        return float(np.max(np.abs(s.lagrangian.level.u)))
    H = solve_stream_euler(s.h, warn=False)
    return 2.0 * float(np.max(np.abs(H.values)))


def admissible_dt(s: EulerState) -> float:
    return s.cfl * (2 * np.pi / s.n) / max(max_speed(s), EPS_FLOOR)


def _rk4_pseudospectral(s: EulerState, dt: float) -> EulerState:
    h = s.h
    k1 = rhs(h, s.dealias)
    k2 = rhs(h + 0.5 * dt * k1, s.dealias)
    k3 = rhs(h + 0.5 * dt * k2, s.dealias)
    k4 = rhs(h + dt * k3, s.dealias)
    c = h.spectrum + dt / 6.0 * (k1.spectrum + 2 * k2.spectrum + 2 * k3.spectrum + k4.spectrum)
    if s.dealias:
        c = c * dealias_mask(s.n)
    if s.spectral_filter:
        c = c * filter_weights(s.n)
    new = project_symmetry(CircleField.from_spectrum(c), s.symmetry)
    return replace(s, t=s.t + dt, h=new)


def _time_interpolant(levels):
    """Lagrange interpolation in time through the given velocity levels."""
    ts = [lv.t for lv in levels]

    def weights(t):
        w = []
        for i, ti in enumerate(ts):
            wi = 1.0
            for j, tj in enumerate(ts):
                if j != i:
                    wi *= (t - tj) / (ti - tj)
            w.append(wi)
        return w

    def fields_at(t):
        w = weights(t)
        u = sum(wi * lv.u for wi, lv in zip(w, levels))
        du = sum(wi * lv.du for wi, lv in zip(w, levels))
        return u, du

    return fields_at


def _trace(levels, theta, t_start, t_end, logjac=None):
    """RK4 for dx/dt = u(x, t) from t_start to t_end; optionally integrates du(x, t) as well."""
    at = _time_interpolant(levels)
    dt = t_end - t_start
    tm = t_start + 0.5 * dt
    u1, d1 = at(t_start)
    um, dm = at(tm)
    u2, d2 = at(t_end)
    k1 = periodic_cubic(u1, theta)
    x2 = theta + 0.5 * dt * k1
    k2 = periodic_cubic(um, x2)
    x3 = theta + 0.5 * dt * k2
    k3 = periodic_cubic(um, x3)
    x4 = theta + dt * k3
    k4 = periodic_cubic(u2, x4)
    out = theta + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if logjac is None:
        return out
    j1 = periodic_cubic(d1, theta)
    j2 = periodic_cubic(dm, x2)
    j3 = periodic_cubic(dm, x3)
    j4 = periodic_cubic(d2, x4)
    return out, logjac + dt / 6.0 * (j1 + 2 * j2 + 2 * j3 + j4)


def _extrapolate(levels, t):
    at = _time_interpolant(levels)
    u, du = at(t)
    return VelocityLevel(t, u, du, levels[-1].H)


def _step_semi_lagrangian(s: EulerState, dt: float, corrections: int = 2) -> EulerState:
    lag = s.lagrangian
    n = s.n
    theta = nodes(n)
    t0, t1 = s.t, s.t + dt
    history = list(lag.history) + [lag.level]
    new_level = _extrapolate(history, t1)
    for _ in range(corrections):
        levels = history + [new_level]
        foot = _trace(levels, theta, t1, t0)
        disp = foot + _interp_disp(lag.disp, foot, s.symmetry, s.tracers) - theta
        disp = symmetrize_nodes(disp, s.symmetry)
        h_fine = _fine_samples(lag.profile, disp, lag.refine, s.symmetry, s.tracers)
        new_level = _velocity_from_samples(h_fine, t1)

    levels = history + [new_level]
    tr = s.tracers
    phi, logjac = _trace(levels, tr.phi, t0, t1, logjac=tr.logjac)
    tracers = replace(tr, phi=phi, logjac=logjac)
    keep = tuple(history[-lag.time_order + 1:]) if lag.time_order > 1 else ()
    new_lag = replace(lag, disp=disp, level=new_level, history=keep, h_fine=h_fine)
    return replace(s, t=t1, h=make_field(h_fine[::lag.refine]), lagrangian=new_lag, tracers=tracers)


def step(s: EulerState, dt: float, check_cfl: bool = True) -> EulerState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if check_cfl:
        limit = admissible_dt(s)
        if dt > limit * (1 + 1e-12):
            raise StepRejected(dt, limit)
    if s.stepper == "semi-lagrangian":
        return _step_semi_lagrangian(s, dt)
    return _rk4_pseudospectral(s, dt)


# --------------------------------------------------------------------------- diagnostics

def _composite_sup(lag: LagrangianData, spec: SymmetrySpec, tracers=None) -> float:
    n = len(lag.disp)
    fine = np.abs(lag.h_fine)
    j = int(np.argmax(fine))
    m = fine.size
    t0 = -np.pi + 2 * np.pi * j / m
    dt = 2 * np.pi / m

    def neg(t):
        return -abs(float(lag.profile(t + _interp_disp(lag.disp, np.array([t]), spec, tracers)[0])))

    res = minimize_scalar(neg, bounds=(t0 - dt, t0 + dt), method="bounded", options={"xatol": 1e-14})
    return max(float(fine[j]), -float(res.fun))


def spectral_tail(h: CircleField, dealias: bool) -> float:
    band = tail_band(h.n_samples, dealias)
    return float(np.max(np.abs(h.spectrum[band]))) if band.any() else 0.0


def odd_axes(spec: SymmetrySpec) -> np.ndarray:
    """The 2m rays about which m-fold data odd about ``spec.odd_axis`` is odd."""
    if spec.odd_axis is None:
        return np.zeros(0)
    a = spec.odd_axis + np.pi / spec.m * np.arange(2 * spec.m)
    return np.mod(a + np.pi, 2 * np.pi) - np.pi


def _kink_correction(slopes: np.ndarray, spacing: float) -> float:
    """Trapezoid-rule defect of the integral of |h| across zeros of h sitting on nodes.

    |h| has a corner of size 2|h'| at each such zero, which costs spacing^2/6 * |h'|.
    """
    return float(spacing ** 2 / 6.0 * np.sum(np.abs(slopes)))


def diagnostics(s: EulerState) -> EulerDiagnostics:
    quarter = np.array([0.0, np.pi / 4])
    if s.lagrangian is not None:
        lag = s.lagrangian
        hf = lag.h_fine
        linf = _composite_sup(lag, s.symmetry, s.tracers)
        l1 = float(2 * np.pi * np.mean(np.abs(hf)))
        mean = float(np.mean(hf))
        hp = _fine_node_values(lag.level.du / 2.0, quarter)
        tr = s.tracers
        axes = odd_axes(s.symmetry)
        if axes.size:
            at_axis = np.isin(np.round((tr.labels + np.pi) * s.n / (2 * np.pi)).astype(int),
                              np.round((axes + np.pi) * s.n / (2 * np.pi)).astype(int) % s.n)
            l1 += _kink_correction(tr.grad0[at_axis] * np.exp(-tr.logjac[at_axis]), 2 * np.pi / hf.size)
        grad = float(np.max(tr.grad0 * np.exp(-tr.logjac)))
        tail = spectral_tail(make_field(hf), False)
    else:
        h = s.h
        linf = h.sup_norm()
        l1 = h.l1()
        axes = odd_axes(s.symmetry)
        if axes.size:
            l1 += _kink_correction(derivative(h).evaluate(axes), 2 * np.pi / (4 * s.n))
        mean = h.mean()
        grad = derivative(h).sup_norm()
        hp = derivative(solve_stream_euler(h, warn=False)).evaluate(quarter)
        tail = spectral_tail(h, s.dealias)
    return EulerDiagnostics(s.t, linf, l1, mean, grad, float(hp[0]), float(hp[1]), tail)


def _fine_node_values(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Values at points that coincide with grid nodes, else local cubic interpolation."""
    m = len(values)
    idx = (points + np.pi) * m / (2 * np.pi)
    exact = np.abs(idx - np.round(idx)) < 1e-9
    out = periodic_cubic(values, points)
    out[exact] = values[np.round(idx[exact]).astype(int) % m]
    return out


def sector_mass(d: EulerDiagnostics, m: int = 4) -> float:
    """Integral of h over [0, pi/m] for data that is odd and m-fold with h >= 0 on the sector."""
    return d.l1 / (2 * m)


# --------------------------------------------------------------------------- driver

@dataclass
class RunEvents:
    under_resolved_at: Optional[float] = None
    filter_active: bool = False
    steps: int = 0
    rejected: int = 0
    notes: list = field(default_factory=list)


def integrate(state: EulerState, t_end: float, dt: Optional[float] = None, sample_interval: Optional[float] = None,
              events: Optional[RunEvents] = None) -> Iterator:
    """Yield (state, diagnostics) at t = t0, t0 + sample_interval, ..., t_end.

    With ``dt`` None the step is CFL-adaptive; otherwise the fixed dt is clipped to land
    exactly on sample times.  Non-finite values abort with :class:`PhysicsAbort`.
    """
    events = events if events is not None else RunEvents()
    sample_interval = sample_interval or (t_end - state.t)
    t_start = state.t
    d = diagnostics(state)
    yield state, d
    k = 1
    while state.t < t_end - 1e-12:
        target = min(t_start + k * sample_interval, t_end)
        while state.t < target - 1e-12:
            limit = admissible_dt(state)
            h = limit if dt is None else dt
            h = min(h, target - state.t)
            try:
                new = step(state, h, check_cfl=dt is not None)
            except StepRejected:
                events.rejected += 1
                raise
            if not np.all(np.isfinite(new.h.values)):
                raise PhysicsAbort(f"non-finite values at t = {new.t:.6g}", last_state=state)
            state = new
            events.steps += 1
        d = diagnostics(state)
        if events.under_resolved_at is None and state.stepper == "pseudospectral-rk4" \
                and d.spectral_tail > 1e-3 * max(d.linf, EPS_FLOOR):
            events.under_resolved_at = state.t
        yield state, d
        k += 1


def run(cfg, events: Optional[RunEvents] = None) -> Iterator:
    """Run an Euler experiment described by an :class:`ExperimentConfig`-like object."""
    from .harness.presets import build_profile

    profile = build_profile(cfg)
    sym = SymmetrySpec(cfg.symmetry_m, cfg.odd_axis)
    state = initial_state(profile, cfg.n, cfg.stepper, sym, cfg.dealias, cfg.refine, cfg.spectral_filter, cfg.cfl)
    yield from integrate(state, cfg.t_end, cfg.dt, cfg.sample_interval, events)


# --------------------------------------------------------------------------- particle paths

def flow_trace(traj: Iterable, theta0: float, substeps: int = 4) -> dict:
    """Follow the particle starting at theta0 through stored snapshots.

    ``traj`` is a sequence of states (or (t, h) pairs).  The velocity 2H is linear in time
    between snapshots; RK4 with ``substeps`` per interval.  Returns times, the unwrapped
    path, the path reduced to [-pi, pi) and the winding count.
    """
    snaps = []
    for item in traj:
        if isinstance(item, tuple):
            item = item[0] if isinstance(item[0], EulerState) else item
        if isinstance(item, EulerState):
            t, h = item.t, item.h
            if item.lagrangian is not None:
                H = item.lagrangian.level.H
            else:
                H = solve_stream_euler(h, warn=False)
        else:
            t, h = item
            H = solve_stream_euler(h, warn=False)
        snaps.append((t, 2.0 * np.array(H.values)))
    times = [snaps[0][0]]
    x = float(theta0)
    path = [x]
    for (ta, ua), (tb, ub) in zip(snaps[:-1], snaps[1:]):
        dt = (tb - ta) / substeps

        def vel(xx, tt):
            w = (tt - ta) / (tb - ta)
            return float(periodic_cubic((1 - w) * ua + w * ub, np.array([xx]))[0])

        tt = ta
        for _ in range(substeps):
            k1 = vel(x, tt)
            k2 = vel(x + 0.5 * dt * k1, tt + 0.5 * dt)
            k3 = vel(x + 0.5 * dt * k2, tt + 0.5 * dt)
            k4 = vel(x + dt * k3, tt + dt)
            x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            tt += dt
        times.append(tb)
        path.append(x)
    path = np.array(path)
    reduced = np.mod(path + np.pi, 2 * np.pi) - np.pi
    winding = np.floor((path + np.pi) / (2 * np.pi)).astype(int)
    return {"t": np.array(times), "unwrapped": path, "theta": reduced, "winding": winding}
