"""Execute one configured experiment into a run directory."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import euler1d, lift2d, pointvortex, sqg1d
from ..kernels import solve_stream_euler
from .config import ConfigError, ExperimentConfig
from .io import RunDirectory, output_root
from .presets import Preset, build_profile

FIXED_POINT = (np.pi / 6, np.pi / 6)
FIXED_POINT_RADIUS = 1e-4
EXACT_STATIONARY_TOL = 1e-12


@dataclass
class RunResult:
    path: Path
    status: str
    summary: dict
    fit: Optional[object] = None
    series: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def line(self, cfg: ExperimentConfig) -> str:
        keys = [k for k in ("verdict", "period", "fixed_point", "exponent", "rate", "measured_speed",
                            "blowup_time_estimate", "t_final") if k in self.summary]
        parts = [f"{k}={self.summary[k]:.6g}" if isinstance(self.summary[k], float) else f"{k}={self.summary[k]}"
                 for k in keys]
        return f"{cfg.name} [{cfg.model}] {self.status} " + " ".join(parts) + f" -> {self.path}"


def _collect(series: dict, names, values) -> None:
    for k, v in zip(names, values):
        series.setdefault(k, []).append(v)


def _stream(rd: RunDirectory, traj, columns, extras: dict, series: dict):
    """Write each diagnostics row; returns the last (state, diagnostics) seen."""
    rd.start_trajectory(columns)
    last = None
    for state, d in traj:
        row = d.row()
        rd.write_row(row)
        _collect(series, columns, row)
        for name, fn in extras.items():
            series.setdefault(name, []).append(fn(state, d))
        last = (state, d)
    return last


def _run_euler(cfg, rd, extras, series, summary, warnings):
    events = euler1d.RunEvents()
    last = _stream(rd, euler1d.run(cfg, events), euler1d.EulerDiagnostics.columns(), extras, series)
    summary.update(t_final=last[1].t, steps=events.steps, grad_linf_final=last[1].grad_linf)
    if events.under_resolved_at is not None:
        warnings.append(f"spectral tail above 1e-3 of the sup norm from t = {events.under_resolved_at:.6g}")
        summary["under_resolved_at"] = events.under_resolved_at


def _run_sqg(cfg, rd, extras, series, summary, warnings):
    monitor = sqg1d.BlowupMonitor(cfg.blowup_threshold, cfg.tail_limit)
    last = _stream(rd, sqg1d.run_sqg(cfg, monitor), sqg1d.SQGDiagnostics.columns(), extras, series)
    summary.update(t_final=last[1].t, verdict=monitor.verdict, bkm_integral=monitor.bkm_integral)
    if monitor.verdict == "under-resolved":
        warnings.append(f"spectral tail ratio reached {monitor.tail_ratio:.3g} at t = {last[1].t:.6g}")


def _thin(n_steps_total: int, dt: float, interval: Optional[float]) -> int:
    if interval is None:
        return max(n_steps_total // 100, 1)
    return max(int(round(interval / dt)), 1)


def _run_vortex(cfg, rd, extras, series, summary, warnings):
    dt = cfg.dt or 1e-3
    weights = cfg.weights or tuple(1.0 for _ in cfg.theta)
    v = pointvortex.VortexSystem.make(cfg.theta, weights)
    every = _thin(int(round(cfg.t_end / dt)), dt, cfg.sample_interval)
    t, th = pointvortex.integrate_vortices(v, cfg.t_end, dt, sample_every=every)
    cols = ["t"] + [f"theta{i + 1}" for i in range(v.n)]
    rd.start_trajectory(cols)
    for ti, row in zip(t, th):
        rd.write_row([ti, *row])
    series.update(t=np.asarray(t), theta=np.asarray(th))
    summary.update(t_final=float(t[-1]), gaps_initial=list(np.diff(th[0])), gaps_final=list(np.diff(th[-1])))


def _run_gap3(cfg, rd, extras, series, summary, warnings):
    dt = cfg.dt or 1e-3
    z0 = (cfg.z1, cfg.z2)
    try:
        pointvortex.gap_rhs(*z0)
    except pointvortex.DomainError as exc:
        raise ConfigError("z1", f"start point outside the gap triangle: {exc}") from None
    orbit = pointvortex.integrate_gaps(z0, cfg.t_end, dt)
    dist = float(np.hypot(cfg.z1 - FIXED_POINT[0], cfg.z2 - FIXED_POINT[1]))
    if dist <= FIXED_POINT_RADIUS:
        res = pointvortex.PeriodResult(0.0, fixed_point=True, closure=0.0)
        if dist > EXACT_STATIONARY_TOL:
            warnings.append(f"start is {dist:.3g} from (pi/6, pi/6); reported as the stationary point")
    else:
        res = pointvortex.detect_period(orbit)
    every = _thin(len(orbit.t) - 1, dt, cfg.sample_interval)
    rd.start_trajectory(["t", "z1", "z2", "E"])
    energy = orbit.energy
    for i in range(0, len(orbit.t), every):
        rd.write_row([orbit.t[i], orbit.z[i, 0], orbit.z[i, 1], energy[i]])
    series.update(t=orbit.t, z=orbit.z, energy=energy)
    summary.update(t_final=float(orbit.t[-1]), period=res.period, fixed_point=res.fixed_point,
                   energy=float(energy[0]), energy_drift=float(np.max(np.abs(energy - energy[0]))))


def _run_lift(cfg, rd, extras, series, summary, warnings, records):
    h = build_profile(cfg).sample(cfg.n)
    H = solve_stream_euler(h, warn=False)
    cols = ["x1", "x2", "omega", "u1", "u2", "psi"]
    rd.start_trajectory(cols)
    for r, th in cfg.points:
        p = lift2d.PlanePoint(r, th)
        rec = lift2d.lift_euler(h, p, H).record(p)
        rd.write_row([rec[c] for c in cols])
        records.append(rec)
    summary.update(n_points=len(records))


def _run_kernel_decay(cfg, rd, extras, series, summary, warnings):
    cols = ["m", "ratio", "decay_ratio_max", "far_field_integral"]
    rd.start_trajectory(cols)
    for m in cfg.m_values:
        for q in cfg.ratios:
            row = [m, q, float(lift2d.decay_ratio(m, q, seed=cfg.seed).max()), lift2d.far_field_integral(m, q)]
            rd.write_row(row)
            _collect(series, cols, row)
    summary.update(rows=len(series.get("m", [])))


def execute(cfg: ExperimentConfig, preset: Optional[Preset] = None, root=None) -> RunResult:
    """Run ``cfg``; physics aborts still publish the directory with status physics-abort."""
    extras = preset.extras(cfg) if preset is not None and preset.extras is not None else {}
    series, summary, warnings, records = {}, {}, [], []
    root = Path(root) if root is not None else output_root(cfg.output_dir)
    status, fit = "ok", None
    with RunDirectory(root, cfg.name, cfg.digest()) as rd:
        rd.write_config(cfg.echo())
        try:
            if cfg.model == "euler1d":
                _run_euler(cfg, rd, extras, series, summary, warnings)
            elif cfg.model in ("sqg-exact", "sqg-approx", "degregorio"):
                _run_sqg(cfg, rd, extras, series, summary, warnings)
            elif cfg.model == "vortex":
                _run_vortex(cfg, rd, extras, series, summary, warnings)
            elif cfg.model == "gap3":
                _run_gap3(cfg, rd, extras, series, summary, warnings)
            elif cfg.model == "lift-query":
                _run_lift(cfg, rd, extras, series, summary, warnings, records)
            else:
                _run_kernel_decay(cfg, rd, extras, series, summary, warnings)
        except (euler1d.PhysicsAbort, pointvortex.OrderingError, pointvortex.DomainError) as exc:
            status = "physics-abort"
            summary["abort"] = str(exc)
            last = getattr(exc, "last_state", None)
            if last is not None:
                field_ = last.h if hasattr(last, "h") else last.g
                summary["last_good_state"] = {"t": last.t, "values": list(field_.values)}
            if not rd.columns:
                rd.start_trajectory(["t"])
        except euler1d.StepRejected as exc:
            raise ConfigError("dt", str(exc)) from exc
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("config", str(exc)) from exc
        series = {k: (v if k == "verdict" else np.asarray(v)) for k, v in series.items()}
        if status == "ok" and preset is not None and preset.analyze is not None:
            fit, extra = preset.analyze(cfg, series)
            summary.update(extra)
            if fit is not None:
                rd.write_fit(fit)
        path = rd.finish(cfg.model, status, summary, warnings)
    return RunResult(path, status, summary, fit, series, records)


def records_json(records) -> str:
    return "\n".join(json.dumps(r) for r in records)
