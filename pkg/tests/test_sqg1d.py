import numpy as np
import pytest

from fluids1d.circle_field import PreconditionError, SymmetrySpec, make_field, nodes, project_symmetry
from fluids1d.euler1d import PhysicsAbort
from fluids1d.sqg1d import (
    BlowupMonitor,
    SQGDiagnostics,
    blowup_time_estimate,
    initial_sqg_state,
    integrate_sqg,
    rhs_degregorio,
    rhs_sqg_approx,
    rhs_sqg_exact,
    step_sqg,
    tail_ratio,
)


def field(func, n=64):
    return make_field(func(nodes(n)))


def test_zero_is_steady():
    z = make_field(np.zeros(64))
    assert np.all(rhs_sqg_exact(z).values == 0)
    assert np.all(rhs_degregorio(z, 1.3).values == 0)


def test_exact_rhs_sin2():
    g = field(lambda t: np.sin(2 * t))
    r = rhs_sqg_exact(g)
    assert np.max(np.abs(r.values + np.sin(4 * g.theta) / 4)) < 1e-10


def test_exact_rhs_general_alpha_needs_a_solver():
    g = field(lambda t: np.sin(2 * t))
    with pytest.raises(ValueError):
        rhs_sqg_exact(g, alpha=0.3)
    # with alpha = 1 only the transport term remains
    r = rhs_sqg_exact(g, alpha=1.0, solve=lambda f: f)
    assert np.max(np.abs(r.values - 2 * np.sin(2 * g.theta) * 2 * np.cos(2 * g.theta))) < 1e-12


def test_degregorio_a0_example():
    f = field(lambda t: np.cos(t))
    r = rhs_degregorio(f, 0.0)
    # the stretching term is -H(f) f with H(cos) = sin
    assert np.max(np.abs(r.values + np.sin(2 * f.theta) / 2)) < 1e-12


def test_degregorio_a2_is_the_approximate_model():
    rng = np.random.default_rng(3)
    for _ in range(5):
        c = rng.standard_normal(6)
        g = field(lambda t: sum(c[j] * np.sin(2 * (j + 1) * t) for j in range(6)), 128)
        assert np.max(np.abs(rhs_degregorio(g, 2.0).values - rhs_sqg_approx(g).values)) <= 1e-12


def test_degregorio_removes_mean():
    f = field(lambda t: 0.7 + np.cos(t))
    g = field(lambda t: np.cos(t))
    assert np.max(np.abs(rhs_degregorio(f, 1.0).values - rhs_degregorio(g, 1.0).values)) < 1e-14


def test_exact_state_precondition():
    with pytest.raises(PreconditionError):
        initial_sqg_state(field(lambda t: np.cos(t)), "sqg-exact", symmetry=SymmetrySpec())
    with pytest.raises(ValueError):
        initial_sqg_state(field(np.sin), "degregorio")
    with pytest.raises(ValueError):
        initial_sqg_state(field(np.sin), "sqg")


def test_odd_symmetry_preserved_by_unprojected_step():
    g = field(lambda t: np.sin(2 * t) + 0.3 * np.sin(4 * t), 128)
    s = initial_sqg_state(g, "sqg-exact")
    s1 = step_sqg(s, 1e-2, project=False)
    even = s1.g - project_symmetry(s1.g, SymmetrySpec(1, 0.0))
    assert np.max(np.abs(even.values)) <= 1e-12
    res = s1.g.values - project_symmetry(s1.g, s.symmetry).values
    assert np.max(np.abs(res)) <= 1e-10


def test_exact_modes_stay_empty():
    s = initial_sqg_state(field(lambda t: np.sin(2 * t) + 0.2 * np.sin(6 * t), 128), "sqg-exact")
    for st, _ in integrate_sqg(s, 0.5, sample_interval=0.1):
        c = st.g.spectrum
        assert max(abs(c[0]), abs(c[1]), abs(c[-1])) <= 1e-10


def test_rk4_self_convergence_order():
    res = []
    for nsteps in (100, 200, 400, 800):
        s = initial_sqg_state(field(lambda t: np.sin(2 * t), 512), "sqg-exact")
        for _ in range(nsteps):
            s = step_sqg(s, 1.0 / nsteps)
        res.append(np.array(s.g.values))
    e = [np.max(np.abs(a - b)) for a, b in zip(res[:-1], res[1:])]
    slopes = np.log2(np.array(e[:-1]) / np.array(e[1:]))
    assert np.all(np.abs(slopes - 4.0) <= 0.1), slopes


def test_time_reversibility():
    s0 = initial_sqg_state(field(lambda t: np.sin(2 * t) + 0.3 * np.sin(4 * t), 256), "sqg-exact")
    s = s0
    for _ in range(200):
        s = step_sqg(s, 1e-3)
    for _ in range(200):
        s = step_sqg(s, -1e-3)
    assert np.max(np.abs(s.g.values - s0.g.values)) <= 1e-7


def test_exact_run_is_resolved_with_monotone_bkm():
    m = BlowupMonitor()
    s = initial_sqg_state(field(lambda t: np.sin(2 * t), 512), "sqg-exact")
    tr = list(integrate_sqg(s, 1.0, sample_interval=0.1, monitor=m))
    assert m.verdict == "resolved"
    assert tr[-1][0].t == pytest.approx(1.0)
    bkm = [d.bkm_integral for _, d in tr]
    assert np.all(np.diff(bkm) >= 0) and np.all(np.isfinite(bkm))


def ccf_run(n, threshold=20.0):
    m = BlowupMonitor(threshold=threshold)
    s = initial_sqg_state(field(np.sin, n), "degregorio", a=-1.0)
    tr = list(integrate_sqg(s, 5.0, sample_interval=0.01, monitor=m))
    t = np.array([d.t for _, d in tr])
    g = np.array([d.grad_linf for _, d in tr])
    return m, t, g


def test_ccf_blowup_consistent_across_resolutions():
    estimates = []
    for n in (256, 512, 1024):
        m, t, g = ccf_run(n)
        assert m.verdict == "suspected-blowup"
        assert t[-1] < 5.0
        estimates.append(blowup_time_estimate(t, g))
    estimates = np.array(estimates)
    assert np.ptp(estimates) <= 0.1 * estimates.mean()
    assert np.all(estimates > 0.84)


def test_monitor_flags_under_resolution_first():
    m = BlowupMonitor(threshold=1e6)
    s = initial_sqg_state(field(np.sin, 64), "degregorio", a=-1.0)
    list(integrate_sqg(s, 5.0, sample_interval=0.05, monitor=m))
    assert m.verdict == "under-resolved"


def test_degregorio_a2_smooth_small_data_records_only():
    m = BlowupMonitor()
    s = initial_sqg_state(field(lambda t: 0.1 * np.sin(2 * t), 128), "degregorio", a=2.0)
    tr = list(integrate_sqg(s, 10.0, sample_interval=1.0, monitor=m))
    assert m.verdict in ("resolved", "suspected-blowup", "under-resolved")
    assert all(np.isfinite(d.grad_linf) for _, d in tr)


@pytest.mark.xfail(strict=True, reason="the exact and approximate models already differ by about 0.12 at t = 0.5 for sin(2 theta)")
def test_variant_agreement_bound():
    g0 = field(lambda t: np.sin(2 * t), 256)
    a = list(integrate_sqg(initial_sqg_state(g0, "sqg-exact"), 0.5, sample_interval=0.05))
    b = list(integrate_sqg(initial_sqg_state(g0, "sqg-approx", symmetry=SymmetrySpec(2, 0.0)), 0.5,
                           sample_interval=0.05))
    diff = max(np.max(np.abs(x[0].g.values - y[0].g.values)) for x, y in zip(a, b))
    assert diff <= 0.05


def test_variants_agree_to_first_order_in_the_multiplier_gap():
    # the right-hand sides differ only through G + |nabla|^-1 g, whose multiplier gap on
    # |k| = 2 is 1/2 - 1/4 = 1/4, so the early-time difference grows like t times that gap
    g0 = field(lambda t: np.sin(2 * t), 256)
    a = initial_sqg_state(g0, "sqg-exact")
    b = initial_sqg_state(g0, "sqg-approx", symmetry=SymmetrySpec(2, 0.0))
    ra, rb = rhs_sqg_exact(a.g), rhs_sqg_approx(b.g)
    # exact: -sin(4t)/4; approximate: -2(sin2t/2)(2cos2t) - (-cos2t)(sin2t) = -sin(4t)/2
    assert np.max(np.abs(ra.values + np.sin(4 * g0.theta) / 4)) < 1e-12
    assert np.max(np.abs(rb.values + np.sin(4 * g0.theta) / 2)) < 1e-12


def test_tail_ratio_and_columns():
    assert tail_ratio(make_field(np.zeros(64))) == 0.0
    g = field(lambda t: np.sin(2 * t) + 1e-3 * np.sin(20 * t), 64)
    assert tail_ratio(g) == pytest.approx(1e-6 / (1 + 1e-6), rel=1e-9)
    assert SQGDiagnostics.columns()[-3:] == ["bkm_integral", "tail_ratio", "verdict"]


def test_blowup_estimate_on_synthetic_power_law():
    t = np.linspace(0, 0.9, 50)
    assert blowup_time_estimate(t, 3.0 / (1.0 - t) ** 1.5) == pytest.approx(1.0, abs=1e-6)


def test_nan_aborts():
    s = initial_sqg_state(field(np.sin, 64), "degregorio", a=-1.0)
    bad = s.__class__(0.0, make_field(np.full(64, np.nan)), "degregorio", -1.0)
    with pytest.raises(PhysicsAbort):
        list(integrate_sqg(bad, 1.0, dt=0.1))
