import json
import os
from pathlib import Path

import numpy as np
import pytest

from fluids1d.harness.cli import EXIT_CONFIG, EXIT_OK, EXIT_PHYSICS, run_cli
from fluids1d.harness.config import ConfigError, ExperimentConfig, load_config, parse_config
from fluids1d.harness.fitting import FitError, default_window, fit_exponential, fit_power
from fluids1d.harness.io import (
    FIT_FILE,
    ManifestError,
    OUTPUT_ENV,
    RunDirectory,
    read_trajectory,
    validate_manifest,
    validate_run_dir,
)
from fluids1d.harness.presets import build_profile, get_preset, preset_theorem_growth
from fluids1d.harness.runner import execute


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    return tmp_path / "runs"


def run_dirs(root):
    return sorted(p for p in Path(root).iterdir() if not p.name.startswith("."))


# --------------------------------------------------------------------------- config

def test_config_round_trip_and_types():
    cfg = parse_config("""
        # smooth data
        model = euler1d
        n = 128
        t_end = 2.5
        dealias = false
        odd_axis = 0.0
        ic = modes
        ic.cos4 = 0.2
        ic.const = 1
    """)
    assert cfg.n == 128 and cfg.t_end == 2.5 and cfg.dealias is False and cfg.odd_axis == 0.0
    assert cfg.ic_params == {"cos4": 0.2, "const": 1.0}
    assert parse_config(cfg.echo()) == cfg
    assert parse_config(cfg.echo()).digest() == cfg.digest()


@pytest.mark.parametrize("text, field", [
    ("bogus = 1", "bogus"),
    ("n = twelve", "n"),
    ("n = 7", "n"),
    ("model = navier-stokes", "model"),
    ("t_end = -1", "t_end"),
    ("n = 64\nn = 128", "n"),
    ("dealias = maybe", "dealias"),
    ("ic.cos4 = big", "ic.cos4"),
    ("model = degregorio", "a"),
    ("ic = bump\nic.epsilon = 0.3", "ic.epsilon"),
    ("model = vortex", "theta"),
    ("just some words", "just some words"),
])
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field
    assert field in str(info.value)


def test_config_lists_and_points():
    cfg = parse_config("model = lift-query\npoints = 1:0.5, 2.0:-1\nm_values = 3, 4\nratios = 2, 10")
    assert cfg.points == ((1.0, 0.5), (2.0, -1.0))
    assert cfg.m_values == (3, 4) and cfg.ratios == (2.0, 10.0)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_build_profile_presets():
    cfg = ExperimentConfig(ic="bump", ic_params={"epsilon": 0.1}, symmetry_m=4, odd_axis=0.0)
    p = build_profile(cfg)
    th = np.linspace(0, np.pi / 4, 101)
    assert np.all(p(th)[th >= 0.1] == 0) and np.all(p(th)[(th > 0) & (th < 0.1)] > 0)
    with pytest.raises(ConfigError):
        build_profile(ExperimentConfig(ic="fractal"))
    with pytest.raises(ConfigError):
        build_profile(ExperimentConfig(ic="modes"))
    with pytest.raises(ConfigError):
        build_profile(ExperimentConfig(ic="modes", ic_params={"tan3": 1.0}))


# --------------------------------------------------------------------------- fitting

def test_fit_power_exact():
    t = np.linspace(1, 10, 40)
    r = fit_power(t, t ** 2, window=(1, 10))
    assert r.exponent_or_rate == pytest.approx(2.0, abs=1e-6) and r.r_squared == pytest.approx(1.0)
    assert r.kind == "power" and r.window == (1.0, 10.0)


def test_fit_exponential_exact():
    t = np.linspace(0, 5, 30)
    r = fit_exponential(t, 3 * np.exp(0.7 * t), window=(0, 5))
    assert r.exponent_or_rate == pytest.approx(0.7, abs=1e-6)
    assert r.prefactor == pytest.approx(3.0, rel=1e-9)
    assert 0 <= r.r_squared <= 1


def test_fit_errors_and_default_window():
    t = np.linspace(0, 9, 30)
    with pytest.raises(FitError):
        fit_exponential(t, np.exp(t) - 2, window=(0, 9))
    with pytest.raises(FitError):
        fit_exponential(t[:8], np.exp(t[:8]))
    with pytest.raises(FitError):
        fit_exponential(t, np.exp(t), window=(-1, 9))
    lo, hi = default_window(t, np.exp(t))
    assert lo == pytest.approx(6.0) and hi == 9.0
    # a late first doubling moves the window start
    dense = np.linspace(0, 9, 300)
    v = np.where(dense < 8, 1.0, 3.0)
    assert default_window(dense, v)[0] == pytest.approx(dense[dense >= 8][0])
    # too few samples after the doubling: fall back to the last ten
    v = np.where(t < 8, 1.0, 3.0)
    assert default_window(t, v)[0] == t[-10]


def test_fit_power_with_shifted_abscissa():
    t = np.linspace(0, 20, 60)
    s = 0.5 * t + 1
    r = fit_power(t, 4 * s ** 1.5, abscissa=s, variable="s")
    assert r.exponent_or_rate == pytest.approx(1.5, abs=1e-9) and r.variable == "s"


# --------------------------------------------------------------------------- run directories

def test_run_directory_contents_and_schema(out):
    cfg = parse_config("ic.cos4 = 0.2\nic.const = 1\nn = 32\nt_end = 0.5\nsample_interval = 0.1")
    res = execute(cfg, root=out)
    assert res.status == "ok"
    m = validate_run_dir(res.path)
    assert m["schema_version"] == 1
    assert m["columns"] == ["t", "linf", "l1", "mean", "grad_linf", "hprime0", "hprime_quarter", "spectral_tail"]
    assert sorted(os.listdir(res.path)) == ["config.txt", "manifest.json", "trajectory.csv"]
    assert parse_config((res.path / "config.txt").read_text()) == cfg
    tr = read_trajectory(res.path)
    assert np.allclose(tr["t"], [0, 0.1, 0.2, 0.3, 0.4, 0.5])
    assert run_dirs(out) == [res.path] and not [p for p in out.iterdir() if p.name.startswith(".")]


def test_identical_configs_give_identical_csv(out):
    cfg = parse_config("ic.cos4 = 0.3\nic.sin8 = 0.1\nn = 64\nt_end = 1\nsample_interval = 0.2")
    a, b = execute(cfg, root=out), execute(cfg, root=out)
    assert a.path != b.path and b.path.name.endswith("-2")
    assert (a.path / "trajectory.csv").read_bytes() == (b.path / "trajectory.csv").read_bytes()


def test_output_env_overrides_configured_root(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    cfg = parse_config(f"model = kernel-decay\nm_values = 3\nratios = 5\noutput_dir = {tmp_path / 'cfg'}")
    res = execute(cfg)
    assert res.path.parent == tmp_path / "env"


def test_failed_run_leaves_no_directory(out):
    cfg = parse_config("ic.cos4 = 1\nn = 32\nt_end = 1\ndt = 10")
    with pytest.raises(ConfigError):
        execute(cfg, root=out)
    assert list(out.iterdir()) == []


def test_manifest_validation_rejects_bad_documents(out):
    res = execute(parse_config("model = kernel-decay\nm_values = 3\nratios = 5"), root=out)
    m = json.loads((res.path / "manifest.json").read_text())
    for mutate in (lambda d: d.pop("columns"), lambda d: d.update(schema_version=2),
                   lambda d: d.update(status="great"), lambda d: d.update(extra=1)):
        bad = dict(m)
        mutate(bad)
        with pytest.raises(ManifestError):
            validate_manifest(bad)
    (res.path / "stray.txt").write_text("x")
    with pytest.raises(ManifestError):
        validate_run_dir(res.path)


def test_scratch_directory_is_removed_on_error(out):
    with pytest.raises(RuntimeError):
        with RunDirectory(out, "x", "0") as rd:
            rd.write_config("n = 8\n")
            raise RuntimeError("boom")
    assert list(out.iterdir()) == []


# --------------------------------------------------------------------------- presets

def test_growth_preset_rejects_wide_bumps():
    with pytest.raises(ConfigError):
        preset_theorem_growth(0.3)
    with pytest.raises(ConfigError):
        preset_theorem_growth(0.0)
    cfg = preset_theorem_growth(0.1)
    assert cfg.n >= 512 and cfg.t_end == 50 and cfg.stepper == "semi-lagrangian"


def test_growth_preset_at_narrow_width(out):
    res = execute(preset_theorem_growth(0.05), get_preset("thm-growth"), out)
    assert 1.97 <= res.fit.exponent_or_rate <= 2.06
    assert res.summary["mass_in_bracket"] and res.summary["mass_strictly_decreasing"]
    validate_run_dir(res.path)


def test_rotating_pattern_reports_speed(out):
    res = execute(get_preset("rotating-pattern").build(t_end=1.0, n=256), get_preset("rotating-pattern"), out)
    assert res.summary["measured_speed"] == pytest.approx(0.25, abs=1e-3)
    assert res.fit is None and not (res.path / FIT_FILE).exists()


# --------------------------------------------------------------------------- command line

def test_cli_growth_preset_writes_csv_and_fit(out, capsys):
    assert run_cli(["preset", "thm-growth", "--epsilon", "0.1", "-o", str(out)]) == EXIT_OK
    (path,) = run_dirs(out)
    m = validate_run_dir(path)
    assert FIT_FILE in m["files"]
    fit = json.loads((path / FIT_FILE).read_text())
    assert fit["kind"] == "power" and 1.86 <= fit["exponent_or_rate"] <= 2.27
    assert "thm-growth" in capsys.readouterr().out


def test_cli_gap3_fixed_point(out, capsys):
    assert run_cli(["gap3", "--z1", "0.5236", "--z2", "0.5236", "--t-end", "2", "-o", str(out)]) == EXIT_OK
    line = capsys.readouterr().out
    assert "fixed_point=True" in line and "period=0" in line
    (path,) = run_dirs(out)
    assert json.loads((path / "manifest.json").read_text())["summary"]["period"] == 0.0


def test_cli_gap3_periodic_orbit(out, capsys):
    assert run_cli(["gap3", "--z1", "0.3", "--z2", "0.5", "--t-end", "20", "-o", str(out)]) == EXIT_OK
    assert "fixed_point=False" in capsys.readouterr().out


def test_cli_malformed_config_exits_3(out, tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("n = 64\nsample_intervall = 0.1\n")
    assert run_cli(["euler1d", "-c", str(bad), "-o", str(out)]) == EXIT_CONFIG
    assert "sample_intervall" in capsys.readouterr().err
    assert run_cli(["preset", "thm-growth", "--epsilon", "0.3", "-o", str(out)]) == EXIT_CONFIG
    assert run_cli(["euler1d", "--n", "many"]) == EXIT_CONFIG
    assert run_cli(["preset", "thm-boundary", "--epsilon", "0.1"]) == EXIT_CONFIG


def test_cli_physics_abort_exits_2(out):
    code = run_cli(["vortex", "--theta", "0.1,0.100000001", "-s", "weights=1,-50", "--dt", "0.01",
                    "--t-end", "1", "-o", str(out)])
    assert code == EXIT_PHYSICS
    (path,) = run_dirs(out)
    m = validate_run_dir(path)
    assert m["status"] == "physics-abort" and "ordering" in m["summary"]["abort"]


def test_cli_nan_data_aborts_with_last_state(out):
    assert run_cli(["euler1d", "-s", "ic=constant", "-s", "ic.c=nan", "--n", "16", "-o", str(out)]) == EXIT_PHYSICS
    (path,) = run_dirs(out)
    m = validate_run_dir(path)
    assert m["summary"]["last_good_state"]["t"] == 0.0


def test_cli_lift_emits_json_records(out, capsys):
    assert run_cli(["lift", "-s", "ic=constant", "-s", "ic.c=1", "--points", "1:0.3,2:1.0", "-o", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    recs = [json.loads(s) for s in lines[:2]]
    assert set(recs[0]) == {"x1", "x2", "omega", "u1", "u2", "psi"}
    for r in recs:
        assert r["u1"] == pytest.approx(-r["x2"] / 2, abs=1e-12)
        assert r["u2"] == pytest.approx(r["x1"] / 2, abs=1e-12)


def test_cli_kernel_decay_csv(out):
    assert run_cli(["kernel-decay", "--m", "2,3", "--ratios", "10,1000", "-o", str(out)]) == EXIT_OK
    (path,) = run_dirs(out)
    tr = read_trajectory(path)
    assert list(tr["m"]) == [2, 2, 3, 3]
    assert tr["far_field_integral"][1] > 10 * tr["far_field_integral"][3]


def test_cli_sqg_variants(out):
    assert run_cli(["sqg", "-s", "ic.sin2=1", "--n", "64", "--t-end", "0.2", "-o", str(out)]) == EXIT_OK
    assert run_cli(["sqg", "--variant", "approx", "-s", "ic.sin2=1", "--n", "64", "--t-end", "0.2",
                    "-o", str(out)]) == EXIT_OK
    models = sorted(json.loads((p / "manifest.json").read_text())["model"] for p in run_dirs(out))
    assert models == ["sqg-approx", "sqg-exact"]
    # the exact model rejects data with a k = 1 mode
    assert run_cli(["sqg", "-s", "ic.sin1=1", "--n", "64", "-o", str(out)]) == EXIT_CONFIG


def test_cli_sweep_one_directory_per_run(out, tmp_path):
    for i, k in enumerate((4, 8)):
        (tmp_path / f"c{i}.cfg").write_text(f"name = sw{i}\nic.cos{k} = 0.1\nic.const = 1\nn = 64\nt_end = 0.5\n")
    assert run_cli(["sweep", str(tmp_path / "*.cfg"), "-j", "2", "-o", str(out)]) == EXIT_OK
    dirs = run_dirs(out)
    assert [p.name.split("-")[0] for p in dirs] == ["sw0", "sw1"]
    for p in dirs:
        validate_run_dir(p)
    (tmp_path / "c2.cfg").write_text("n = 3\n")
    assert run_cli(["sweep", str(tmp_path / "*.cfg"), "-o", str(out)]) == EXIT_CONFIG
    assert run_cli(["sweep", str(tmp_path / "none*.cfg")]) == EXIT_CONFIG
