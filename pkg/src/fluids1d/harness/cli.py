"""Command-line entry point ``fluids1d``.

Exit codes: 0 success, 2 physics abort (non-finite values, vortex ordering or domain
violations), 3 configuration error.
"""
from __future__ import annotations

import argparse
import glob
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .presets import PRESETS, get_preset
from .runner import execute, records_json

EXIT_OK, EXIT_PHYSICS, EXIT_CONFIG = 0, 2, 3

MODEL_COMMANDS = {
    "euler1d": "euler1d",
    "sqg": None,             # sqg-exact or sqg-approx from --variant
    "degregorio": "degregorio",
    "vortex": "vortex",
    "gap3": "gap3",
    "lift": "lift-query",
    "kernel-decay": "kernel-decay",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", help="flat key = value config file")
    p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("-o", "--output", help="output root (takes precedence over FLUIDS_OUTPUT_DIR)")
    p.add_argument("--name", help="run name")
    p.add_argument("--n", type=int, help="grid size")
    p.add_argument("--t-end", type=float, help="final time")
    p.add_argument("--dt", type=float, help="fixed time step (default: CFL-adaptive)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fluids1d", description="Reduced 1D models of scale-invariant 2D flows.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in MODEL_COMMANDS:
        p = sub.add_parser(cmd, help=f"run the {cmd} model")
        _common(p)
        if cmd == "sqg":
            p.add_argument("--variant", choices=["exact", "approx"], default="exact")
        if cmd == "degregorio":
            p.add_argument("--a", type=float, help="model parameter a")
        if cmd == "vortex":
            p.add_argument("--theta", help="comma-separated initial angles")
            p.add_argument("--weights", help="comma-separated weights")
        if cmd == "gap3":
            p.add_argument("--z1", type=float)
            p.add_argument("--z2", type=float)
        if cmd == "lift":
            p.add_argument("--points", help="comma-separated r:theta query points")
        if cmd == "kernel-decay":
            p.add_argument("--m", help="comma-separated symmetry orders")
            p.add_argument("--ratios", help="comma-separated |y|/|x| values")
    p = sub.add_parser("preset", help="run a named experiment preset")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("-o", "--output")
    p.add_argument("--n", type=int)
    p.add_argument("--t-end", type=float)
    p.add_argument("--epsilon", type=float, help="bump width (thm-growth)")
    p.add_argument("--c1", type=float, help="pattern value (rotating-pattern)")
    p.add_argument("--c2", type=float, help="pattern value (rotating-pattern)")
    p.add_argument("--threshold", type=float, help="gradient growth threshold (ccf-blowup)")
    p = sub.add_parser("sweep", help="run every config file matching a glob")
    p.add_argument("pattern")
    p.add_argument("-o", "--output")
    p.add_argument("-j", "--jobs", type=int, default=1, help="concurrent runs")
    return parser


def _overrides(args) -> dict:
    raw = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(key or "--set", "expected KEY=VALUE")
        raw[key.strip()] = value.strip()
    model = MODEL_COMMANDS[args.command]
    if args.command == "sqg":
        model = f"sqg-{args.variant}"
    raw["model"] = model
    flags = {"name": args.name, "n": args.n, "t_end": args.t_end, "dt": args.dt,
             "a": getattr(args, "a", None), "theta": getattr(args, "theta", None),
             "weights": getattr(args, "weights", None), "z1": getattr(args, "z1", None),
             "z2": getattr(args, "z2", None), "points": getattr(args, "points", None),
             "m_values": getattr(args, "m", None), "ratios": getattr(args, "ratios", None)}
    for key, value in flags.items():
        if value is not None:
            raw[key] = str(value)
    if "name" not in raw:
        raw["name"] = args.command
    return raw


def _model_config(args) -> ExperimentConfig:
    raw = _overrides(args)
    if args.config:
        return load_config(args.config, raw)
    return parse_config("", raw)


def _preset_config(args) -> ExperimentConfig:
    preset = get_preset(args.preset)
    kw = {"n": args.n, "t_end": args.t_end}
    if args.preset == "thm-growth":
        kw["epsilon"] = args.epsilon
    if args.preset == "rotating-pattern":
        kw.update(c1=args.c1, c2=args.c2)
    if args.preset == "ccf-blowup":
        kw["threshold"] = args.threshold
    given = {k: v for k, v in kw.items() if v is not None}
    unused = [f for f in ("epsilon", "c1", "c2", "threshold") if getattr(args, f) is not None and f not in kw]
    if unused:
        raise ConfigError(unused[0], f"not a parameter of preset {args.preset}")
    return preset.build(**given)


def _run_one(cfg: ExperimentConfig, preset_name: Optional[str], root: Optional[str]):
    preset = get_preset(preset_name) if preset_name else None
    res = execute(cfg, preset, root)
    line = res.line(cfg)
    if res.records:
        line = records_json(res.records) + "\n" + line
    return (EXIT_OK if res.status == "ok" else EXIT_PHYSICS), line


def _sweep_one(path: str, root: Optional[str]):
    try:
        return _run_one(load_config(path), None, root)
    except ConfigError as exc:
        return EXIT_CONFIG, f"{path}: config error: {exc}"


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "sweep":
            paths = sorted(glob.glob(args.pattern))
            if not paths:
                raise ConfigError("pattern", f"no config files match {args.pattern!r}")
            if args.jobs > 1:
                with ProcessPoolExecutor(args.jobs) as pool:
                    results = list(pool.map(_sweep_one, paths, [args.output] * len(paths)))
            else:
                results = [_sweep_one(p, args.output) for p in paths]
            for _, line in results:
                print(line)
            return max(code for code, _ in results)
        if args.command == "preset":
            code, line = _run_one(_preset_config(args), args.preset, args.output)
        else:
            code, line = _run_one(_model_config(args), None, args.output)
        print(line)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
