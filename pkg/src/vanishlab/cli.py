"""Command line entry point ``lab``.

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import _io
from .config import load_config
from .errors import ConfigError, InvalidSpecError, LabError

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _run_one(path):
    from .scenarios import run_scenario

    return run_scenario(load_config(path))


def cmd_run(args) -> int:
    configs = [load_config(p) for p in args.config]  # fail fast on bad files
    from .scenarios import build_context

    for cfg in configs:
        build_context(cfg)
    if args.jobs > 1 and len(args.config) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            manifests = list(pool.map(_run_one, args.config))
    else:
        manifests = [_run_one(p) for p in args.config]
    for m in manifests:
        status = "PASS" if m["passed"] else "FAIL"
        print(f"{status} {m['scenario']} ({m['wall_time_s']:.2f} s)")
        for name, ok in sorted(m["checks"].items()):
            print(f"    {'ok  ' if ok else 'FAIL'} {name}")
    return EXIT_OK if all(m["passed"] for m in manifests) else EXIT_CHECK


def cmd_list(args) -> int:
    from .scenarios import REGISTRY, list_scenarios

    for name in list_scenarios():
        print(f"{name:22s} {REGISTRY[name].anchor}" if args.verbose else name)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    from .scenarios import plotdata_rows

    for path in args.report:
        path = Path(path)
        try:
            report = _io.read_json(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{path}: cannot read report ({exc})") from exc
        if not isinstance(report, dict):
            raise ConfigError(f"{path}: malformed report")
        rows = plotdata_rows(report)
        out = Path(args.out) if args.out else path.parent
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"{path.stem}.plotdata.csv"
        if args.out and len(args.report) > 1:
            target = out / f"{path.parent.name}.plotdata.csv"
        _io.write_csv(target, ["series", "x", "y"], rows)
        print(target)
    return EXIT_OK


def cmd_sawyer(args) -> int:
    from .kernels import sawyer_ratio_scan

    rep = sawyer_ratio_scan(args.estimate, args.n_max, args.samples, args.seed, jobs=args.jobs)
    payload = {"report_type": "SawyerReport", "results": rep.to_dict()}
    if args.out:
        _io.write_json(args.out, payload)
    else:
        sys.stdout.write(_io.dumps(payload))
    return EXIT_OK


def cmd_prop22(args) -> int:
    from .discrete_ops import prop22_check
    from .grid import RadialGrid
    from .potentials import make_hardy

    grid = RadialGrid(args.r_min, args.r_max, args.n_points)
    rep = prop22_check(make_hardy(3, args.delta), args.p, grid, args.probes, args.seed)
    if args.out:
        _io.write_json(args.out, rep.to_dict())
    else:
        sys.stdout.write(_io.dumps(rep.to_dict()))
    return EXIT_OK if rep.margin >= -args.tolerance else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run scenarios from TOML config files")
    p.add_argument("config", nargs="+")
    p.add_argument("--jobs", type=int, default=1, help="scenario-level worker processes")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("list", help="list registered scenarios")
    p.add_argument("-v", "--verbose", action="store_true", help="show what each one checks")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("plotdata", help="long-format CSV (series, x, y) from reports")
    p.add_argument("report", nargs="+")
    p.add_argument("--out", default=None, help="directory for the CSV files")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("sawyer", help="Sawyer-type kernel ratio scan")
    p.add_argument("--estimate", choices=["s1", "s2"], required=True)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="output JSON path (default: stdout)")
    p.set_defaults(func=cmd_sawyer)

    p = sub.add_parser("prop22", help="p->p norm probe against kappa_p nu for truncated Hardy")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--probes", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--r-min", type=float, default=1e-4)
    p.add_argument("--r-max", type=float, default=20.0)
    p.add_argument("--n-points", type=int, default=4096)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_prop22)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if os.environ.get("LAB_OUT_DIR"):
        Path(os.environ["LAB_OUT_DIR"]).mkdir(parents=True, exist_ok=True)
    try:
        return args.func(args)
    except (ConfigError, InvalidSpecError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LabError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
