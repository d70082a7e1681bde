"""Command line entry point.

    flga run CONFIG [--set key=value ...]
    flga sweep-tau CONFIG [--set ...]
    flga bench [CONFIG] [--set ...]
    flga qflga-compare [CONFIG] [--set ...]
    flga dump-table --model D2Q9 --k 2 [--lambdas ...] [--C ...] --out table.csv
    flga presets

CONFIG is a path or the name of a bundled preset.  Outputs go below
``$FLGA_OUTPUT_ROOT`` (default ``./output``).  Exit codes: 0 success,
2 configuration error, 3 instability in strict mode.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import cases
from .config import ConfigError, LAMBDA_O, load_config, preset_names
from .lattice import dump_table_csv, make_table
from .state import InstabilityError

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE = 0, 2, 3


def _overrides(items) -> dict[str, str]:
    out, bad = {}, {}
    for item in items or []:
        if "=" not in item:
            bad[item] = "override must be key=value"
            continue
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    if bad:
        raise ConfigError(bad)
    return out


def _cmd_run(args):
    cfg = load_config(args.config, _overrides(args.set))
    rep = cases.run_case(cfg, write=not args.no_write)
    print(rep.to_json())
    return EXIT_OK


def _cmd_sweep(args):
    cfg = load_config(args.config, _overrides(args.set))
    curve, rows = cases.sweep_tau(cfg, write=not args.no_write)
    for r in rows:
        print(f"C={r['C']:<8g} tau={r['tau'] if r['tau'] is None else round(r['tau'], 4)!s:<10}"
              f" {'unstable' if r['unstable'] else ''}")
    if curve is not None:
        print(f"gamma={curve.gamma:.4f} pi0={curve.pi0:.4f}")
    return EXIT_OK


def _cmd_bench(args):
    cfg = load_config(args.config or "bench", _overrides(args.set))
    rows, fits = cases.bench_timing(cfg, write=not args.no_write)
    for r in rows:
        print(f"{r['solver']:6s} N={r['N']:<9d} {r['seconds']:.3e} s")
    print(json.dumps(fits, indent=2))
    return EXIT_OK


def _cmd_qflga(args):
    cfg = load_config(args.config or "qflga", _overrides(args.set))
    if cfg.case != "qflga":
        raise ConfigError({"case": "qflga-compare needs case = qflga"})
    rep = cases.run_case(cfg, write=not args.no_write)
    print(rep.to_json())
    return EXIT_OK


def _cmd_dump(args):
    if args.lambdas.strip().lower() in ("lambda_o", "o"):
        lam = LAMBDA_O
    else:
        vals = [float(x) for x in args.lambdas.split(",")]
        lam = vals[0] if len(vals) == 1 else vals
    try:
        table = make_table(args.model, args.k, lam, args.C)
    except ValueError as exc:
        raise ConfigError({"table": str(exc)}) from None
    path = dump_table_csv(table, Path(args.out))
    print(f"{table.n_terms} terms, {len(table.inputs)} input products -> {path}")
    return EXIT_OK


def _cmd_presets(args):
    print("\n".join(preset_names()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flga", description="Float lattice gas automata experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_config=True):
        if need_config:
            p.add_argument("config", help="config file or preset name")
        else:
            p.add_argument("config", nargs="?", help="config file or preset name")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--no-write", action="store_true", help="skip writing output files")

    common(sub.add_parser("run", help="run one case"))
    common(sub.add_parser("sweep-tau", help="measure tau over a list of C"))
    common(sub.add_parser("bench", help="collision timing against site count"), need_config=False)
    common(sub.add_parser("qflga-compare", help="quantum vs classical FLGA step"), need_config=False)
    d = sub.add_parser("dump-table", help="write a collision table as CSV")
    d.add_argument("--model", default="D2Q9", choices=["D1Q3", "D2Q9"])
    d.add_argument("--k", type=int, default=2)
    d.add_argument("--lambdas", default="1")
    d.add_argument("--C", type=float, default=1.0)
    d.add_argument("--out", default="table.csv")
    sub.add_parser("presets", help="list bundled presets")
    return ap


COMMANDS = {
    "run": _cmd_run, "sweep-tau": _cmd_sweep, "bench": _cmd_bench,
    "qflga-compare": _cmd_qflga, "dump-table": _cmd_dump, "presets": _cmd_presets,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "problems": exc.problems}), file=sys.stderr)
        return EXIT_CONFIG
    except InstabilityError as exc:
        print(json.dumps({"error": "instability", "time": exc.time, "sites": exc.sites[:20]}),
              file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())
