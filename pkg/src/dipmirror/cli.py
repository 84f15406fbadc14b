"""Command-line entry point.

    dipmirror run CONFIG.yaml [--seed S] [--realizations K] [--out DIR]
    dipmirror run --preset fig4 --scale desk --out results/
    dipmirror list-presets
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import SchemaError, load_config
from .ensemble import ConfigError, GenerationError
from .montecarlo import MonteCarloError, run_average
from .output import write_result
from .presets import expand, list_presets

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_SIMULATION = 4
EXIT_IO = 5


def _override(cfg, args, label=None):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.realizations is not None:
        changes["n_realizations"] = args.realizations
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out is not None:
        name = f"{label}.csv" if label else Path(cfg.output_path).name
        changes["output_path"] = str(Path(args.out) / name)
    elif label:
        changes["output_path"] = f"{label}.csv"
    return cfg.with_(**changes) if changes else cfg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dipmirror", description=__doc__.splitlines()[0] if __doc__ else None)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a config file, manifest, or preset")
    run.add_argument("config", nargs="?", help="YAML config or a previous run manifest")
    run.add_argument("--preset", help="named preset (see list-presets)")
    run.add_argument("--scale", choices=("full", "desk"), default="desk")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory")
    run.add_argument("--realizations", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--quiet", action="store_true", help="no progress on stderr")

    sub.add_parser("list-presets", help="show presets and their parameters")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "list-presets":
        print(list_presets())
        return EXIT_OK

    if (args.config is None) == (args.preset is None):
        print("error: give exactly one of CONFIG or --preset", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.config is not None:
            runs = [(None, load_config(args.config))]
        else:
            runs = expand(args.preset, args.scale, seed=1 if args.seed is None else args.seed)
        runs = [(label, _override(cfg, args, label)) for label, cfg in runs]
    except (SchemaError, ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MonteCarloError, GenerationError, RuntimeError) as exc:
        print(f"preset preparation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION

    for label, cfg in runs:
        if label:
            print(f"[dipmirror] {label}", file=sys.stderr)
        try:
            result = run_average(cfg, progress=not args.quiet)
        except (MonteCarloError, GenerationError, SchemaError, ConfigError) as exc:
            print(f"simulation failed: {exc}", file=sys.stderr)
            return EXIT_SIMULATION
        try:
            csv_path, manifest = write_result(result)
        except OSError as exc:
            print(f"cannot write output: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"{csv_path}\t{manifest}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
