"""Command-line entry point.

    chaoswipt run <spec.toml> [--output PATH] [--workers N] [--fresh]
    chaoswipt preset <fig1|fig2> [--override section.key=value ...] [--output PATH]
    chaoswipt feasible <spec.toml> --sr-t X --sr-r Y
    chaoswipt validate <spec.toml>

Exit status is 0 on success, 1 for configuration errors and 2 for failures
while running.
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, check_floors, load_preset, load_spec, PRESETS
from .sweep import check_feasibility, run_sweep, write_results

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chaoswipt", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="verb", required=True)

    def run_opts(sp):
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a spec value, e.g. trials.mc_bits=1000")
        sp.add_argument("--output", help="CSV path (default: scenario.output)")
        sp.add_argument("--workers", type=int, help="worker processes (default: $CHAOSWIPT_WORKERS or 1)")
        sp.add_argument("--fresh", action="store_true", help="ignore an existing checkpoint")

    r = sub.add_parser("run", help="evaluate every grid point of a spec file")
    r.add_argument("spec")
    run_opts(r)
    pr = sub.add_parser("preset", help="run a bundled scenario")
    pr.add_argument("name", choices=PRESETS)
    run_opts(pr)
    f = sub.add_parser("feasible", help="report the feasible reference-length region")
    f.add_argument("spec")
    f.add_argument("--sr-t", type=float, required=True)
    f.add_argument("--sr-r", type=float, required=True)
    f.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    f.add_argument("--workers", type=int)
    v = sub.add_parser("validate", help="parse and check a spec file without running it")
    v.add_argument("spec")
    v.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return p


def _load(args):
    if args.verb == "preset":
        return load_preset(args.name, args.override)
    return load_spec(args.spec, args.override)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        spec = _load(args)
        if args.verb == "feasible":
            check_floors((args.sr_t, args.sr_r))
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.verb == "validate":
            print(json.dumps({"scenario": spec.name, "points": spec.n_points,
                              "seed": spec.seed, "converted": spec.converted}, indent=2))
        elif args.verb == "feasible":
            rows = [row for row, _ in run_sweep(spec, workers=args.workers)]
            print(json.dumps(check_feasibility(rows, (args.sr_t, args.sr_r)), indent=2))
        else:
            out, rows = write_results(spec, args.output, workers=args.workers,
                                      resume=not args.fresh)
            print(f"wrote {len(rows)} rows to {out}")
    except KeyboardInterrupt:
        print("interrupted; rerun to resume from the checkpoint", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
