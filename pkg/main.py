import argparse
import json
import logging
import sys
from pathlib import Path

from core.errors import BSDELabError, ConfigError
from core.settings import OUTPUT_ROOT_ENV, output_root
from drivers.catalog import list_catalog
from experiments.config import SCHEMA, load_config, locate_error
from experiments.output import write_results
from experiments.runner import run_experiment

logger = logging.getLogger("gbsde_lab")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _print_table(rows, columns):
    widths = {c: max(len(c), *(len(_cell(r.get(c))) for r in rows)) for c in columns}
    print("  ".join(c.ljust(widths[c]) for c in columns))
    print("  ".join("-" * widths[c] for c in columns))
    for row in rows:
        print("  ".join(_cell(row.get(c)).ljust(widths[c]) for c in columns))


def _cell(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return "" if value is None else str(value)


def command_run(args):
    try:
        config = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    strict = args.strict or config.strict
    try:
        result = run_experiment(config)
    except ConfigError as e:
        print(f"config error: {locate_error(e, config.source)}", file=sys.stderr)
        return EXIT_CONFIG
    except BSDELabError as e:
        print(f"{config.name}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE

    root = Path(args.output_root) if args.output_root else output_root()
    directory = write_results(result, root)

    for name, rows in sorted(result.tables.items()):
        if rows:
            print(f"\n{name}")
            _print_table(rows, list(rows[0]))
    print(f"\nresults: {directory} (config sha256 {config.digest[:12]})")

    if result.failed:
        print(f"{len(result.failures)} audit failure(s): {', '.join(result.failures)}", file=sys.stderr)
        if strict:
            return EXIT_FAILURE
    return EXIT_OK


def command_catalog(args):
    rows = list_catalog()
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        _print_table(rows, ["name", "family", "parameters", "assumptions", "exemptions"])
    return EXIT_OK


def command_schema(args):
    print(json.dumps(SCHEMA, indent=2))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gbsde-lab",
        description="Numerical laboratory for geometric, LN-Q and two-driver BSDEs and return risk measures.",
    )
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging verbosity (default: WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config and write its results")
    run.add_argument("config", help="experiment config file (.json, .yaml)")
    run.add_argument("--strict", action="store_true", help="exit with status 1 when any audit fails")
    run.add_argument("--output-root", default=None,
                     help=f"directory for result folders (default: ${OUTPUT_ROOT_ENV} or settings output.root)")
    run.set_defaults(handler=command_run)

    catalog = sub.add_parser("catalog", help="list named drivers with their documented assumptions")
    catalog.add_argument("--json", action="store_true", help="print JSON instead of a table")
    catalog.set_defaults(handler=command_catalog)

    schema = sub.add_parser("schema", help="print the experiment config schema")
    schema.set_defaults(handler=command_schema)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
