"""Command-line entry point."""

from __future__ import annotations

import argparse
import sys

from .config import parse_config
from .errors import ConfigError, EnclosureError
from .experiments import EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, run_experiment

FIGURES = ("fig1", "fig2", "fig3")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="enclosure",
        description="Recover the insulated end of a rod from boundary temperatures and certify frequency regions.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a key=value config file")
    run.add_argument("config", help="path to the configuration file, or - for stdin")
    rep = sub.add_parser("reproduce", help="rerun a published experiment and compare with its values")
    rep.add_argument("figure", choices=FIGURES + ("all",))
    rep.add_argument("--N_t", default=None, help="comma-separated subset of sample counts to run")
    rep.add_argument("--stream", action="store_true", help="accumulate sums without storing all samples")
    for p in (run, rep):
        p.add_argument("-o", "--output-dir", default=None, help="directory for CSV, PNG and summary files")
        p.add_argument("--no-plots", action="store_true", help="write CSV and summary only")
    return parser


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            try:
                text = _read(args.config)
            except OSError as exc:
                raise ConfigError(f"cannot read {args.config}: {exc}") from None
            configs = [parse_config(text)]
        else:
            extra = f"N_t={args.N_t}\n" if args.N_t else ""
            extra += "stream=true\n" if args.stream else ""
            names = FIGURES if args.figure == "all" else (args.figure,)
            configs = [parse_config(f"mode=reproduce-{name}\n{extra}") for name in names]
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    status = EXIT_OK
    for config in configs:
        out = args.output_dir or config.output_dir
        if len(configs) > 1:
            out = f"{out}/{config.mode.removeprefix('reproduce-')}"
        try:
            code = run_experiment(config, out, plots=not args.no_plots)
        except EnclosureError as exc:
            print(f"numerical error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        with open(f"{out}/summary.txt") as fh:
            sys.stdout.write(fh.read())
        if code == EXIT_ACCEPTANCE:
            status = EXIT_ACCEPTANCE
    return status


if __name__ == "__main__":
    sys.exit(main())
