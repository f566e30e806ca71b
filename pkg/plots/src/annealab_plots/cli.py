"""Command line entry point.

    annealab-plots --spec figures.json --out outdir
    annealab-plots --print-schema

Exit codes mirror the annealab CLI: 0 all figures written, 1 an input file
failed schema checks, 2 the spec itself is invalid (including a glob that
matches nothing; nothing is written in either failure case for the failing
figure).
"""

from __future__ import annotations

import argparse
import sys

from .figspec import SpecError, load_specs, schema_text
from .readers import SchemaError
from .render import render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="annealab-plots",
        description="Render paper-style figures from annealab artifacts.")
    parser.add_argument("--spec", help="figure spec JSON file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--print-schema", action="store_true",
                        help="print the spec schema and exit")
    args = parser.parse_args(argv)

    if args.print_schema:
        print(schema_text())
        return 0
    if not args.spec or not args.out:
        parser.print_usage(sys.stderr)
        print("error: --spec and --out are required", file=sys.stderr)
        return 2

    try:
        specs = load_specs(args.spec)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2

    status = 0
    for spec in specs:
        try:
            path = render(spec, args.out)
        except SpecError as exc:
            print(f"spec error: {exc}", file=sys.stderr)
            return 2
        except SchemaError as exc:
            print(f"input error: {exc}", file=sys.stderr)
            status = 1
        else:
            print(f"wrote {path}")
    return status


if __name__ == "__main__":
    sys.exit(main())
