"""Command-line entry point.

Every subcommand reads a JSON config (see --print-schema), runs its jobs
and writes artifacts plus a manifest into the output directory.  A
manifest file is itself an acceptable --config argument: re-running it
reproduces the CSV artifacts byte for byte.

Exit codes: 0 success, 1 at least one job failed, 2 config error.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import ConfigError, ExperimentConfig, run, schema_text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annealab",
        description="Annealing laboratory for binary perceptron problems.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON config (or a manifest) to run")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's base seed")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel jobs (default 1)")
        p.add_argument("--out", default=None,
                       help="override the config's output directory")
        p.add_argument("--print-schema", action="store_true",
                       help="print the config schema for this kind and exit")
        return p

    add("theory", "replica saddle-point curve over a field grid")
    add("sqa-sweep", "path-integral annealing traces")
    add("sa-sweep", "classical annealing traces on the matched ladder")
    add("committee-sweep", "path-integral traces for the committee cost")
    add("bp-profile", "cavity landscape profile around a reference")
    add("exact-qa", "real-time annealing of the full wavefunction")
    add("gaps", "two lowest eigenvalues along a field grid")
    add("stats", "final-distribution statistics record")
    add("select-samples", "filter a pool down to SA-hard / SQA-easy samples")
    runp = add("run", "run any config (kind taken from the file)")
    runp.description = "Dispatches on the config's own 'kind' field."
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    kind = None if args.command == "run" else args.command
    if args.print_schema:
        print(schema_text(kind))
        return 0
    if args.config is None:
        print("error: --config is required (see --print-schema)",
              file=sys.stderr)
        return 2
    try:
        cfg = ExperimentConfig.from_file(args.config, seed=args.seed,
                                         out_dir=args.out)
        if kind is not None and cfg.kind != kind:
            raise ConfigError(
                f"config has kind {cfg.kind!r}; invoked as {kind!r}")
        manifest = run(cfg, workers=max(1, args.workers))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    n_failed = manifest["n_failed"]
    n_jobs = len(manifest["jobs"])
    print(f"{n_jobs - n_failed}/{n_jobs} jobs ok -> {cfg.out_dir}")
    for job in manifest["jobs"]:
        if job["status"] != "ok":
            print(f"  failed: {job['name']}: {job['error']}",
                  file=sys.stderr)
    return 1 if n_failed else 0


if __name__ == "__main__":
    sys.exit(main())
