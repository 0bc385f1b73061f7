"""Command line interface.

Subcommands:
  run       execute a configured experiment and write its outputs
  validate  load and check a config file without running anything
  synth     generate a synthetic dataset and write it in LETOR format
  ttest     compare a numeric column between two CSV files

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .data import (
    DatasetValidationError,
    LetorParseError,
    generate_synthetic,
    serialize_letor,
)
from .experiment import (
    ConfigError,
    ExperimentError,
    config_to_dict,
    load_config,
    run_experiment,
)
from .metrics import t_test_two_tailed

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oltrsim",
        description="Online learning to rank simulation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("--config", required=True, help="experiment config JSON")
    run_p.add_argument("--seed", type=int, help="override base_seed")
    run_p.add_argument("--repeats", type=int, help="override repeats")
    run_p.add_argument("--workers", type=int, help="worker process count")
    run_p.add_argument("--out", help="output directory (overrides config)")
    run_p.add_argument(
        "--dump-model",
        action="store_true",
        help="write each run's final model as JSON under the output directory",
    )

    val_p = sub.add_parser("validate", help="validate an experiment config")
    val_p.add_argument("--config", required=True)

    synth_p = sub.add_parser("synth", help="write a synthetic LETOR dataset")
    synth_p.add_argument("--spec", required=True, help="synthetic spec JSON file")
    synth_p.add_argument("--out", required=True, help="output LETOR file")

    ttest_p = sub.add_parser("ttest", help="two-tailed t-test between CSV columns")
    ttest_p.add_argument("--a", required=True, help="first CSV file")
    ttest_p.add_argument("--b", required=True, help="second CSV file")
    ttest_p.add_argument("--column", required=True, help="numeric column name")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)
    if args.repeats is not None:
        if args.repeats < 1:
            raise ConfigError("repeats: must be >= 1")
        cfg = replace(cfg, repeats=args.repeats)
    out = args.out or cfg.output_dir
    if out is None:
        raise ConfigError('no output directory: pass --out or set "output_dir"')
    summary = run_experiment(
        cfg, workers=args.workers, output_dir=out, dump_models=args.dump_model
    )
    sys.stdout.write((Path(out) / "table.txt").read_text(encoding="utf-8"))
    print(f"outputs written to {out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
    print(f"{args.config}: OK", file=sys.stderr)
    return EXIT_OK


def _cmd_synth(args) -> int:
    spec_path = Path(args.spec)
    if not spec_path.exists():
        raise ConfigError(f"spec file {spec_path} not found")
    try:
        spec = json.loads(spec_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"spec file is not valid JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise ConfigError("spec: expected a JSON object")
    spec = dict(spec)
    if "split_fractions" in spec:
        spec["split_fractions"] = tuple(spec["split_fractions"])
    try:
        ds = generate_synthetic(**spec)
    except TypeError as exc:
        raise ConfigError(f"spec: {exc}") from exc
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as handle:
        serialize_letor(ds, handle)
    print(f"wrote {ds.num_documents()} documents over "
          f"{len(ds.queries)} queries to {out_path}")
    return EXIT_OK


def _read_column(path: str, column: str) -> list[float]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ConfigError(f"{path}: no column named {column!r}")
        values = []
        for row in reader:
            cell = row[column]
            if cell == "":
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise ConfigError(
                    f"{path}: non-numeric value {cell!r} in column {column!r}"
                ) from None
    if len(values) < 2:
        raise ConfigError(f"{path}: need at least 2 values in column {column!r}")
    return values


def _cmd_ttest(args) -> int:
    report = t_test_two_tailed(
        _read_column(args.a, args.column), _read_column(args.b, args.column)
    )
    payload = {
        "mean_a": report.mean_a,
        "mean_b": report.mean_b,
        "std_a": report.std_a,
        "std_b": report.std_b,
        "t_statistic": report.t_statistic,
        "p_value": report.p_value,
        "n_a": report.n_a,
        "n_b": report.n_b,
        "degenerate_variance": report.degenerate_variance,
        "significant_05": report.significant_05,
        "significant_01": report.significant_01,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "synth": _cmd_synth,
        "ttest": _cmd_ttest,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, LetorParseError, DatasetValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ExperimentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
