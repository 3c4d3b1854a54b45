"""Command line entry point: ``hiersparse {gen,run,audit,sweep}``.

Settings come from an optional JSON config (``--config``) and are overridden
by flags. Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, DataError, NumericalError
from .experiment import METHODS, SWEEP_AXES, ExperimentConfig, cmd_audit, cmd_gen, cmd_run, cmd_sweep

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

# flag dest -> (section or None, field)
_OVERRIDES = {
    "mode": (None, "mode"),
    "b": ("generator", "b"),
    "L": ("generator", "L"),
    "d": ("generator", "d"),
    "theta0": ("generator", "theta0_deg"),
    "norm": ("generator", "root_child_norm"),
    "rate": ("generator", "rate"),
    "schedule": ("generator", "schedule_mode"),
    "noise": ("generator", "noise_variance"),
    "samples_per_leaf": ("generator", "samples_per_leaf"),
    "seed": ("generator", "seed"),
    "beam": ("pursuit", "beam"),
    "max_steps": ("pursuit", "max_steps"),
    "tol": ("pursuit", "tolerance"),
    "sparsity": ("pursuit", "sparsity"),
    "epochs": ("classifier", "epochs"),
    "lr": ("classifier", "lr"),
    "weight_decay": ("classifier", "weight_decay"),
    "classifier_seed": ("classifier", "seed"),
    "test_fraction": ("classifier", "test_fraction"),
    "split_seed": ("classifier", "split_seed"),
    "shots": ("classifier", "shots"),
    "data_dir": (None, "data_dir"),
    "out": (None, "output_dir"),
    "taxonomy": (None, "taxonomy_path"),
    "embeddings": (None, "embeddings_path"),
    "samples": (None, "samples_path"),
    "labels": (None, "labels_path"),
    "format": (None, "vector_format"),
    "workers": (None, "workers"),
    "path_cap": (None, "path_cap"),
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--mode", choices=["synthetic", "ingested"])
    g = p.add_argument_group("generator")
    g.add_argument("--b", type=int, help="branching factor")
    g.add_argument("--L", type=int, help="hierarchy depth")
    g.add_argument("--d", type=int, help="embedding dimension")
    g.add_argument("--theta0", type=float, help="root half-angle in degrees")
    g.add_argument("--norm", type=float, help="norm of the root-child embeddings")
    g.add_argument("--rate", type=float, help="half-angle reduction factor r in (0, 1/2)")
    g.add_argument("--schedule", choices=["raw-rate", "min-rule"])
    g.add_argument("--noise", type=float, help="per-coordinate noise variance")
    g.add_argument("--samples-per-leaf", type=int)
    g.add_argument("--seed", type=int)
    q = p.add_argument_group("pursuit")
    q.add_argument("--beam", type=int)
    q.add_argument("--max-steps", type=int)
    q.add_argument("--tol", type=float)
    q.add_argument("--sparsity", type=int)
    q.add_argument("--baselines", action="store_true", default=None, help="also run omp, nn and hnn")
    c = p.add_argument_group("classifier")
    c.add_argument("--no-classifier", action="store_true", default=None)
    c.add_argument("--epochs", type=int)
    c.add_argument("--lr", type=float)
    c.add_argument("--weight-decay", type=float)
    c.add_argument("--classifier-seed", type=int)
    c.add_argument("--test-fraction", type=float)
    c.add_argument("--split-seed", type=int)
    c.add_argument("--shots", type=int, help="cap on training samples per class (few-shot)")
    io = p.add_argument_group("files")
    io.add_argument("--data-dir")
    io.add_argument("--out", help="output directory")
    io.add_argument("--taxonomy")
    io.add_argument("--embeddings")
    io.add_argument("--samples")
    io.add_argument("--labels")
    io.add_argument("--format", choices=["bin", "csv"], help="vector file format written by gen")
    io.add_argument("--normalize", action="store_true", default=None, help="unit-normalize input samples")
    io.add_argument("--record-timing", action="store_true", default=None,
                    help="add wall-clock columns (outputs are then not byte-reproducible)")
    io.add_argument("--workers", type=int)
    io.add_argument("--path-cap", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiersparse", description="Hierarchical sparse coding experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("gen", help="generate a synthetic benchmark")
    _add_common(p)
    p = sub.add_parser("run", help="run pursuit / baselines and write reports")
    _add_common(p)
    p.add_argument("--method", action="append", choices=METHODS, help="repeatable; default from config (homp)")
    p = sub.add_parser("audit", help="geometric audits of an embedding set")
    _add_common(p)
    p = sub.add_parser("sweep", help="vary one parameter and write a long-format CSV")
    _add_common(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--method", action="append", choices=METHODS)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.command == "gen" and not args.config and args.mode is None:
        cfg.mode = "synthetic"
    for dest, (section, name) in _OVERRIDES.items():
        val = getattr(args, dest, None)
        if val is None:
            continue
        target = cfg if section is None else getattr(cfg, section)
        setattr(target, name, val)
    if args.baselines:
        cfg.baselines = True
    if args.no_classifier:
        cfg.classifier.enabled = False
    if args.normalize:
        cfg.normalize_samples = True
    if args.record_timing:
        cfg.record_timing = True
    if getattr(args, "method", None):
        cfg.methods = list(args.method)
    return cfg


def _parse_values(axis, text):
    parts = [s.strip() for s in text.split(",") if s.strip()]
    try:
        return [float(s) for s in parts] if axis == "noise" else [int(s) for s in parts]
    except ValueError as exc:
        raise ConfigError(f"bad --values for axis {axis}: {exc}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "gen":
            out = cmd_gen(cfg)
            print(json.dumps({k: str(v) for k, v in out.items()}, indent=1))
        elif args.command == "run":
            print(json.dumps(cmd_run(cfg), indent=1, default=str))
        elif args.command == "audit":
            print(json.dumps(cmd_audit(cfg), indent=1, default=str))
        else:
            print(cmd_sweep(cfg, args.axis, _parse_values(args.axis, args.values)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
