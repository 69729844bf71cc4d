"""Command-line entry point.

Exit codes: 0 success, 1 usage error (usage printed to stderr), 2 data or
validation error (message names the file and row where known).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .averaging import apply_operator
from .errors import BlendError
from .metrics import accuracy, auroc
from .pipeline import EnsembleRecipe, LoopConfig, apply_recipe, discover_models, make_report, run_ensemble_loop
from .simplex import NelderMeadConfig, optimize_weights
from .store import align, atomic_write_text, load_labels, load_predictions, submission_text, write_submission
from .synthetic import SyntheticConfig, generate, write_pool

log = logging.getLogger("rankblend")

DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand from resetting a flag given before it
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    verbosity.add_argument("--debug", action="store_true", help="debug logging on stderr")
    common.add_argument("--seed", type=int, help=f"RNG seed for all randomness (default {DEFAULT_SEED})")
    common.add_argument(
        "--scores-raw",
        action="store_true",
        help="accept any finite score (e.g. logits) instead of requiring [0, 1]",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="rankblend", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"rankblend {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("evaluate", parents=[common], help="print AUROC and accuracy of one prediction file")
    p.add_argument("--pred", required=True, help="prediction CSV (id,proba,label)")
    p.add_argument("--labels", required=True, help="JSONL file with id and label fields")
    p.add_argument("--threshold", type=float, default=0.5, help="positive when proba >= threshold (default 0.5)")

    p = sub.add_parser("average", parents=[common], help="combine prediction files with a fixed operator")
    p.add_argument("--op", required=True, choices=["simple", "rank", "power"], help="averaging operator")
    p.add_argument("--exponent", type=float, default=2.0, help="power for --op power (default 2)")
    p.add_argument("--weights", type=_float_list, default=None, help="comma-separated weights summing to 1")
    p.add_argument("--threshold", type=float, default=0.5, help="label column threshold (default 0.5)")
    p.add_argument("inputs", nargs="+", metavar="CSV", help="prediction files")
    p.add_argument("-o", "--output", required=True, help="output CSV")

    p = sub.add_parser("optimize", parents=[common], help="learn simplex weights maximizing dev AUROC")
    p.add_argument("--dev", nargs="+", required=True, metavar="CSV", help="dev prediction files")
    p.add_argument("--labels", required=True, help="dev labels (JSONL)")
    p.add_argument("--restarts", type=int, default=3, help="Nelder-Mead restarts (default 3)")
    p.add_argument("-o", "--output", required=True, help="output weights JSON")

    p = sub.add_parser("ensemble", parents=[common], help="run the ensembling loop over a models directory")
    p.add_argument("--models-dir", required=True, help="directory laid out as <model>/<seed>/{dev,test}.csv")
    p.add_argument("--labels", required=True, help="dev labels (JSONL)")
    p.add_argument("--config", default=None, help="JSON loop config")
    p.add_argument("--seed-rank", action="store_true", help="rank-average seeds instead of averaging probabilities")
    p.add_argument("-o", "--output", required=True, help="submission CSV")
    p.add_argument("--recipe-out", required=True, help="recipe JSON")

    p = sub.add_parser("apply", parents=[common], help="replay a recipe on test predictions")
    p.add_argument("--models-dir", required=True, help="directory laid out as <model>/<seed>/{dev,test}.csv")
    p.add_argument("--recipe", required=True, help="recipe JSON written by 'ensemble'")
    p.add_argument("--threshold", type=float, default=0.5, help="label column threshold (default 0.5)")
    p.add_argument("-o", "--output", required=True, help="submission CSV")

    p = sub.add_parser("synth", parents=[common], help="write a synthetic labelled model pool")
    p.add_argument("--config", required=True, help="JSON synthetic config")
    p.add_argument("-o", "--output", required=True, help="output directory")

    p = sub.add_parser("report", parents=[common], help="per-model and ensemble metric table")
    p.add_argument("--models-dir", required=True, help="directory laid out as <model>/<seed>/{dev,test}.csv")
    p.add_argument("--recipe", required=True, help="recipe JSON written by 'ensemble'")
    p.add_argument("--labels", required=True, help="dev labels (JSONL)")
    p.add_argument("--test-labels", default=None, help="test labels (JSONL), if available")
    p.add_argument("--threshold", type=float, default=0.5, help="accuracy threshold (default 0.5)")
    return parser


def _seed(args) -> int:
    return DEFAULT_SEED if args.seed is None else args.seed


def cmd_evaluate(args) -> None:
    table = load_predictions(args.pred, "dev", strict=not args.scores_raw)
    labels = load_labels(args.labels).covering(table)
    print(f"auroc: {auroc(table, labels):.6f}")
    print(f"accuracy: {accuracy(table, labels, args.threshold):.6f}")


def cmd_average(args) -> None:
    tables = align([load_predictions(p, "test", strict=not args.scores_raw) for p in args.inputs])
    for path, gone in zip(args.inputs, tables.dropped):
        if gone:
            log.warning("%s: %d ids not present in every input were dropped", path, len(gone))
    out = apply_operator(args.op, tables, exponent=args.exponent if args.op == "power" else None, weights=args.weights)
    write_submission(out, args.output, threshold=args.threshold)


def cmd_optimize(args) -> None:
    tables = align([load_predictions(p, "dev", strict=not args.scores_raw) for p in args.dev])
    labels = load_labels(args.labels).covering(tables[0])
    cfg = NelderMeadConfig(restarts=args.restarts, rng_seed=_seed(args))
    weights, dev_auroc, trace = optimize_weights(tables, labels, cfg)
    uniform = apply_operator("simple", tables)
    doc = {
        "inputs": list(args.dev),
        "weights": weights.tolist(),
        "dev_auroc": dev_auroc,
        "uniform_dev_auroc": auroc(uniform, labels),
        "rng_seed": cfg.rng_seed,
        "restarts": cfg.restarts,
        "iterations": len(trace.records),
        "toolkit_version": __version__,
    }
    atomic_write_text(args.output, json.dumps(doc, indent=2) + "\n")
    print(f"dev_auroc: {dev_auroc:.6f}")
    print("weights: " + ",".join(f"{w:.6f}" for w in weights))


def cmd_ensemble(args) -> None:
    cfg = LoopConfig.from_file(args.config) if args.config else LoopConfig()
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    if args.seed_rank:
        cfg = replace(cfg, seed_rank=True)
    models = discover_models(args.models_dir, strict=not args.scores_raw)
    labels = load_labels(args.labels)
    recipe, final_test, report = run_ensemble_loop(models, labels, cfg)
    # render both outputs before writing either, so a failure leaves no partial pair
    text = submission_text(final_test, threshold=cfg.threshold)
    atomic_write_text(args.recipe_out, recipe.to_json())
    atomic_write_text(args.output, text)
    sys.stdout.write(report.render())


def cmd_apply(args) -> None:
    recipe = EnsembleRecipe.load(args.recipe)
    models = discover_models(args.models_dir, strict=not args.scores_raw)
    write_submission(apply_recipe(recipe, models, "test"), args.output, threshold=args.threshold)


def cmd_synth(args) -> None:
    cfg = SyntheticConfig.from_file(args.config)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    models, dev_labels, test_labels = generate(cfg)
    write_pool(models, dev_labels, test_labels, Path(args.output))
    print(f"wrote {cfg.n_models} models x {cfg.n_seeds} seeds to {args.output}")


def cmd_report(args) -> None:
    recipe = EnsembleRecipe.load(args.recipe)
    models = discover_models(args.models_dir, strict=not args.scores_raw)
    labels = load_labels(args.labels)
    test_labels = load_labels(args.test_labels) if args.test_labels else None
    sys.stdout.write(make_report(models, recipe, labels, test_labels, args.threshold).render())


COMMANDS = {
    "evaluate": cmd_evaluate,
    "average": cmd_average,
    "optimize": cmd_optimize,
    "ensemble": cmd_ensemble,
    "apply": cmd_apply,
    "synth": cmd_synth,
    "report": cmd_report,
}


def _configure_logging(args) -> None:
    level = logging.ERROR if args.quiet else logging.DEBUG if args.debug else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        for name, default in (("quiet", False), ("debug", False), ("seed", None), ("scores_raw", False)):
            if not hasattr(args, name):
                setattr(args, name, default)
        if args.quiet and args.debug:
            raise UsageError(parser.format_usage() + "rankblend: error: --quiet and --debug are exclusive")
        if args.command is None:
            raise UsageError(parser.format_usage() + "rankblend: error: a command is required")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    _configure_logging(args)
    try:
        COMMANDS[args.command](args)
    except BlendError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # never a traceback for bad input
        if args.debug:
            raise
        print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
