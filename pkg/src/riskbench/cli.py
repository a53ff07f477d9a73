"""Command line entry point.

    riskbench run <stage> --config pipeline.json [overrides...]
    riskbench run all --config pipeline.json

Flags mirror the pipeline config; anything passed on the command line
overrides the config file.  RISKBENCH_OUTPUT_DIR overrides the output
directory.  Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .pipeline import (
    STAGES,
    DataError,
    PipelineConfig,
    UsageError,
    run_all,
    run_stage,
)

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse default exits 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


_OVERRIDE_FLAGS: list[tuple[str, str, type]] = [
    ("--corpus-metadata", "corpus_metadata", str),
    ("--taxonomy", "taxonomy_path", str),
    ("--dictionary", "dictionary_path", str),
    ("--attention", "attention_path", str),
    ("--embeddings", "embeddings_path", str),
    ("--term-embeddings", "term_embeddings_path", str),
    ("--output-dir", "output_dir", str),
    ("--lambda", "lambda_", float),
    ("--epsilon", "epsilon", float),
    ("--yake-max-ngram", "yake_max_ngram", int),
    ("--yake-top-n", "yake_top_n", int),
    ("--attention-fallback", "attention_fallback", str),
    ("--beta-uni", "beta_uni", float),
    ("--beta-col", "beta_col", float),
    ("--cap", "cap", float),
    ("--top-m", "m", int),
    ("--train-max-year", "train_max_year", int),
    ("--dev-year", "dev_year", int),
    ("--topics", "K", int),
    ("--lda-iterations", "lda_iterations", int),
    ("--lda-burn-in", "lda_burn_in", int),
    ("--tau", "tau", float),
    ("--theta-source", "theta_source", str),
    ("--theta-input", "theta_input", str),
    ("--centroids", "centroids_path", str),
    ("--probe-l2", "probe_l2", float),
    ("--eval-split", "eval_split", str),
    ("--bertscore-baseline", "bertscore_baseline", float),
    ("--jobs", "jobs", int),
]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riskbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a pipeline stage (or 'all')")
    run.add_argument("stage", choices=STAGES + ("all",))
    run.add_argument("--config", help="pipeline config JSON file")
    run.add_argument("--fuzzy", action="store_true", default=None,
                     help="enable fuzzy collocation tolerance")
    run.add_argument("--compact-labels", action="store_true", default=None,
                     help="omit per-token contributions from label output")
    run.add_argument("--verbose", "-v", action="store_true")
    for flag, dest, typ in _OVERRIDE_FLAGS:
        run.add_argument(flag, dest=dest, type=typ, default=None)
    return parser


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    for _, dest, _ in _OVERRIDE_FLAGS:
        value = getattr(args, dest, None)
        if value is not None:
            setattr(cfg, dest, value)
    if args.fuzzy is not None:
        cfg.fuzzy = args.fuzzy
    if args.compact_labels is not None:
        cfg.compact_labels = args.compact_labels
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
        cfg = _build_config(args)
        if args.stage == "all":
            info = run_all(cfg)
        else:
            info = run_stage(args.stage, cfg)
        print(json.dumps(info, indent=2, default=str))
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
