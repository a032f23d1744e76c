"""
Command-line entry point.

    python -m backend.src.main generate  [--config PATH] [--seed N] [--out DIR]
    python -m backend.src.main train     [--strategy single_task|classical_mt|sjmt|all]
    python -m backend.src.main eval      [--run NAME ...]
    python -m backend.src.main report    [--run NAME ...]
    python -m backend.src.main gradcheck [--size small|full]
    python -m backend.src.main benchmark [--seeds N ...] [--compound-seeds N ...]

Exit codes: 0 success, 2 config, 3 divergence, 4 artifact mismatch,
5 verification failure, 1 anything else.
"""
import argparse
import logging
import sys
from typing import List, Optional

from .benchmark import render_summary, run_benchmark
from .exceptions import (
    ArtifactMismatchError,
    ConfigError,
    DataError,
    DivergenceError,
    SangamError,
    VerificationError,
)
from .experiment_pipeline import (
    ALL_STRATEGIES,
    OutputPaths,
    load_experiment_config,
    require_passed,
    run_eval,
    run_generate,
    run_gradcheck,
    run_report,
    run_train,
)
from .evaluation.report import render_text
from .logging_config import setup_logging
from .schemas import Strategy
from .verification import SuiteResult, SuiteSize

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_ARTIFACT = 4
EXIT_VERIFICATION = 5


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Experiment config (YAML). Defaults to SANGAM_CONFIG or configs/default.yaml")
    common.add_argument("--seed", type=int, default=None, help="Override the global seed")
    common.add_argument("--out", default=None, help="Output directory; beats SANGAM_OUTPUT_DIR and the config file")
    common.add_argument("--log-level", default=None, help="Root log level (DEBUG, INFO, ...)")

    parser = argparse.ArgumentParser(
        prog="sangam",
        description="Selective joint multi-task training on synthetic emotion / Action Unit data",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("generate", parents=[common], help="Write the synthetic datasets and ground truth")

    train_parser = commands.add_parser("train", parents=[common], help="Train one or all strategies")
    train_parser.add_argument(
        "--strategy",
        choices=[s.value for s in Strategy] + [ALL_STRATEGIES],
        default=ALL_STRATEGIES,
        help="Strategy to train (default: all)",
    )

    for name, text in (("eval", "Evaluate checkpoints and write the report"), ("report", "Rebuild the report from stored metrics")):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument("--run", action="append", default=None, help="Run to include (repeatable); default is every run found")

    gradcheck_parser = commands.add_parser("gradcheck", parents=[common], help="Finite-difference gradient checks")
    gradcheck_parser.add_argument("--size", choices=[s.value for s in SuiteSize], default=SuiteSize.SMALL.value)

    benchmark_parser = commands.add_parser("benchmark", parents=[common], help="Multi-seed strategy comparisons")
    benchmark_parser.add_argument("--seeds", type=int, nargs="*", default=None, help="Seeds of the emotion/AU comparison")
    benchmark_parser.add_argument("--compound-seeds", type=int, nargs="*", default=None, help="Seeds of the compound comparison")
    return parser


def _print_gradcheck(result: SuiteResult) -> None:
    for check in result.checks:
        status = "ok  " if check.passed else "FAIL"
        detail = f"  {check.detail}" if check.detail else ""
        print(f"{status} {check.name:<45} max rel err {check.max_relative_error:.3e}{detail}")
    print(f"{len(result.checks)} checks, {len(result.failing)} failing, max relative error {result.max_relative_error:.3e}")


def run_command(args: argparse.Namespace) -> None:
    """Dispatches one parsed command. Raises the package's exceptions unchanged."""
    if args.command == "gradcheck":
        result = run_gradcheck(args.size)
        _print_gradcheck(result)
        require_passed(result)
        return

    config = load_experiment_config(args.config, seed=args.seed)
    paths = OutputPaths.resolve(config, args.out)

    if args.command == "generate":
        for path in run_generate(config, paths):
            print(path)
    elif args.command == "train":
        for summary in run_train(config, paths, args.strategy):
            scores = ", ".join(f"{task} {values['accuracy']:.4f}" for task, values in summary.validation.items())
            print(f"{summary.run}: smoothed loss {summary.final_smoothed_loss:.6f}; held-out accuracy {scores}")
    elif args.command == "eval":
        print(render_text(run_eval(config, paths, args.run)), end="")
    elif args.command == "report":
        print(render_text(run_report(config, paths, args.run)), end="")
    elif args.command == "benchmark":
        result = run_benchmark(config, paths.root / "benchmark", seeds=args.seeds, compound_seeds=args.compound_seeds)
        print(render_summary(result), end="")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        run_command(args)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except DivergenceError as e:
        logger.error(f"Training diverged at step {e.step}: {e}")
        return EXIT_DIVERGENCE
    except (ArtifactMismatchError, DataError) as e:
        logger.error(f"Artifact mismatch: {e}")
        return EXIT_ARTIFACT
    except VerificationError as e:
        logger.error(f"Gradient check failed: {', '.join(e.failed_checks)}")
        return EXIT_VERIFICATION
    except SangamError as e:
        logger.error(f"{type(e).__name__}: {e}", exc_info=True)
        return EXIT_UNEXPECTED
    except Exception as e:
        logger.critical(f"Unexpected error running '{args.command}': {e}", exc_info=True)
        return EXIT_UNEXPECTED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
