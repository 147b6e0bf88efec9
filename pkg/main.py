import argparse
import json
import sys
from pathlib import Path

from loguru import logger

from scripts.controllers.functions import format_exception, write_json
from scripts.controllers.start_reports import (
    STATS_TASKS,
    run_cost_report,
    run_reproduce_table,
    run_score,
    run_stats,
)
from scripts.controllers.start_translate_job import resume_job, start_translate_job
from scripts.models.CostModel import format_table
from scripts.models.JobConfig import OFFSET_POLICIES, JobConfig
from scripts.models.TranslateError import (
    JobInterruptedError,
    TranslationToolkitError,
    UsageError,
)
from scripts.settings.common import EXIT_JOB_FAILED, EXIT_OK, EXIT_USAGE, LOGGER_FORMAT
from scripts.settings.cost import DEFAULT_PRICING_PROFILE, SCENARIOS
from scripts.settings.translation import DEFAULT_MRR_CUTOFF, DEFAULT_TOP_K, QA_MODES

logger.remove()
log_level = "DEBUG" if __debug__ else "INFO"
logger.add(sys.stderr, level=log_level, format=LOGGER_FORMAT)

# Subcommand -> JobConfig task
TRANSLATE_COMMANDS = {
    "translate-qa": "qa",
    "translate-nli": "nli",
    "translate-passages": "passages",
    "translate-queries": "queries",
    "strategy2": "strategy2",
}


class ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors with exit code 1, naming the offending flag."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_translate_arguments(parser: argparse.ArgumentParser, task: str):
    # Defaults are None so that --config values are only overridden by given flags
    if task == "strategy2":
        parser.add_argument("--run", help="Run file (qid, pid, rank).")
        parser.add_argument("--collection", help="Passage collection TSV.")
        parser.add_argument("--queries", help="Query TSV.")
        parser.add_argument("--k", type=int, help="Passages per query (default 1000).")
    else:
        parser.add_argument("--input", help="Dataset file to translate.")
    parser.add_argument("--output", help="Output directory.")
    parser.add_argument(
        "--backend", help="mock:<kind>[:params] or an http(s) endpoint (default mock:identity)."
    )
    parser.add_argument("--source-lang", help="Source language (default en).")
    parser.add_argument("--target-lang", help="Target language (default pt).")
    parser.add_argument("--batch-size", type=int, help="Segments per request (default 32).")
    parser.add_argument("--max-in-flight", type=int, help="Concurrent batches (default 4).")
    parser.add_argument("--checkpoint", help="Checkpoint file (default <output>/checkpoint.json).")
    parser.add_argument(
        "--resume", action="store_true", default=None, help="Continue from the checkpoint."
    )
    parser.add_argument("--stop-after", type=int, help="Stop after N committed batches.")
    parser.add_argument("--config", help="JSON/YAML job configuration; flags override it.")
    if task == "qa":
        parser.add_argument("--delims", help="Delimiter pair 'START,END'.")
        parser.add_argument("--qa-mode", choices=QA_MODES, help="Context translation unit.")
        parser.add_argument("--offset-policy", choices=OFFSET_POLICIES)
    if task == "nli":
        parser.add_argument("--nli-schema", help="mnli, assin2, plain or a descriptor file.")


def get_args(argv=None):
    """
    Parses command-line arguments.

    Returns:
        argparse.Namespace: Parsed arguments.
    """
    parser = ArgumentParser(
        description="Translate QA, NLI and passage ranking datasets, and estimate the cost."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    for command, task in TRANSLATE_COMMANDS.items():
        _add_translate_arguments(commands.add_parser(command, help=f"Translate ({task})."), task)

    resume = commands.add_parser("resume", help="Continue an interrupted translate job.")
    resume.add_argument("--checkpoint", required=True, help="Checkpoint file of the job.")

    stats = commands.add_parser("stats", help="Character statistics of a dataset.")
    stats.add_argument("--task", required=True, choices=STATS_TASKS)
    stats.add_argument("--input", required=True)
    stats.add_argument("--split", default="train", help="Split name recorded in the output.")
    stats.add_argument("--qa-unit", choices=("example", "paragraph"), default="example")
    stats.add_argument("--nli-schema", default="mnli")
    stats.add_argument("--output", help="Also write the statistics to this JSON file.")

    cost = commands.add_parser("cost-report", help="One-time and recurring translation cost.")
    cost.add_argument("--profile", default=DEFAULT_PRICING_PROFILE, help="Pricing profile name or file.")
    cost.add_argument("--stats", help="Statistics JSON, as written by 'stats'.")
    cost.add_argument("--scenario", choices=SCENARIOS)
    cost.add_argument("--task", choices=("qa", "nli", "ranking"))
    cost.add_argument("--throughput", help="Shipped throughput profile name or a file.")
    cost.add_argument("--train-split")
    cost.add_argument("--infer-split")
    cost.add_argument("--k", type=int, default=DEFAULT_TOP_K, help="Passages per query for strategy 2.")
    cost.add_argument("--format", choices=("table", "json"), default="table")
    cost.add_argument(
        "--reproduce-reference", action="store_true", help="Rebuild the shipped reference cost table."
    )

    score = commands.add_parser("score", help="Score predictions.")
    score.add_argument("--task", required=True, choices=("qa", "nli", "ranking"))
    score.add_argument("--gold")
    score.add_argument("--predictions")
    score.add_argument("--run")
    score.add_argument("--qrels")
    score.add_argument("--k", type=int, default=DEFAULT_MRR_CUTOFF)
    score.add_argument("--nli-schema", default="mnli")
    score.add_argument("--remap", help="'contradiction-to-neutral' or a label mapping file.")
    score.add_argument("--language", help="Language of the articles stripped before EM/F1.")

    args = parser.parse_args(argv)
    if args.command == "cost-report" and not args.reproduce_reference:
        if not args.stats:
            parser.error("the following arguments are required: --stats")
        if not args.scenario:
            parser.error("the following arguments are required: --scenario")
    return args


def job_config_from_args(args: argparse.Namespace) -> JobConfig:
    config = JobConfig.load(Path(args.config)) if args.config else JobConfig()
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "config")
    }
    overrides["task"] = TRANSLATE_COMMANDS[args.command]
    return config.merged(overrides)


def _print_json(document):
    print(json.dumps(document, ensure_ascii=False, indent=2))


def run(args: argparse.Namespace):
    if args.command in TRANSLATE_COMMANDS:
        start_translate_job(job_config_from_args(args))
    elif args.command == "resume":
        resume_job(Path(args.checkpoint))
    elif args.command == "stats":
        document = run_stats(args.task, Path(args.input), args.split, args.qa_unit, args.nli_schema)
        if args.output:
            write_json(Path(args.output), document)
        _print_json(document)
    elif args.command == "cost-report":
        if args.reproduce_reference:
            table, discrepancies = run_reproduce_table(args.profile)
            print(table)
            for discrepancy in discrepancies:
                print(f"not reproduced: {discrepancy}")
            return
        report = run_cost_report(
            args.scenario,
            Path(args.stats),
            args.profile,
            args.throughput,
            args.task,
            args.train_split,
            args.infer_split,
            args.k,
        )
        if args.format == "json":
            _print_json(report.to_dict())
        else:
            print(format_table([report]))
    elif args.command == "score":
        _print_json(
            run_score(
                args.task,
                Path(args.gold) if args.gold else None,
                Path(args.predictions) if args.predictions else None,
                Path(args.run) if args.run else None,
                Path(args.qrels) if args.qrels else None,
                args.k,
                args.nli_schema,
                args.remap,
                args.language,
            )
        )


def main(argv=None) -> int:
    """
    Entry point; returns the process exit code.
    """
    args = get_args(argv)
    try:
        run(args)
    except UsageError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except JobInterruptedError as e:
        logger.warning(str(e))
        return EXIT_JOB_FAILED
    except TranslationToolkitError as e:
        logger.error(f"{e.reason}: {e}")
        return EXIT_JOB_FAILED
    except Exception as e:
        logger.error(f"Unexpected error: {e}\nTraceback: {format_exception(e)}")
        return EXIT_JOB_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
