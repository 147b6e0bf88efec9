from pathlib import Path

# Logging configuration
LOGGER_FORMAT = (
    "<green>{time:MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
    "{process} - <level>{message}</level>"
)

# Output file names, written into the job output directory
RUN_LOG_YAML = "run_log.yaml"  # One entry per finished (or interrupted) job
ERROR_LOG_FILE = "error.txt"  # Failures with tracebacks
JOB_CONFIG_FILE = "job_config.json"  # Effective configuration of the run
DISCARD_REPORT_FILE = "discard_report.json"
METER_SUMMARY_FILE = "meter.json"
DEFAULT_CHECKPOINT_NAME = "checkpoint.json"
CHECKPOINT_PARTS_SUFFIX = ".parts.jsonl"  # Per-batch outputs next to the checkpoint

# Abbreviation list for the sentence splitter
RESOURCES_DIR = Path(__file__).resolve().parent.parent / "resources"
ABBREVIATIONS_FILE = RESOURCES_DIR / "abbreviations.txt"

# Process exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_JOB_FAILED = 2

# Log progress every n committed batches
PROGRESS_EVERY_BATCHES = 50

# Translated outputs, per task
OUTPUT_FILES = {
    "qa": "translated_qa.json",
    "nli": "translated_nli.tsv",
    "passages": "collection.tsv",
    "queries": "queries.tsv",
    "strategy2": "bundles.jsonl",
}
