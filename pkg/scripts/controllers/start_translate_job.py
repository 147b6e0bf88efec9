import json
from datetime import datetime
from pathlib import Path
from typing import Optional

from loguru import logger

from scripts.controllers.functions import (
    format_exception,
    format_timedelta,
    load_nli_schema,
    read_input,
    write_json,
    write_output,
)
from scripts.models.Backend import TranslationBackend, backend_summary, make_backend
from scripts.models.Checkpoint import Checkpoint
from scripts.models.Dataset import (
    parse_collection,
    parse_nli,
    parse_qa,
    parse_queries,
    parse_run,
    write_collection,
    write_nli,
    write_qa,
    write_queries,
)
from scripts.models.JobConfig import JobConfig
from scripts.models.Log import ErrorLog, RunLog
from scripts.models.Pipeline import (
    DiscardReport,
    run_strategy2_all,
    translate_collection,
    translate_nli_dataset,
    translate_qa_dataset,
    translate_queries,
)
from scripts.models.TranslateError import JobInterruptedError, UsageError
from scripts.settings.common import (
    DISCARD_REPORT_FILE,
    JOB_CONFIG_FILE,
    METER_SUMMARY_FILE,
    OUTPUT_FILES,
)


def _translate_qa(config: JobConfig, backend: TranslationBackend) -> DiscardReport:
    dataset = parse_qa(
        read_input(config.input),
        source=config.input,
        language=config.source_lang,
        offset_policy=config.offset_policy,
    )
    translated, report = translate_qa_dataset(
        dataset,
        backend,
        config.delimiter_pair(),
        config.qa_mode,
        checkpoint=config.checkpoint_path,
        stop_after=config.stop_after,
        job=config.job_description(),
    )
    write_output(config.output_dir / OUTPUT_FILES["qa"], write_qa(translated))
    return report


def _translate_nli(config: JobConfig, backend: TranslationBackend) -> DiscardReport:
    schema = load_nli_schema(config.nli_schema)
    pairs = parse_nli(read_input(config.input), schema)
    translated, report = translate_nli_dataset(
        pairs,
        backend,
        checkpoint=config.checkpoint_path,
        stop_after=config.stop_after,
        job=config.job_description(),
    )
    write_output(config.output_dir / OUTPUT_FILES["nli"], write_nli(translated, schema))
    return report


def _translate_passages(config: JobConfig, backend: TranslationBackend) -> DiscardReport:
    translated, report = translate_collection(
        parse_collection(read_input(config.input)),
        backend,
        checkpoint=config.checkpoint_path,
        stop_after=config.stop_after,
        job=config.job_description(),
    )
    write_output(config.output_dir / OUTPUT_FILES["passages"], write_collection(translated))
    return report


def _translate_queries(config: JobConfig, backend: TranslationBackend) -> DiscardReport:
    translated, report = translate_queries(
        parse_queries(read_input(config.input)),
        backend,
        checkpoint=config.checkpoint_path,
        stop_after=config.stop_after,
        job=config.job_description(),
    )
    write_output(config.output_dir / OUTPUT_FILES["queries"], write_queries(translated))
    return report


def _strategy2(config: JobConfig, backend: TranslationBackend) -> DiscardReport:
    bundles = run_strategy2_all(
        parse_run(read_input(config.run, "--run")),
        parse_collection(read_input(config.collection, "--collection")),
        parse_queries(read_input(config.queries, "--queries")),
        backend,
        k=config.k,
        checkpoint=config.checkpoint_path,
        stop_after=config.stop_after,
        job=config.job_description(),
    )
    lines = "".join(json.dumps(b.to_dict(), ensure_ascii=False) + "\n" for b in bundles)
    write_output(config.output_dir / OUTPUT_FILES["strategy2"], lines.encode("utf-8"))
    report = DiscardReport(billed_characters=sum(b.billed_characters for b in bundles))
    for _ in bundles:
        report.keep()
    return report


_RUNNERS = {
    "qa": _translate_qa,
    "nli": _translate_nli,
    "passages": _translate_passages,
    "queries": _translate_queries,
    "strategy2": _strategy2,
}


def start_translate_job(
    config: JobConfig, backend: Optional[TranslationBackend] = None
) -> DiscardReport:
    """
    Runs one translate job and writes its outputs into the output directory.

    The meter summary and a run log entry are written whatever the outcome;
    the discard report too, holding only the billing so far when the job was
    interrupted before its records were rebuilt.

    :param config: Job configuration, validated here.
    :param backend: Backend to use instead of the one ``config.backend`` names.
    :raises JobInterruptedError: the job stopped after ``config.stop_after`` batches.
    """
    config.validate()
    output_dir = config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    write_json(output_dir / JOB_CONFIG_FILE, config.to_dict())

    checkpoint = Checkpoint(config.checkpoint_path)
    if not config.resume and checkpoint.path.exists():
        logger.info(f"Starting over: removing earlier checkpoint {checkpoint.path}")
        checkpoint.remove_file()

    backend = backend or make_backend(
        config.backend_config(), delimiters=config.delimiter_pair().tokens()
    )
    started = datetime.now()
    log_dic = {"task": config.task, "backend": config.backend, "input": config.input}
    report: Optional[DiscardReport] = None
    logger.info(f"Translating {config.task} with {config.backend} into {output_dir}")
    try:
        with backend:
            report = _RUNNERS[config.task](config, backend)
        write_json(output_dir / DISCARD_REPORT_FILE, report.to_dict())
        log_dic.update(status="completed", **report.to_dict())
        logger.success(
            f"{config.task}: {report.kept} kept, {report.discarded} discarded, "
            f"{backend.meter.characters_submitted:,} characters billed"
        )
        return report
    except JobInterruptedError as e:
        partial = DiscardReport(billed_characters=e.billed_characters).to_dict()
        partial.update(status="interrupted", batches_done=e.batches_done, total_batches=e.total_batches)
        write_json(output_dir / DISCARD_REPORT_FILE, partial)
        log_dic.update(status="interrupted", batches_done=e.batches_done)
        logger.warning(f"{config.task}: {e}; rerun with --resume to continue")
        raise
    except Exception as e:
        log_dic.update(status="failed", error=f"{e.__class__.__name__}: {e}")
        ErrorLog(output_dir).write(f"{config.task} failed: {e}", format_exception(e))
        raise
    finally:
        ended = datetime.now()
        write_json(output_dir / METER_SUMMARY_FILE, backend_summary(backend))
        log_dic.update(
            {
                "started time": started.strftime("%Y-%m-%d %H:%M:%S"),
                "ended time": ended.strftime("%Y-%m-%d %H:%M:%S"),
                "elapsed time": format_timedelta(ended - started),
                "characters billed": backend.meter.characters_submitted,
                "requests": backend.meter.requests_made,
            }
        )
        RunLog(output_dir).write(log_dic)


def resume_job(
    checkpoint_path: Path, backend: Optional[TranslationBackend] = None
) -> DiscardReport:
    """
    Continues the job a checkpoint was written for, with the configuration it stored.
    """
    checkpoint = Checkpoint(checkpoint_path)
    if not checkpoint.load():
        raise UsageError(f"--checkpoint: no checkpoint at {checkpoint_path}")
    if not checkpoint.job:
        raise UsageError(f"--checkpoint: {checkpoint_path} does not describe its job")
    config = JobConfig.from_dict(checkpoint.job)
    config.checkpoint = str(checkpoint_path)
    config.resume = True
    logger.info(
        f"Resuming {checkpoint.task} after batch "
        f"{checkpoint.last_completed_batch + 1}/{checkpoint.total_batches}"
    )
    return start_translate_job(config, backend)
