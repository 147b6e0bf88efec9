import json
from pathlib import Path
from typing import Optional

from loguru import logger

from scripts.controllers.functions import (
    load_mapping,
    load_nli_schema,
    read_input,
)
from scripts.models.CostModel import (
    CostReport,
    DatasetStats,
    ThroughputProfile,
    build_report,
    dataset_stats,
    format_table,
    load_profile,
    reference_throughput,
    reproduce_reference_table,
)
from scripts.models.Dataset import (
    parse_collection,
    parse_nli,
    parse_qa,
    parse_qrels,
    parse_queries,
    parse_run,
)
from scripts.models.Metrics import evaluate_nli, evaluate_qa, mrr_at_k
from scripts.models.TranslateError import MalformedSchemaError, UsageError
from scripts.settings.cost import INFER_SPLITS, REFERENCE_THROUGHPUT, TRAIN_SPLITS
from scripts.settings.translation import ARTICLES, CONTRADICTION_TO_NEUTRAL, DEFAULT_TOP_K

STATS_TASKS = ("qa", "nli", "passages", "queries")


def run_stats(
    task: str,
    input_path: Path,
    split: str = "train",
    qa_unit: str = "example",
    nli_schema: str = "mnli",
) -> dict:
    """
    Character statistics of a dataset file, in the layout ``cost-report --stats`` reads.
    """
    data = read_input(input_path)
    if task == "qa":
        dataset = parse_qa(data, source=str(input_path), require_answers=False)
    elif task == "nli":
        dataset = parse_nli(data, load_nli_schema(nli_schema))
    elif task == "passages":
        dataset = parse_collection(data)
    elif task == "queries":
        dataset = parse_queries(data)
    else:
        raise UsageError(f"--task must be one of {STATS_TASKS}, got '{task}'")
    stats = dataset_stats(dataset, split, qa_unit)
    cost_task = "ranking" if task in ("passages", "queries") else task
    logger.info(f"{input_path}: {stats[split].characters:,} characters in {stats[split].examples:,} records")
    return {"task": cost_task, "splits": stats.to_dict()}


def _default_throughput(task: str, scenario: str) -> Optional[ThroughputProfile]:
    if task == "ranking":
        key = "ranking-s2" if scenario == "translate-infer-s2" else "ranking-s1"
    else:
        key = task
    return reference_throughput(key) if key in REFERENCE_THROUGHPUT else None


def run_cost_report(
    scenario: str,
    stats_path: Path,
    profile: str,
    throughput: Optional[str] = None,
    task: Optional[str] = None,
    train_split: Optional[str] = None,
    infer_split: Optional[str] = None,
    k: int = DEFAULT_TOP_K,
) -> CostReport:
    """
    Costs of one scenario from a statistics file written by ``stats`` (or by hand).

    :param throughput: A shipped profile name or a JSON/YAML file; defaults to the
        shipped profile of the statistics' task.
    """
    document = load_mapping(stats_path, "--stats")
    task = task or document.get("task", "")
    splits = document["splits"] if "splits" in document else {
        name: split for name, split in document.items() if isinstance(split, dict)
    }
    stats = DatasetStats.from_dict(splits)

    if throughput is None:
        measured = _default_throughput(task, scenario)
    elif throughput in REFERENCE_THROUGHPUT:
        measured = reference_throughput(throughput)
    else:
        measured = ThroughputProfile.from_dict(load_mapping(Path(throughput), "--throughput"))

    return build_report(
        scenario,
        stats,
        load_profile(profile),
        measured,
        train_split=train_split or TRAIN_SPLITS.get(task, "train"),
        infer_split=infer_split or INFER_SPLITS.get(task, "test"),
        k=k,
        task=task,
    )


def run_reproduce_table(profile: str) -> tuple[str, list[str]]:
    reports, discrepancies = reproduce_reference_table(load_profile(profile))
    return format_table(reports), [str(d) for d in discrepancies]


def _read_label_predictions(data: bytes) -> dict[str, str]:
    predictions = {}
    for number, line in enumerate(data.decode("utf-8-sig").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedSchemaError(f"predictions line {number}: expected 'id<TAB>label'")
        predictions[fields[0]] = fields[1]
    return predictions


def run_score(
    task: str,
    gold: Optional[Path] = None,
    predictions: Optional[Path] = None,
    run: Optional[Path] = None,
    qrels: Optional[Path] = None,
    k: int = 10,
    nli_schema: str = "mnli",
    remap: Optional[str] = None,
    language: Optional[str] = None,
) -> dict:
    """
    Scores predictions: EM/F1 for QA, accuracy for NLI, MRR@k for ranking.
    """
    if task == "ranking":
        if not run or not qrels:
            raise UsageError("--run and --qrels are required for ranking scores")
        judged = parse_run(read_input(run, "--run"), parse_qrels(read_input(qrels, "--qrels")))
        return {"mrr_at_k": mrr_at_k(judged, k=k), "k": k, "queries": len(judged.qrels)}

    if not gold or not predictions:
        raise UsageError("--gold and --predictions are required")
    if task == "qa":
        dataset = parse_qa(read_input(gold, "--gold"), source=str(gold), require_answers=False)
        answers = json.loads(read_input(predictions, "--predictions").decode("utf-8-sig"))
        if not isinstance(answers, dict):
            raise MalformedSchemaError("--predictions: expected a JSON map of id to answer")
        articles = ARTICLES.get(language, ARTICLES["en"]) if language else None
        return evaluate_qa(dataset, answers, articles).to_dict()
    if task == "nli":
        pairs = parse_nli(read_input(gold, "--gold"), load_nli_schema(nli_schema))
        labels = _read_label_predictions(read_input(predictions, "--predictions"))
        mapping = None
        if remap == "contradiction-to-neutral":
            mapping = CONTRADICTION_TO_NEUTRAL
        elif remap:
            mapping = load_mapping(Path(remap), "--remap")
        return {"accuracy": evaluate_nli(pairs, labels, mapping), "total": len(pairs)}
    raise UsageError(f"--task must be qa, nli or ranking, got '{task}'")
