"""
Translation scenarios: translate-train for QA, NLI and passage ranking data,
and the two translate-infer strategies for ranking.

Every scenario flattens its records into a list of text units, translates the
units as one batched job (``TranslationJob``) and rebuilds the records from the
translations. A failing record is discarded and counted; it never aborts the job.
"""

import contextlib
import hashlib
import json
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Literal, Optional, Sequence, TypeVar

from loguru import logger

from scripts.models.Backend import TranslationBackend
from scripts.models.Checkpoint import Checkpoint
from scripts.models.Dataset import (
    Answer,
    NLIPair,
    PassageCollection,
    QADataset,
    QAExample,
    QuerySet,
    RunEntry,
    RunFile,
    TextCollection,
)
from scripts.models.Meter import Meter
from scripts.models.Segmenter import SentenceSplitter, group_for_span
from scripts.models.SpanMarker import DEFAULT_DELIMITERS, DelimiterPair, mark, recover
from scripts.models.TranslateError import (
    InvalidSpanError,
    JobInterruptedError,
    LengthMismatchError,
    MissingPassageIdError,
    SpanMarkError,
    UnknownQueryError,
    UsageError,
)
from scripts.settings.common import PROGRESS_EVERY_BATCHES
from scripts.settings.translation import DEFAULT_QA_MODE, DEFAULT_TOP_K, QA_MODES

QAMode = Literal["per-sentence", "whole-context"]
Collection = TypeVar("Collection", bound=TextCollection)


@dataclass
class DiscardReport:
    """
    Bookkeeping of kept and discarded records; kept + discarded == total_examples.

    billed_characters is the pipeline's own count of characters in successfully
    translated units, wasted_characters the part of it spent on records that were
    discarded afterwards.
    """

    total_examples: int = 0
    kept: int = 0
    discarded_by_reason: Counter = field(default_factory=Counter)
    billed_characters: int = 0
    wasted_characters: int = 0

    @property
    def discarded(self) -> int:
        return sum(self.discarded_by_reason.values())

    @property
    def discard_rate(self) -> float:
        return self.discarded / self.total_examples if self.total_examples else 0.0

    def keep(self):
        self.total_examples += 1
        self.kept += 1

    def discard(self, reason: str, wasted_characters: int = 0):
        self.total_examples += 1
        self.discarded_by_reason[reason] += 1
        self.wasted_characters += wasted_characters

    def is_consistent(self) -> bool:
        return self.kept + self.discarded == self.total_examples

    def to_dict(self) -> dict:
        return {
            "total_examples": self.total_examples,
            "kept": self.kept,
            "discarded": self.discarded,
            "discard_rate": round(self.discard_rate, 6),
            "discarded_by_reason": dict(sorted(self.discarded_by_reason.items())),
            "billed_characters": self.billed_characters,
            "wasted_characters": self.wasted_characters,
        }


def job_fingerprint(task: str, units: Iterable[str], backend: TranslationBackend, options: dict) -> str:
    """Hash of everything that determines a job's output: task, options, backend and input."""
    header = json.dumps(
        {"task": task, "options": options, "backend": backend.config.fingerprint()},
        ensure_ascii=False,
        sort_keys=True,
    )
    digest = hashlib.sha256(header.encode("utf-8"))
    # one JSON string per line keeps unit boundaries unambiguous
    for unit in units:
        digest.update(b"\n" + json.dumps(unit, ensure_ascii=False).encode("utf-8"))
    return digest.hexdigest()


class TranslationJob:
    """
    Translates a flat list of text units in greedy, input-ordered batches.

    Batches run through the backend's bounded in-flight pool and are committed in
    order; with a checkpoint, each committed batch is persisted so that a rerun
    continues after the last one. The result is identical to an uninterrupted run
    for a deterministic backend, whatever the in-flight limit.
    """

    def __init__(
        self,
        task: str,
        units: Sequence[str],
        backend: TranslationBackend,
        checkpoint: Optional[Path] = None,
        options: Optional[dict] = None,
        job: Optional[dict] = None,
        stop_after: Optional[int] = None,
    ):
        """
        :param task: Job name recorded in logs and in the checkpoint.
        :param units: Texts to translate, in order.
        :param backend: Translation backend; its meter is charged.
        :param checkpoint: Checkpoint file; an existing one for the same job is resumed.
        :param options: Settings folded into the job fingerprint.
        :param job: Job description stored in the checkpoint (used by ``resume``).
        :param stop_after: Stop with JobInterruptedError once this many batches are committed.
        """
        self.task = task
        self.units = list(units)
        self.backend = backend
        self.checkpoint = Checkpoint(checkpoint) if checkpoint else None
        self.job = job or {}
        self.stop_after = stop_after
        size = backend.config.max_batch_size
        self.batches = [self.units[i : i + size] for i in range(0, len(self.units), size)]
        self.job_id = job_fingerprint(task, self.units, backend, options or {})
        self.meter = Meter()

    def _restore(self) -> tuple[int, dict[int, Optional[list[str]]]]:
        if self.checkpoint is None:
            return 0, {}
        if self.checkpoint.load():
            self.checkpoint.verify(self.job_id)
            committed = self.checkpoint.read_batches()
            self.meter.restore(self.checkpoint.meter)
            self.backend.meter.merge(self.checkpoint.meter)
            first = self.checkpoint.last_completed_batch + 1
            if first >= len(self.batches):
                logger.info(f"{self.task}: checkpoint already complete, nothing to translate")
            else:
                logger.info(
                    f"{self.task}: resuming at batch {first + 1}/{len(self.batches)} "
                    f"from {self.checkpoint.path}"
                )
            return first, committed
        self.checkpoint.start(self.job_id, self.task, len(self.batches), self.job)
        return 0, {}

    def run(self) -> list[Optional[str]]:
        """
        :return: One translation per unit; None where the unit's batch was rejected.
        :raises JobInterruptedError: ``stop_after`` batches were committed.
        :raises StaleCheckpointError: the checkpoint belongs to another job.
        """
        first, committed = self._restore()
        total = len(self.batches)
        logger.info(
            f"{self.task}: {len(self.units)} units in {total} batches "
            f"(batch size {self.backend.config.max_batch_size}, "
            f"in flight {self.backend.config.max_in_flight})"
        )
        started = time.perf_counter()
        try:
            outcomes = self.backend.translate_batches(self.batches[first:], first_index=first)
            with contextlib.closing(outcomes):
                for outcome in outcomes:
                    self.meter.record_attempts(outcome.attempts, outcome.retried_characters)
                    if outcome.ok:
                        self.meter.record_batch(outcome.texts, outcome.outputs, outcome.latency)
                    else:
                        self.meter.record_rejected(outcome.texts)
                    committed[outcome.index] = outcome.outputs
                    if self.checkpoint:
                        self.checkpoint.commit(
                            outcome.index, outcome.outputs, outcome.error, self.meter.snapshot()
                        )

                    done = outcome.index + 1
                    if done % PROGRESS_EVERY_BATCHES == 0 or done == total:
                        logger.info(f"{self.task}: {done}/{total} batches translated")
                    else:
                        logger.debug(f"{self.task}: batch {done}/{total} committed")
                    if self.stop_after is not None and done >= self.stop_after:
                        logger.warning(f"{self.task}: stopping after {done} batches")
                        raise JobInterruptedError(done, total, self.meter.characters_submitted)
        finally:
            elapsed = time.perf_counter() - started
            self.meter.add_wall_seconds(elapsed)
            self.backend.meter.add_wall_seconds(elapsed)

        translations: list[Optional[str]] = []
        for index, batch in enumerate(self.batches):
            outputs = committed.get(index)
            translations.extend(outputs if outputs is not None else [None] * len(batch))
        return translations


def _billed(units: Sequence[str], translations: Sequence[Optional[str]]) -> int:
    return sum(len(u) for u, t in zip(units, translations) if t is not None)


def _split_whitespace(text: str) -> tuple[str, str, str]:
    core = text.strip()
    if not core:
        return text, "", ""
    leading = text[: len(text) - len(text.lstrip())]
    trailing = text[len(text.rstrip()) :]
    return leading, core, trailing


class _UnitList:
    """Collects translation units; pieces keep the whitespace that is not sent."""

    def __init__(self):
        self.units: list[str] = []

    def add(self, text: str) -> tuple[str, Optional[int], str]:
        leading, core, trailing = _split_whitespace(text)
        if not core:
            return leading, None, ""
        self.units.append(core)
        return leading, len(self.units) - 1, trailing

    def add_raw(self, text: str) -> int:
        self.units.append(text)
        return len(self.units) - 1


def _assemble(
    pieces: Sequence[tuple[str, Optional[int], str]], translations: Sequence[Optional[str]]
) -> Optional[str]:
    out = []
    for leading, index, trailing in pieces:
        if index is None:
            out.append(leading)
            continue
        translated = translations[index]
        if translated is None:
            return None
        out.append(leading + translated + trailing)
    return "".join(out)


@dataclass
class _QAPlan:
    example: QAExample
    context: list[tuple[str, Optional[int], str]]
    question: list[tuple[str, Optional[int], str]]

    def unit_indices(self) -> list[int]:
        return [i for _, i, _ in self.context + self.question if i is not None]


def _trimmed(answer: Answer) -> Answer:
    """Drops whitespace around the answer text, shifting the offset to match."""
    core = answer.text.strip()
    if not core or core == answer.text:
        return answer
    return Answer(core, answer.answer_start + len(answer.text) - len(answer.text.lstrip()))


def translate_qa_dataset(
    dataset: QADataset,
    backend: TranslationBackend,
    delimiters: DelimiterPair = DEFAULT_DELIMITERS,
    mode: QAMode = DEFAULT_QA_MODE,
    splitter: Optional[SentenceSplitter] = None,
    checkpoint: Optional[Path] = None,
    stop_after: Optional[int] = None,
    job: Optional[dict] = None,
) -> tuple[QADataset, DiscardReport]:
    """
    Translates contexts and questions while carrying the first answer's span along.

    Per example: mark the first answer with the delimiters, split the context into
    sentences with the answer's sentences merged into one unit (per-sentence mode)
    or keep it whole, translate context units and the question, reassemble, then
    recover the span from the delimiters. Examples whose delimiters do not survive
    are discarded by reason.
    """
    if mode not in QA_MODES:
        raise UsageError(f"unknown QA mode '{mode}', expected one of {QA_MODES}")
    splitter = splitter or SentenceSplitter()
    report = DiscardReport()
    units = _UnitList()
    plans: list[_QAPlan] = []
    skipped: list[str] = []

    for example in dataset.examples:
        try:
            if not example.answers:
                raise InvalidSpanError("example has no answer to carry")
            answer = _trimmed(example.answers[0])
            marked = mark(example.context, answer.answer_start, answer.text, delimiters)
        except SpanMarkError as e:
            logger.debug(f"Discarding {example.id} before translation: {e}")
            skipped.append(e.reason)
            continue

        if mode == "whole-context":
            texts = [marked.text]
        else:
            start, end = answer.answer_start, answer.answer_start + len(answer.text)
            segmentation = group_for_span(splitter.split(example.context), (start, end))
            holder = segmentation.index_covering(start, end)
            texts = [
                mark(s.text, start - s.start, answer.text, delimiters).text
                if i == holder
                else s.text
                for i, s in enumerate(segmentation)
            ]
        plans.append(
            _QAPlan(
                example,
                [units.add(text) for text in texts],
                [units.add(example.question)],
            )
        )

    for reason in skipped:
        report.discard(reason)

    translations = TranslationJob(
        "translate-qa",
        units.units,
        backend,
        checkpoint,
        options={"delimiters": list(delimiters.tokens()), "mode": mode},
        job=job,
        stop_after=stop_after,
    ).run()
    report.billed_characters = _billed(units.units, translations)

    kept: list[QAExample] = []
    for plan in plans:
        spent = sum(
            len(units.units[i]) for i in plan.unit_indices() if translations[i] is not None
        )
        context = _assemble(plan.context, translations)
        question = _assemble(plan.question, translations)
        if context is None or question is None:
            report.discard(LengthMismatchError.reason, spent)
            continue
        try:
            span = recover(context, delimiters)
        except SpanMarkError as e:
            logger.debug(f"Discarding {plan.example.id}: {e}")
            report.discard(e.reason, spent)
            continue
        kept.append(
            QAExample(
                plan.example.id,
                span.context,
                question,
                (Answer(span.answer_text, span.answer_start),),
                plan.example.title,
                source_answers=plan.example.answers,
            )
        )
        report.keep()

    logger.info(
        f"translate-qa: kept {report.kept}/{report.total_examples} "
        f"({report.discard_rate:.1%} discarded) {dict(report.discarded_by_reason)}"
    )
    translated = QADataset(
        tuple(kept), backend.config.target_lang, dataset.version, dataset.source
    )
    return translated, report


def translate_nli_dataset(
    pairs: Sequence[NLIPair],
    backend: TranslationBackend,
    checkpoint: Optional[Path] = None,
    stop_after: Optional[int] = None,
    job: Optional[dict] = None,
) -> tuple[tuple[NLIPair, ...], DiscardReport]:
    """
    Translates premise and hypothesis independently, one segment each; labels are copied.
    """
    units = []
    for pair in pairs:
        units.extend((pair.premise, pair.hypothesis))
    translations = TranslationJob(
        "translate-nli", units, backend, checkpoint, job=job, stop_after=stop_after
    ).run()

    report = DiscardReport(billed_characters=_billed(units, translations))
    kept: list[NLIPair] = []
    for i, pair in enumerate(pairs):
        premise, hypothesis = translations[2 * i], translations[2 * i + 1]
        if premise is None or hypothesis is None:
            spent = sum(len(u) for u, t in zip(units[2 * i : 2 * i + 2], (premise, hypothesis)) if t is not None)
            report.discard(LengthMismatchError.reason, spent)
            continue
        kept.append(replace(pair, premise=premise, hypothesis=hypothesis))
        report.keep()
    logger.info(f"translate-nli: kept {report.kept}/{report.total_examples}")
    return tuple(kept), report


def _translate_collection(
    task: str,
    collection: Collection,
    backend: TranslationBackend,
    checkpoint: Optional[Path],
    stop_after: Optional[int],
    job: Optional[dict],
) -> tuple[Collection, DiscardReport]:
    keys = list(collection)
    units = [collection[key] for key in keys]
    translations = TranslationJob(
        task, units, backend, checkpoint, job=job, stop_after=stop_after
    ).run()

    report = DiscardReport(billed_characters=_billed(units, translations))
    kept: dict[str, str] = {}
    for key, translated in zip(keys, translations):
        if translated is None:
            report.discard(LengthMismatchError.reason)
            continue
        kept[key] = translated
        report.keep()
    logger.info(f"{task}: kept {report.kept}/{report.total_examples}")
    return type(collection)(kept), report


def translate_collection(
    collection: PassageCollection,
    backend: TranslationBackend,
    checkpoint: Optional[Path] = None,
    stop_after: Optional[int] = None,
    job: Optional[dict] = None,
) -> tuple[PassageCollection, DiscardReport]:
    """Translates each passage as a single piece of text; ids are preserved."""
    return _translate_collection(
        "translate-passages", collection, backend, checkpoint, stop_after, job
    )


def translate_queries(
    queries: QuerySet,
    backend: TranslationBackend,
    checkpoint: Optional[Path] = None,
    stop_after: Optional[int] = None,
    job: Optional[dict] = None,
) -> tuple[QuerySet, DiscardReport]:
    """Translates each query as a single segment; ids are preserved."""
    return _translate_collection(
        "translate-queries", queries, backend, checkpoint, stop_after, job
    )


def run_strategy1(queries: QuerySet, backend: TranslationBackend) -> QuerySet:
    """
    Translate-infer strategy 1: all incoming queries are translated before any
    reranking; the collection is translated once, up front (see translate_collection).
    The characters charged here are the recurring, per-query cost.
    """
    translated, report = translate_queries(queries, backend)
    if report.discarded:
        logger.warning(f"strategy 1: {report.discarded} queries could not be translated")
    logger.info(
        f"strategy 1: {len(translated)} queries translated, "
        f"{report.billed_characters} recurring characters"
    )
    return translated


@dataclass(frozen=True)
class BundlePassage:
    passage_id: str
    rank: int
    text: str


@dataclass(frozen=True)
class RerankBundle:
    """A translated query with its top-k translated passages, ready for a reranker."""

    query_id: str
    query: str
    passages: tuple[BundlePassage, ...]
    billed_characters: int

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "query": self.query,
            "passages": [
                {"passage_id": p.passage_id, "rank": p.rank, "text": p.text}
                for p in self.passages
            ],
            "billed_characters": self.billed_characters,
        }


def _top_k(
    query_id: str,
    ranking: Sequence[RunEntry],
    collection: PassageCollection,
    queries: QuerySet,
    k: int,
) -> list[RunEntry]:
    if query_id not in queries or not ranking:
        raise UnknownQueryError(f"query '{query_id}' has no query text or no run entries")
    top = list(ranking[:k])
    missing = [e.passage_id for e in top if e.passage_id not in collection]
    if missing:
        raise MissingPassageIdError(
            f"query '{query_id}': passages {missing[:5]} not in the collection"
        )
    return top


def run_strategy2_all(
    run: RunFile,
    collection: PassageCollection,
    queries: QuerySet,
    backend: TranslationBackend,
    k: int = DEFAULT_TOP_K,
    query_ids: Optional[Sequence[str]] = None,
    checkpoint: Optional[Path] = None,
    stop_after: Optional[int] = None,
    job: Optional[dict] = None,
) -> list[RerankBundle]:
    """
    Translate-infer strategy 2 over many queries: each query and its top-k passages
    are translated at request time. Passages are translated once per query they
    are retrieved for, so each bundle is billed |query| + sum of its passage lengths.

    :raises UnknownQueryError: a requested query has no text or no run entries.
    :raises MissingPassageIdError: the run references a passage absent from the collection.
    :raises LengthMismatchError: the backend rejected a batch; a bundle cannot be partial.
    """
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    rankings = run.rankings()
    selected = list(query_ids) if query_ids is not None else list(rankings)
    plans: list[tuple[str, list[RunEntry], int]] = []
    units: list[str] = []
    for query_id in selected:
        top = _top_k(query_id, rankings.get(query_id, []), collection, queries, k)
        plans.append((query_id, top, len(units)))
        units.append(queries[query_id])
        units.extend(collection[e.passage_id] for e in top)

    translations = TranslationJob(
        "strategy2",
        units,
        backend,
        checkpoint,
        options={"k": k},
        job=job,
        stop_after=stop_after,
    ).run()
    if any(t is None for t in translations):
        raise LengthMismatchError(len(units), sum(t is not None for t in translations))

    bundles = []
    for query_id, top, offset in plans:
        span = slice(offset, offset + 1 + len(top))
        bundles.append(
            RerankBundle(
                query_id,
                translations[offset],
                tuple(
                    BundlePassage(e.passage_id, e.rank, text)
                    for e, text in zip(top, translations[offset + 1 : span.stop])
                ),
                sum(len(u) for u in units[span]),
            )
        )
    logger.info(
        f"strategy 2: {len(bundles)} bundles, "
        f"{sum(b.billed_characters for b in bundles)} characters"
    )
    return bundles


def run_strategy2(
    query_id: str,
    run: RunFile,
    collection: PassageCollection,
    queries: QuerySet,
    backend: TranslationBackend,
    k: int = DEFAULT_TOP_K,
) -> RerankBundle:
    """Translate-infer strategy 2 for one query: the query plus its top-k passages, in rank order."""
    return run_strategy2_all(run, collection, queries, backend, k, [query_id])[0]
