"""
Dataset records and their file formats.

Covers the three task families the pipelines translate:
extractive QA (SQuAD v1.1 JSON), NLI (TSV or JSON lines, described by an
NLISchema) and passage ranking (MS MARCO style collection/queries/run/qrels TSV).

All offsets are character offsets into the decoded text.
"""

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Iterator, Literal, Mapping, Optional, Sequence

from loguru import logger

from scripts.models.TranslateError import (
    DuplicateIdError,
    MalformedSchemaError,
    OffsetMismatchError,
    RaggedRecordError,
    UnknownLabelError,
    UnmappedLabelError,
)
from scripts.settings.translation import NLI_SCHEMAS

OffsetPolicy = Literal["repair", "reject", "raise"]


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise MalformedSchemaError(f"input is not valid UTF-8: {e}") from e


def _lines(data: bytes) -> Iterator[tuple[int, str]]:
    """Yields (line number, line) for non-empty lines, LF or CRLF terminated."""
    for number, line in enumerate(_decode(data).split("\n"), start=1):
        line = line.rstrip("\r")
        if line:
            yield number, line


# Extractive QA


@dataclass(frozen=True)
class Answer:
    text: str
    answer_start: int

    def matches(self, context: str) -> bool:
        end = self.answer_start + len(self.text)
        return 0 <= self.answer_start and context[self.answer_start : end] == self.text


@dataclass(frozen=True)
class QAExample:
    """
    One question over one context.

    source_answers keeps the gold list of the example this one was translated
    from; it is provenance only and does not take part in equality.
    """

    id: str
    context: str
    question: str
    answers: tuple[Answer, ...]
    title: str = ""
    source_answers: tuple[Answer, ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class RejectedExample:
    id: str
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class QADataset:
    examples: tuple[QAExample, ...]
    language: str = ""
    version: str = "1.1"
    source: str = field(default="", compare=False)
    rejected: tuple[RejectedExample, ...] = field(default=(), compare=False)

    def __post_init__(self):
        counts = Counter(example.id for example in self.examples)
        duplicates = sorted(i for i, n in counts.items() if n > 1)
        if duplicates:
            raise DuplicateIdError(f"duplicate QA ids: {duplicates[:5]}")

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[QAExample]:
        return iter(self.examples)


def _require(obj, key: str, kind, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise MalformedSchemaError(f"{where}: missing '{key}'")
    value = obj[key]
    # bool is an int subclass
    if isinstance(value, bool) or not isinstance(value, kind):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise MalformedSchemaError(f"{where}: '{key}' must be {names}")
    return value


def _check_answer(context: str, answer: Answer, policy: OffsetPolicy) -> Answer:
    """
    Validates an answer offset and applies the repair policy.

    :raises OffsetMismatchError: when the offset is wrong and cannot (or must not) be fixed.
    """
    if answer.matches(context):
        return answer
    if policy == "repair" and answer.text and context.count(answer.text) == 1:
        fixed = Answer(answer.text, context.index(answer.text))
        logger.warning(
            f"Repaired answer offset {answer.answer_start} -> {fixed.answer_start} "
            f"for '{answer.text}'"
        )
        return fixed
    raise OffsetMismatchError(
        f"answer '{answer.text}' not found at offset {answer.answer_start}"
    )


def parse_qa(
    data: bytes,
    source: str = "",
    language: str = "",
    offset_policy: OffsetPolicy = "repair",
    require_answers: bool = True,
) -> QADataset:
    """
    Parses a SQuAD v1.1 JSON file (data -> paragraphs -> qas -> answers).

    :param data: Raw file contents.
    :param source: File identity recorded as provenance.
    :param language: Language tag recorded on the dataset; defaults to the file's own
        "language" field when it has one.
    :param offset_policy: 'repair' fixes an offset when the answer text occurs exactly
        once in the context and rejects otherwise; 'reject' drops the example;
        'raise' aborts on the first mismatch.
    :param require_answers: Reject examples without answers (training data).
    :return: The parsed dataset; rejected examples are listed in ``rejected``.
    """
    try:
        document = json.loads(_decode(data))
    except json.JSONDecodeError as e:
        raise MalformedSchemaError(f"invalid JSON: {e}") from e

    articles = _require(document, "data", list, "root")
    version = document.get("version", "1.1")
    language = language or str(document.get("language", ""))
    examples: list[QAExample] = []
    rejected: list[RejectedExample] = []

    for a, article in enumerate(articles):
        where = f"data[{a}]"
        paragraphs = _require(article, "paragraphs", list, where)
        title = article.get("title", "")
        for p, paragraph in enumerate(paragraphs):
            where_p = f"{where}.paragraphs[{p}]"
            context = _require(paragraph, "context", str, where_p)
            for q, qa in enumerate(_require(paragraph, "qas", list, where_p)):
                where_q = f"{where_p}.qas[{q}]"
                qid = str(_require(qa, "id", (str, int), where_q))
                question = _require(qa, "question", str, where_q)
                answers = [
                    Answer(
                        _require(ans, "text", str, f"{where_q}.answers[{i}]"),
                        _require(ans, "answer_start", int, f"{where_q}.answers[{i}]"),
                    )
                    for i, ans in enumerate(_require(qa, "answers", list, where_q))
                ]
                source_answers = tuple(
                    Answer(
                        _require(ans, "text", str, f"{where_q}.source_answers[{i}]"),
                        _require(
                            ans, "answer_start", int, f"{where_q}.source_answers[{i}]"
                        ),
                    )
                    for i, ans in enumerate(qa.get("source_answers", []))
                )

                if require_answers and not answers:
                    rejected.append(RejectedExample(qid, "NoAnswers"))
                    continue
                try:
                    checked = tuple(
                        _check_answer(context, answer, offset_policy)
                        for answer in answers
                    )
                except OffsetMismatchError as e:
                    if offset_policy == "raise":
                        raise OffsetMismatchError(f"{where_q} (id {qid}): {e}") from e
                    logger.debug(f"Rejected QA example {qid}: {e}")
                    rejected.append(RejectedExample(qid, e.reason, str(e)))
                    continue
                examples.append(
                    QAExample(qid, context, question, checked, title, source_answers)
                )

    if rejected:
        logger.warning(f"{len(rejected)} QA examples rejected while parsing {source}")
    return QADataset(tuple(examples), language, version, source, tuple(rejected))


def _answers_json(answers: Iterable[Answer]) -> list[dict]:
    return [{"text": a.text, "answer_start": a.answer_start} for a in answers]


def write_qa(dataset: QADataset) -> bytes:
    """
    Serializes a dataset to SQuAD v1.1 JSON.

    Consecutive examples with the same title form one article and consecutive
    examples with the same context inside it form one paragraph, so the input
    order survives a parse/write round trip.
    """
    articles: list[dict] = []
    for example in dataset.examples:
        if not articles or articles[-1]["title"] != example.title:
            articles.append({"title": example.title, "paragraphs": []})
        paragraphs = articles[-1]["paragraphs"]
        if not paragraphs or paragraphs[-1]["context"] != example.context:
            paragraphs.append({"context": example.context, "qas": []})
        qa = {
            "id": example.id,
            "question": example.question,
            "answers": _answers_json(example.answers),
        }
        if example.source_answers:
            qa["source_answers"] = _answers_json(example.source_answers)
        paragraphs[-1]["qas"].append(qa)

    document: dict = {"version": dataset.version}
    if dataset.language:
        document["language"] = dataset.language
    document["data"] = articles
    return (json.dumps(document, ensure_ascii=False, indent=1) + "\n").encode("utf-8")


# NLI


@dataclass(frozen=True)
class NLISchema:
    """
    Describes how an NLI file is laid out.

    columns names the fields of each record in order (tsv) or the keys read
    from each JSON line (jsonl). 'premise', 'hypothesis' and 'label' are
    required, 'id' is optional (line index is used otherwise) and any other
    column name is carried through as an ignored field.
    """

    layout: Literal["tsv", "jsonl"] = "tsv"
    columns: tuple[str, ...] = ("premise", "hypothesis", "label")
    header: bool = False
    labels: tuple[str, ...] = ("entailment", "neutral", "contradiction")
    label_aliases: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        missing = {"premise", "hypothesis", "label"} - set(self.columns)
        if missing:
            raise MalformedSchemaError(f"NLI schema lacks columns: {sorted(missing)}")
        if self.layout not in ("tsv", "jsonl"):
            raise MalformedSchemaError(f"unknown NLI layout: {self.layout}")

    @classmethod
    def from_dict(cls, descriptor: Mapping) -> "NLISchema":
        return cls(
            layout=descriptor.get("layout", "tsv"),
            columns=tuple(descriptor.get("columns", cls.columns)),
            header=bool(descriptor.get("header", False)),
            labels=tuple(descriptor.get("labels", cls.labels)),
            label_aliases=dict(descriptor.get("label_aliases", {})),
        )

    @classmethod
    def named(cls, name: str) -> "NLISchema":
        try:
            return cls.from_dict(NLI_SCHEMAS[name])
        except KeyError:
            raise MalformedSchemaError(
                f"unknown NLI schema '{name}', known: {sorted(NLI_SCHEMAS)}"
            ) from None

    def canonical_label(self, raw: str) -> str:
        label = self.label_aliases.get(raw, raw)
        if label not in self.labels:
            raise UnknownLabelError(f"label '{raw}' not in {list(self.labels)}")
        return label

    def written_label(self, label: str) -> str:
        for alias, canonical in self.label_aliases.items():
            if canonical == label:
                return alias
        return label


@dataclass(frozen=True)
class NLIPair:
    id: str
    premise: str
    hypothesis: str
    label: str


def parse_nli(data: bytes, schema: NLISchema = NLISchema()) -> tuple[NLIPair, ...]:
    """
    Parses NLI records laid out as declared by the schema.

    :raises RaggedRecordError: a TSV line with the wrong number of fields, or a JSON
        line missing a declared key.
    :raises UnknownLabelError: a label outside the schema's vocabulary.
    """
    pairs: list[NLIPair] = []
    seen: set[str] = set()
    lines = list(_lines(data))
    if schema.layout == "tsv" and schema.header and lines:
        lines = lines[1:]

    for index, (number, line) in enumerate(lines):
        if schema.layout == "tsv":
            fields = line.split("\t")
            if len(fields) != len(schema.columns):
                raise RaggedRecordError(
                    f"line {number}: {len(fields)} fields, expected {len(schema.columns)}"
                )
            record = dict(zip(schema.columns, fields))
        else:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedSchemaError(f"line {number}: {e}") from e
            missing = [c for c in schema.columns if c not in obj]
            if missing:
                raise RaggedRecordError(f"line {number}: missing keys {missing}")
            record = {c: str(obj[c]) for c in schema.columns}

        pair_id = record.get("id", str(index))
        if pair_id in seen:
            raise DuplicateIdError(f"line {number}: duplicate NLI id '{pair_id}'")
        seen.add(pair_id)
        try:
            label = schema.canonical_label(record["label"])
        except UnknownLabelError as e:
            raise UnknownLabelError(f"line {number}: {e}") from e
        pairs.append(NLIPair(pair_id, record["premise"], record["hypothesis"], label))
    return tuple(pairs)


def _check_tsv_field(value: str, what: str):
    if "\t" in value or "\n" in value or "\r" in value:
        raise RaggedRecordError(f"{what} contains a tab or newline: {value[:40]!r}")


def write_nli(pairs: Sequence[NLIPair], schema: NLISchema = NLISchema()) -> bytes:
    """Serializes pairs with the schema's layout; inverse of parse_nli."""
    out: list[str] = []
    if schema.layout == "tsv" and schema.header:
        out.append("\t".join(schema.columns))
    for pair in pairs:
        record = {
            "id": pair.id,
            "premise": pair.premise,
            "hypothesis": pair.hypothesis,
            "label": schema.written_label(pair.label),
        }
        values = [record.get(column, "") for column in schema.columns]
        if schema.layout == "tsv":
            for value in values:
                _check_tsv_field(value, f"NLI pair {pair.id}")
            out.append("\t".join(values))
        else:
            out.append(json.dumps(dict(zip(schema.columns, values)), ensure_ascii=False))
    return "".join(line + "\n" for line in out).encode("utf-8")


def remap_labels(
    pairs: Sequence[NLIPair], mapping: Mapping[str, str]
) -> tuple[NLIPair, ...]:
    """
    Replaces every label through ``mapping``; order and size are unchanged.

    :raises UnmappedLabelError: a label present in ``pairs`` has no mapping.
    """
    unmapped = sorted({pair.label for pair in pairs} - set(mapping))
    if unmapped:
        raise UnmappedLabelError(f"no mapping for labels {unmapped}")
    return tuple(replace(pair, label=mapping[pair.label]) for pair in pairs)


def label_histogram(pairs: Iterable[NLIPair]) -> dict[str, int]:
    return dict(Counter(pair.label for pair in pairs))


# Passage ranking


class TextCollection(Mapping[str, str]):
    """Read-only, insertion-ordered id -> text map."""

    kind = "record"

    def __init__(self, entries: Optional[Mapping[str, str]] = None):
        self._entries = MappingProxyType(dict(entries or {}))

    def __getitem__(self, key: str) -> str:
        return self._entries[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TextCollection):
            return NotImplemented
        return type(self) is type(other) and list(self.items()) == list(other.items())

    def __hash__(self):
        return hash(tuple(self.items()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({len(self)} {self.kind}s)"

    @classmethod
    def parse(cls, data: bytes):
        """Parses lines of 'id<TAB>text'; the text may itself contain no newline."""
        entries: dict[str, str] = {}
        for number, line in _lines(data):
            if "\t" not in line:
                raise RaggedRecordError(f"line {number}: expected 'id<TAB>text'")
            key, text = line.split("\t", 1)
            if key in entries:
                raise DuplicateIdError(f"line {number}: duplicate {cls.kind} id '{key}'")
            entries[key] = text
        return cls(entries)

    def write(self) -> bytes:
        for key, text in self.items():
            _check_tsv_field(key, f"{self.kind} id")
            if "\n" in text or "\r" in text:
                raise RaggedRecordError(f"{self.kind} {key} contains a newline")
        return "".join(f"{key}\t{text}\n" for key, text in self.items()).encode("utf-8")


class PassageCollection(TextCollection):
    kind = "passage"


class QuerySet(TextCollection):
    kind = "query"


def parse_collection(data: bytes) -> PassageCollection:
    return PassageCollection.parse(data)


def write_collection(collection: PassageCollection) -> bytes:
    return collection.write()


def parse_queries(data: bytes) -> QuerySet:
    return QuerySet.parse(data)


def write_queries(queries: QuerySet) -> bytes:
    return queries.write()


@dataclass(frozen=True)
class RunEntry:
    query_id: str
    passage_id: str
    rank: int


@dataclass(frozen=True)
class RunFile:
    """
    A ranked run, optionally with binary relevance judgments.

    Within one query ranks are distinct and no passage appears twice.
    Ranks that do not form 1..n are tolerated and logged.
    """

    entries: tuple[RunEntry, ...]
    qrels: Optional[Mapping[str, frozenset[str]]] = field(default=None, compare=False)

    def __post_init__(self):
        pairs: set[tuple[str, str]] = set()
        ranks: dict[str, set[int]] = defaultdict(set)
        for entry in self.entries:
            if entry.rank < 1:
                raise MalformedSchemaError(
                    f"query {entry.query_id}: rank {entry.rank} is not positive"
                )
            key = (entry.query_id, entry.passage_id)
            if key in pairs:
                raise DuplicateIdError(f"duplicate run entry {key}")
            if entry.rank in ranks[entry.query_id]:
                raise DuplicateIdError(
                    f"query {entry.query_id}: rank {entry.rank} assigned twice"
                )
            pairs.add(key)
            ranks[entry.query_id].add(entry.rank)

        for query_id, seen in ranks.items():
            if seen != set(range(1, len(seen) + 1)):
                logger.warning(
                    f"NonContiguousRanks: query {query_id} ranks are not 1..{len(seen)}"
                )

    def query_ids(self) -> list[str]:
        return list(dict.fromkeys(entry.query_id for entry in self.entries))

    def ranking(self, query_id: str) -> list[RunEntry]:
        """Entries of one query sorted by rank."""
        return sorted(
            (e for e in self.entries if e.query_id == query_id), key=lambda e: e.rank
        )

    def rankings(self) -> dict[str, list[RunEntry]]:
        grouped: dict[str, list[RunEntry]] = defaultdict(list)
        for entry in self.entries:
            grouped[entry.query_id].append(entry)
        return {q: sorted(es, key=lambda e: e.rank) for q, es in grouped.items()}

    def with_qrels(self, qrels: Mapping[str, frozenset[str]]) -> "RunFile":
        return replace(self, qrels=qrels)


def parse_run(data: bytes, qrels: Optional[Mapping[str, frozenset[str]]] = None) -> RunFile:
    """
    Parses 'qid<TAB>pid<TAB>rank' lines, or TREC 'qid Q0 pid rank score tag' lines.
    """
    entries: list[RunEntry] = []
    for number, line in _lines(data):
        fields = line.split("\t") if "\t" in line else line.split()
        if len(fields) == 6:
            query_id, _, passage_id, rank = fields[:4]
        elif len(fields) == 3:
            query_id, passage_id, rank = fields
        else:
            raise RaggedRecordError(f"line {number}: expected 'qid<TAB>pid<TAB>rank'")
        try:
            entries.append(RunEntry(query_id, passage_id, int(rank)))
        except ValueError:
            raise MalformedSchemaError(f"line {number}: rank '{rank}' is not an integer")
    return RunFile(tuple(entries), qrels)


def write_run(run: RunFile) -> bytes:
    return "".join(
        f"{e.query_id}\t{e.passage_id}\t{e.rank}\n" for e in run.entries
    ).encode("utf-8")


def parse_qrels(data: bytes) -> dict[str, frozenset[str]]:
    """
    Parses binary relevance judgments: 'qid 0 pid rel' (MS MARCO/TREC) or 'qid pid'.
    Lines with relevance 0 are skipped.
    """
    relevant: dict[str, set[str]] = defaultdict(set)
    for number, line in _lines(data):
        fields = line.split("\t") if "\t" in line else line.split()
        if len(fields) == 4:
            query_id, _, passage_id, relevance = fields
            try:
                if int(relevance) <= 0:
                    continue
            except ValueError:
                raise MalformedSchemaError(f"line {number}: bad relevance '{relevance}'")
        elif len(fields) == 2:
            query_id, passage_id = fields
        else:
            raise RaggedRecordError(f"line {number}: expected 'qid 0 pid rel'")
        relevant[query_id].add(passage_id)
    return {q: frozenset(pids) for q, pids in relevant.items()}


def write_qrels(qrels: Mapping[str, frozenset[str]]) -> bytes:
    return "".join(
        f"{query_id}\t0\t{passage_id}\t1\n"
        for query_id, passages in qrels.items()
        for passage_id in sorted(passages)
    ).encode("utf-8")
