import json
import random

import pytest

from scripts.models.Dataset import (
    Answer,
    NLIPair,
    NLISchema,
    PassageCollection,
    QADataset,
    QAExample,
    QuerySet,
    RunEntry,
    RunFile,
    label_histogram,
    parse_collection,
    parse_nli,
    parse_qa,
    parse_qrels,
    parse_queries,
    parse_run,
    remap_labels,
    write_collection,
    write_nli,
    write_qa,
    write_qrels,
    write_queries,
    write_run,
)
from scripts.models.TranslateError import (
    DuplicateIdError,
    MalformedSchemaError,
    OffsetMismatchError,
    RaggedRecordError,
    UnknownLabelError,
    UnmappedLabelError,
)
from scripts.settings.translation import CONTRADICTION_TO_NEUTRAL
from tests.conftest import FIXTURES, squad_bytes, squad_document


def _single(context: str, text: str, start: int, qid: str = "x") -> bytes:
    document = {
        "version": "1.1",
        "data": [
            {
                "title": "t",
                "paragraphs": [
                    {
                        "context": context,
                        "qas": [
                            {
                                "id": qid,
                                "question": "q?",
                                "answers": [{"text": text, "answer_start": start}],
                            }
                        ],
                    }
                ],
            }
        ],
    }
    return json.dumps(document).encode("utf-8")


# QA


def test_parse_qa_reads_every_example(qa_dataset):
    assert len(qa_dataset) == 8
    assert [e.id for e in qa_dataset] == [f"q{i}" for i in range(1, 9)]
    for example in qa_dataset:
        assert all(answer.matches(example.context) for answer in example.answers)
    assert qa_dataset.examples[0].title == "Brasil"
    assert qa_dataset.rejected == ()


def test_parse_qa_accepts_utf8_bom(qa_bytes):
    assert parse_qa(b"\xef\xbb\xbf" + qa_bytes) == parse_qa(qa_bytes)


def test_write_qa_round_trip(qa_dataset):
    assert parse_qa(write_qa(qa_dataset)) == qa_dataset


def test_write_qa_keeps_article_and_paragraph_grouping(qa_dataset):
    document = json.loads(write_qa(qa_dataset))
    assert [a["title"] for a in document["data"]] == ["Brasil", "Universities"]
    assert [len(p["qas"]) for p in document["data"][0]["paragraphs"]] == [3, 2]


def test_offset_repair_fixes_unique_answer(log_messages):
    dataset = parse_qa(_single("The answer is 42 here.", "42", 3))
    assert dataset.examples[0].answers == (Answer("42", 14),)
    assert any("Repaired" in m for m in log_messages)


def test_offset_repair_rejects_ambiguous_answer():
    dataset = parse_qa(_single("42 and 42", "42", 1))
    assert len(dataset) == 0
    assert dataset.rejected[0].reason == "OffsetMismatch"


def test_offset_policy_reject_and_raise():
    data = _single("The answer is 42 here.", "42", 3)
    assert len(parse_qa(data, offset_policy="reject")) == 0
    with pytest.raises(OffsetMismatchError):
        parse_qa(data, offset_policy="raise")


def test_parse_qa_rejects_examples_without_answers():
    document = squad_document()
    document["data"][0]["paragraphs"][0]["qas"][0]["answers"] = []
    dataset = parse_qa(squad_bytes(document))
    assert len(dataset) == 7
    assert dataset.rejected[0].id == "q1"
    assert len(parse_qa(squad_bytes(document), require_answers=False)) == 8


@pytest.mark.parametrize(
    "data",
    [
        b"not json",
        b'{"version": "1.1"}',
        b'{"data": [{"paragraphs": [{"context": 3, "qas": []}]}]}',
        b'{"data": [{"paragraphs": [{"context": "c", "qas": [{"id": "a", "question": "q", '
        b'"answers": [{"text": "c", "answer_start": true}]}]}]}]}',
    ],
)
def test_parse_qa_malformed(data):
    with pytest.raises(MalformedSchemaError):
        parse_qa(data)


def test_duplicate_qa_ids_are_rejected():
    example = QAExample("a", "ctx", "q", (Answer("ctx", 0),))
    with pytest.raises(DuplicateIdError):
        QADataset((example, example))


def test_source_answers_do_not_affect_equality():
    plain = QAExample("a", "ctx", "q", (Answer("ctx", 0),))
    traced = QAExample("a", "ctx", "q", (Answer("ctx", 0),), source_answers=(Answer("x", 0),))
    assert plain == traced


# NLI


def test_parse_nli_mnli_schema(nli_bytes):
    pairs = parse_nli(nli_bytes, NLISchema.named("mnli"))
    assert len(pairs) == 6
    assert pairs[0] == NLIPair(
        "1", "A man is playing a guitar on stage.", "A man is performing music.", "entailment"
    )
    assert label_histogram(pairs) == {"entailment": 2, "contradiction": 2, "neutral": 2}


def test_write_nli_round_trip(nli_bytes):
    schema = NLISchema.named("mnli")
    pairs = parse_nli(nli_bytes, schema)
    assert write_nli(pairs, schema) == nli_bytes
    assert parse_nli(write_nli(pairs, schema), schema) == pairs


def test_assin2_aliases_are_canonicalized_and_written_back():
    schema = NLISchema.named("assin2")
    data = (FIXTURES / "assin2_sample.tsv").read_bytes()
    pairs = parse_nli(data, schema)
    assert [p.label for p in pairs] == ["entailment", "none", "entailment"]
    assert write_nli(pairs, schema) == data


def test_plain_schema_uses_line_index_as_id():
    pairs = parse_nli(b"p1\th1\tneutral\np2\th2\tentailment\n", NLISchema.named("plain"))
    assert [p.id for p in pairs] == ["0", "1"]


def test_jsonl_layout():
    schema = NLISchema(layout="jsonl", columns=("id", "premise", "hypothesis", "label"))
    data = b'{"id": "a", "premise": "p", "hypothesis": "h", "label": "neutral"}\n'
    pairs = parse_nli(data, schema)
    assert pairs == (NLIPair("a", "p", "h", "neutral"),)
    assert parse_nli(write_nli(pairs, schema), schema) == pairs


def test_nli_errors():
    schema = NLISchema.named("plain")
    with pytest.raises(RaggedRecordError):
        parse_nli(b"only\ttwo\n", schema)
    with pytest.raises(UnknownLabelError):
        parse_nli(b"p\th\tmaybe\n", schema)
    with pytest.raises(RaggedRecordError):
        write_nli([NLIPair("0", "tab\there", "h", "neutral")], schema)


def test_remap_labels_contradiction_to_neutral(nli_bytes):
    pairs = parse_nli(nli_bytes, NLISchema.named("mnli"))
    remapped = remap_labels(pairs, CONTRADICTION_TO_NEUTRAL)
    assert label_histogram(remapped) == {"entailment": 2, "neutral": 4}
    assert [p.id for p in remapped] == [p.id for p in pairs]
    with pytest.raises(UnmappedLabelError):
        remap_labels(pairs, {"entailment": "entailment"})


# Ranking


def test_collection_and_queries_round_trip():
    data = b"1\tfirst passage\n2\tsecond passage\n"
    collection = parse_collection(data)
    assert isinstance(collection, PassageCollection)
    assert dict(collection) == {"1": "first passage", "2": "second passage"}
    assert write_collection(collection) == data
    assert isinstance(parse_queries(b"7\twhat is it\n"), QuerySet)


def test_collection_errors():
    with pytest.raises(DuplicateIdError):
        parse_collection(b"1\ta\n1\tb\n")
    with pytest.raises(RaggedRecordError):
        parse_collection(b"no tab here\n")


def test_parse_run_three_and_six_columns():
    three = parse_run(b"q1\tp1\t1\nq1\tp2\t2\n")
    trec = parse_run(b"q1 Q0 p1 1 12.5 bm25\nq1 Q0 p2 2 11.0 bm25\n")
    assert three == trec
    assert three.ranking("q1") == [RunEntry("q1", "p1", 1), RunEntry("q1", "p2", 2)]
    assert write_run(three) == b"q1\tp1\t1\nq1\tp2\t2\n"


def test_run_rankings_are_sorted_by_rank():
    run = parse_run(b"q1\tp2\t2\nq2\tp9\t1\nq1\tp1\t1\n")
    assert run.query_ids() == ["q1", "q2"]
    assert [e.passage_id for e in run.rankings()["q1"]] == ["p1", "p2"]


def test_run_invariants(log_messages):
    with pytest.raises(DuplicateIdError):
        RunFile((RunEntry("q", "p", 1), RunEntry("q", "p", 2)))
    with pytest.raises(DuplicateIdError):
        RunFile((RunEntry("q", "a", 1), RunEntry("q", "b", 1)))
    with pytest.raises(MalformedSchemaError):
        RunFile((RunEntry("q", "a", 0),))
    RunFile((RunEntry("q", "a", 1), RunEntry("q", "b", 3)))
    assert any("NonContiguousRanks" in m for m in log_messages)


def test_qrels_formats():
    msmarco = parse_qrels(b"q1\t0\tp1\t1\nq1\t0\tp2\t0\nq2\t0\tp3\t1\n")
    assert msmarco == {"q1": frozenset({"p1"}), "q2": frozenset({"p3"})}
    assert parse_qrels(b"q1\tp1\nq2\tp3\n") == msmarco
    assert parse_qrels(write_qrels(msmarco)) == msmarco


# Round trips over generated data

WORDS = ["Brasil", "capital", "é", "rio", "São", "Paulo", "1960", "estados", "the", "über", "«sim»", "don't"]


def _sentence(rng: random.Random, low: int = 1, high: int = 12) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(low, high)))


def _random_qa(rng: random.Random) -> QADataset:
    examples = []
    for n in range(rng.randint(0, 12)):
        if not examples or rng.random() < 0.5:
            title = rng.choice(["", "Brasil", "Rios"])
            context = _sentence(rng, 3, 30) + "."
        answers = []
        for _ in range(rng.randint(1, 3)):
            start = rng.randrange(len(context))
            end = rng.randint(start + 1, len(context))
            answers.append(Answer(context[start:end], start))
        examples.append(QAExample(f"id{n}", context, _sentence(rng) + "?", tuple(answers), title))
    return QADataset(tuple(examples), rng.choice(["", "pt", "en"]), rng.choice(["1.1", "2.0"]))


def test_write_qa_round_trips_generated_datasets():
    rng = random.Random(11)
    for _ in range(300):
        dataset = _random_qa(rng)
        data = write_qa(dataset)
        parsed = parse_qa(data)
        assert parsed == dataset
        assert parsed.language == dataset.language
        assert write_qa(parsed) == data


def test_translated_dataset_language_survives_a_round_trip(qa_dataset):
    assert qa_dataset.language == "pt"
    data = write_qa(qa_dataset)
    assert json.loads(data)["language"] == "pt"
    assert parse_qa(data) == qa_dataset
    assert parse_qa(data, language="en").language == "en"


def test_collections_and_queries_round_trip_generated_data():
    rng = random.Random(12)
    for _ in range(200):
        entries = {str(rng.randrange(10**6)): _sentence(rng) for _ in range(rng.randint(0, 20))}
        for kind, parse, write in (
            (PassageCollection, parse_collection, write_collection),
            (QuerySet, parse_queries, write_queries),
        ):
            collection = kind(entries)
            data = write(collection)
            assert parse(data) == collection
            assert write(parse(data)) == data


def test_runs_round_trip_generated_data():
    rng = random.Random(13)
    for _ in range(200):
        entries = []
        for q in range(rng.randint(0, 5)):
            passages = rng.sample(range(100), rng.randint(1, 15))
            ranked = [RunEntry(f"q{q}", f"p{p}", rank) for rank, p in enumerate(passages, 1)]
            rng.shuffle(ranked)
            entries += ranked
        run = RunFile(tuple(entries))
        data = write_run(run)
        assert parse_run(data) == run
        assert write_run(parse_run(data)) == data
