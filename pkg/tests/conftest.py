import json
from pathlib import Path

import pytest
from loguru import logger

from scripts.models.Backend import BackendConfig, make_mock
from scripts.models.Dataset import parse_qa

FIXTURES = Path(__file__).parent / "fixtures"

# (title, context, [(id, question, answer)]) in the shape of FaQuAD: one answer
# per question, answers without surrounding whitespace.
QA_ARTICLES = [
    (
        "Brasil",
        [
            (
                "O Brasil é o maior país da América do Sul. A capital federal é Brasília, "
                "inaugurada em 1960. O país tem 26 estados e um distrito federal.",
                [
                    ("q1", "Qual é a capital federal do Brasil?", "Brasília"),
                    ("q2", "Quantos estados tem o Brasil?", "26 estados"),
                    ("q3", "Quando Brasília foi inaugurada?", "1960"),
                ],
            ),
            (
                "A língua oficial é o português. O Dr. Silva estudou a história do idioma "
                "na Universidade de São Paulo.",
                [
                    ("q4", "Qual é a língua oficial?", "português"),
                    ("q5", "Onde o Dr. Silva estudou?", "Universidade de São Paulo"),
                ],
            ),
        ],
    ),
    (
        "Universities",
        [
            (
                "The university was founded in 1934! It offers courses in law, medicine "
                "and engineering. Classes start in March.",
                [
                    ("q6", "When was the university founded?", "1934"),
                    ("q7", "Which courses does it offer?", "law, medicine and engineering"),
                    ("q8", "When do classes start?", "March"),
                ],
            ),
        ],
    ),
]


def squad_document(articles=QA_ARTICLES, version: str = "1.1") -> dict:
    return {
        "version": version,
        "data": [
            {
                "title": title,
                "paragraphs": [
                    {
                        "context": context,
                        "qas": [
                            {
                                "id": qid,
                                "question": question,
                                "answers": [
                                    {"text": answer, "answer_start": context.index(answer)}
                                ],
                            }
                            for qid, question, answer in qas
                        ],
                    }
                    for context, qas in paragraphs
                ],
            }
            for title, paragraphs in articles
        ],
    }


def squad_bytes(document: dict) -> bytes:
    return json.dumps(document, ensure_ascii=False, indent=1).encode("utf-8")


@pytest.fixture
def qa_bytes() -> bytes:
    return squad_bytes(squad_document())


@pytest.fixture
def qa_dataset(qa_bytes):
    return parse_qa(qa_bytes, source="fixture", language="pt")


@pytest.fixture
def nli_bytes() -> bytes:
    return (FIXTURES / "nli_sample.tsv").read_bytes()


@pytest.fixture
def identity():
    return make_mock("identity", BackendConfig(max_batch_size=4))


@pytest.fixture
def log_messages():
    """Messages logged through loguru while the test runs."""
    messages: list[str] = []
    sink_id = logger.add(lambda message: messages.append(message.record["message"]), level="DEBUG")
    yield messages
    logger.remove(sink_id)
