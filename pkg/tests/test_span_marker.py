import random

import pytest

from scripts.models.SpanMarker import (
    DEFAULT_DELIMITERS,
    DelimiterPair,
    MarkedContext,
    RecoveredSpan,
    mark,
    recover,
)
from scripts.models.TranslateError import (
    DelimiterCollisionError,
    DuplicateDelimitersError,
    EmptySpanError,
    InvalidDelimitersError,
    InvalidSpanError,
    MissingEndDelimiterError,
    MissingStartDelimiterError,
    OutOfOrderDelimitersError,
    SpanMarkError,
)

START, END = DEFAULT_DELIMITERS.tokens()
WORDS = ["casa", "rio", "São", "Paulo", "1960", "é", "o", "de", "Brasil,", "(capital)", "x.y"]


def _random_case(rng: random.Random) -> tuple[str, int, str]:
    separators = [" ", " ", " ", "  ", "\n", " - "]
    tokens = [rng.choice(WORDS) for _ in range(rng.randint(1, 30))]
    context = tokens[0]
    offsets = [0]
    for token in tokens[1:]:
        context += rng.choice(separators)
        offsets.append(len(context))
        context += token
    first = rng.randrange(len(tokens))
    last = rng.randrange(first, min(first + 5, len(tokens)))
    start = offsets[first]
    end = offsets[last] + len(tokens[last])
    return context, start, context[start:end]


def test_mark_then_recover_is_identity_on_random_spans():
    rng = random.Random(1234)
    for _ in range(10_000):
        context, start, answer = _random_case(rng)
        marked = mark(context, start, answer)
        assert recover(marked.text) == RecoveredSpan(context, answer, start)


def test_mark_inserts_delimiters_around_the_span():
    marked = mark("A capital é Brasília.", 12, "Brasília")
    assert marked.text == f"A capital é {START}Brasília{END}."
    assert isinstance(marked, MarkedContext)


def test_recover_collapses_doubled_spaces():
    span = recover(f"Ele mora em {START} São Paulo {END} hoje")
    assert span == RecoveredSpan("Ele mora em São Paulo hoje", "São Paulo", 12)


def test_recover_moves_inner_whitespace_out_of_the_answer():
    span = recover(f"X{START} ans{END}!")
    assert span.answer_text == "ans"
    assert span.context == "X ans!"
    assert span.context[span.answer_start : span.answer_start + 3] == "ans"


@pytest.mark.parametrize(
    "translated, error",
    [
        ("no delimiters at all", MissingStartDelimiterError),
        (f"only {END} {END}", MissingStartDelimiterError),
        (f"only {START} start", MissingEndDelimiterError),
        (f"{START}a{END} {START}b{END}", DuplicateDelimitersError),
        (f"{START}a{END}{END}", DuplicateDelimitersError),
        (f"{END} reversed {START}", OutOfOrderDelimitersError),
        (f"a {START} {END} b", EmptySpanError),
        (f"a {START}{END} b", EmptySpanError),
    ],
)
def test_recover_failures(translated, error):
    with pytest.raises(error):
        recover(translated)


def test_recover_always_yields_a_span_or_one_known_failure():
    rng = random.Random(99)
    pieces = ["a", "b", " ", "  ", START, END]
    failures = (
        MissingStartDelimiterError,
        MissingEndDelimiterError,
        DuplicateDelimitersError,
        OutOfOrderDelimitersError,
        EmptySpanError,
    )
    for _ in range(5_000):
        text = "".join(rng.choice(pieces) for _ in range(rng.randint(0, 12)))
        try:
            span = recover(text)
        except failures:
            continue
        assert span.answer_text == span.answer_text.strip() != ""
        end = span.answer_start + len(span.answer_text)
        assert span.context[span.answer_start : end] == span.answer_text
        assert not DEFAULT_DELIMITERS.occurs_in(span.context)


@pytest.mark.parametrize(
    "context, start, answer",
    [
        ("abc", 0, "abd"),
        ("abc", 2, "cd"),
        ("abc", -1, "a"),
        ("abc", 0, ""),
        ("a bc", 1, " bc"),
        ("ab c", 0, "ab "),
    ],
)
def test_mark_rejects_invalid_spans(context, start, answer):
    with pytest.raises(InvalidSpanError):
        mark(context, start, answer)


def test_mark_rejects_contexts_holding_a_delimiter():
    with pytest.raises(DelimiterCollisionError):
        mark(f"already {END} here", 0, "already")


def test_custom_delimiters():
    pair = DelimiterPair.parse("[[,]]")
    marked = mark("um dois três", 3, "dois", pair)
    assert marked.text == "um [[dois]] três"
    assert recover(marked.text, pair) == RecoveredSpan("um dois três", "dois", 3)


@pytest.mark.parametrize("value", ["nocomma", ",]]", "[[,", "<a>,<a>x"])
def test_invalid_delimiters(value):
    with pytest.raises(InvalidDelimitersError):
        DelimiterPair.parse(value)
    assert issubclass(InvalidDelimitersError, ValueError)


def test_marked_context_checks_its_delimiters():
    with pytest.raises(DuplicateDelimitersError):
        MarkedContext(f"{START}a{END}{END}")
    with pytest.raises(OutOfOrderDelimitersError):
        MarkedContext(f"{END}a{START}")


def test_failures_share_a_base_class_and_a_reason():
    assert issubclass(EmptySpanError, SpanMarkError)
    assert MissingStartDelimiterError.reason == "MissingStartDelimiter"
