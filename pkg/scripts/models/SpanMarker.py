"""
Answer span projection through translation.

The answer span is marked in the context with a pair of delimiter tokens,
the marked context is translated, and the span is read back from where the
delimiters ended up in the translation.
"""

from dataclasses import dataclass

from scripts.models.TranslateError import (
    DelimiterCollisionError,
    DuplicateDelimitersError,
    EmptySpanError,
    InvalidDelimitersError,
    InvalidSpanError,
    MissingEndDelimiterError,
    MissingStartDelimiterError,
    OutOfOrderDelimitersError,
)
from scripts.settings.translation import DEFAULT_END_DELIMITER, DEFAULT_START_DELIMITER


@dataclass(frozen=True)
class DelimiterPair:
    start_token: str = DEFAULT_START_DELIMITER
    end_token: str = DEFAULT_END_DELIMITER

    def __post_init__(self):
        if not self.start_token or not self.end_token:
            raise InvalidDelimitersError("delimiter tokens must be non-empty")
        if self.start_token in self.end_token or self.end_token in self.start_token:
            raise InvalidDelimitersError(
                f"delimiters overlap: {self.start_token!r} / {self.end_token!r}"
            )

    @classmethod
    def parse(cls, value: str) -> "DelimiterPair":
        """Builds a pair from 'START,END'."""
        start, sep, end = value.partition(",")
        if not sep:
            raise InvalidDelimitersError(f"expected 'START,END', got {value!r}")
        return cls(start, end)

    def occurs_in(self, text: str) -> bool:
        return self.start_token in text or self.end_token in text

    def strip(self, text: str) -> str:
        return text.replace(self.start_token, "").replace(self.end_token, "")

    def tokens(self) -> tuple[str, str]:
        return self.start_token, self.end_token


DEFAULT_DELIMITERS = DelimiterPair()


@dataclass(frozen=True)
class MarkedContext:
    text: str
    delimiters: DelimiterPair = DEFAULT_DELIMITERS

    def __post_init__(self):
        start, end = self.delimiters.tokens()
        if self.text.count(start) != 1 or self.text.count(end) != 1:
            raise DuplicateDelimitersError("a marked context holds each delimiter once")
        if self.text.index(start) > self.text.index(end):
            raise OutOfOrderDelimitersError("start delimiter must precede end delimiter")


@dataclass(frozen=True)
class RecoveredSpan:
    context: str
    answer_text: str
    answer_start: int


def mark(
    context: str,
    answer_start: int,
    answer_text: str,
    delimiters: DelimiterPair = DEFAULT_DELIMITERS,
) -> MarkedContext:
    """
    Wraps the answer span of ``context`` in the delimiter tokens.

    :raises InvalidSpanError: the span does not hold ``answer_text``, is empty, or
        starts or ends with whitespace.
    :raises DelimiterCollisionError: the context already contains a delimiter token.
    """
    end = answer_start + len(answer_text)
    if not answer_text or answer_start < 0 or end > len(context):
        raise InvalidSpanError(
            f"span [{answer_start}, {end}) outside context of length {len(context)}"
        )
    if context[answer_start:end] != answer_text:
        raise InvalidSpanError(f"context at {answer_start} does not hold {answer_text!r}")
    if answer_text != answer_text.strip():
        raise InvalidSpanError(f"answer {answer_text!r} has surrounding whitespace")
    if delimiters.occurs_in(context):
        raise DelimiterCollisionError("context already contains a delimiter token")

    return MarkedContext(
        context[:answer_start]
        + delimiters.start_token
        + answer_text
        + delimiters.end_token
        + context[end:],
        delimiters,
    )


def recover(translated: str, delimiters: DelimiterPair = DEFAULT_DELIMITERS) -> RecoveredSpan:
    """
    Reads the answer span back out of a translated marked context.

    Whitespace rule: where a delimiter had a space on both sides, the two spaces
    collapse into one (the one outside the span is kept). Any other whitespace
    just inside the delimiters is moved out of the answer, so the answer never
    starts or ends with whitespace. The returned offset refers to the cleaned
    context.

    Every input yields either a span or exactly one of MissingStartDelimiter,
    MissingEndDelimiter, DuplicateDelimiters, OutOfOrderDelimiters, EmptySpan.
    """
    start_token, end_token = delimiters.tokens()
    starts, ends = translated.count(start_token), translated.count(end_token)
    if starts == 0:
        raise MissingStartDelimiterError("start delimiter missing from translation")
    if ends == 0:
        raise MissingEndDelimiterError("end delimiter missing from translation")
    if starts > 1 or ends > 1:
        raise DuplicateDelimitersError(
            f"delimiters repeated in translation ({starts} start, {ends} end)"
        )

    i_start, i_end = translated.index(start_token), translated.index(end_token)
    if i_end < i_start + len(start_token):
        raise OutOfOrderDelimitersError("end delimiter precedes start delimiter")

    before = translated[:i_start]
    inside = translated[i_start + len(start_token) : i_end]
    after = translated[i_end + len(end_token) :]

    if before.endswith(" ") and inside.startswith(" "):
        inside = inside[1:]
    if inside.endswith(" ") and after.startswith(" "):
        inside = inside[:-1]

    answer = inside.strip()
    if not answer:
        raise EmptySpanError("no text between the delimiters")
    leading = len(inside) - len(inside.lstrip())
    return RecoveredSpan(before + inside + after, answer, len(before) + leading)
