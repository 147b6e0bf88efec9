import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional

from loguru import logger

from scripts.models.TranslateError import SpanOutOfBoundsError
from scripts.settings.common import ABBREVIATIONS_FILE

# Terminal punctuation run, optional closing quotes/brackets, then whitespace
_BOUNDARY = re.compile(r"[.!?…]+[\"'”’)\]»]*(?=\s)")
_OPENERS = "\"'“‘«([¿¡"


@lru_cache(maxsize=8)
def load_abbreviations(path: Path = ABBREVIATIONS_FILE) -> frozenset[str]:
    """
    Reads an abbreviation list, one entry per line; blank lines and '#' comments are skipped.
    """
    entries = set()
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                entries.add(line)
    logger.debug(f"Loaded {len(entries)} abbreviations from {path}")
    return frozenset(entries)


@dataclass(frozen=True)
class Segment:
    text: str
    start: int

    @property
    def end(self) -> int:
        return self.start + len(self.text)

    @property
    def core(self) -> str:
        """Text without surrounding whitespace; what gets translated."""
        return self.text.strip()

    @property
    def leading(self) -> str:
        return self.text[: len(self.text) - len(self.text.lstrip())]

    @property
    def trailing(self) -> str:
        stripped = self.text.rstrip()
        return self.text[len(stripped) :] if stripped else ""


@dataclass(frozen=True)
class Segmentation:
    segments: tuple[Segment, ...]

    @property
    def text(self) -> str:
        return "".join(segment.text for segment in self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __getitem__(self, index: int) -> Segment:
        return self.segments[index]

    def index_covering(self, start: int, end: int) -> Optional[int]:
        """Index of the single segment holding [start, end), if any."""
        for i, segment in enumerate(self.segments):
            if segment.start <= start and end <= segment.end:
                return i
        return None


class SentenceSplitter:
    """
    Rule-based, lossless sentence splitter.

    A boundary is a run of terminal punctuation (. ! ? …), optionally followed by
    closing quotes or brackets, then whitespace. No split happens when the next
    sentence would start with a lowercase letter, when the token ending in a single
    period is a known abbreviation, or at end of text. Whitespace after a boundary
    stays with the preceding segment.
    """

    def __init__(self, abbreviations: Optional[Iterable[str]] = None):
        self.abbreviations = (
            frozenset(abbreviations) if abbreviations is not None else load_abbreviations()
        )

    def _is_abbreviation(self, text: str, period_index: int) -> bool:
        token_start = period_index
        while token_start > 0 and not text[token_start - 1].isspace():
            token_start -= 1
        token = text[token_start : period_index + 1].lstrip(_OPENERS)
        return token in self.abbreviations

    def split(self, text: str) -> Segmentation:
        segments: list[Segment] = []
        cursor = 0
        for match in _BOUNDARY.finditer(text):
            next_start = match.end()
            while next_start < len(text) and text[next_start].isspace():
                next_start += 1
            if next_start >= len(text) or text[next_start].islower():
                continue
            run = match.group(0).rstrip("\"'”’)]»")
            if run == "." and self._is_abbreviation(text, match.start()):
                continue
            segments.append(Segment(text[cursor:next_start], cursor))
            cursor = next_start
        if cursor < len(text):
            segments.append(Segment(text[cursor:], cursor))
        return Segmentation(tuple(segments))


def split_sentences(text: str, splitter: Optional[SentenceSplitter] = None) -> Segmentation:
    return (splitter or SentenceSplitter()).split(text)


def group_for_span(segmentation: Segmentation, span: tuple[int, int]) -> Segmentation:
    """
    Merges the segments overlapping ``span`` (start inclusive, end exclusive) into one,
    so a marked answer never straddles two translation units.

    :raises SpanOutOfBoundsError: the span is reversed or exceeds the text.
    """
    start, end = span
    length = sum(len(segment.text) for segment in segmentation)
    if not 0 <= start <= end <= length:
        raise SpanOutOfBoundsError(f"span {span} outside text of length {length}")
    if not segmentation.segments:
        return segmentation

    if start == end:
        hits = [
            i for i, s in enumerate(segmentation) if s.start <= start < s.end
        ] or [len(segmentation) - 1]
    else:
        hits = [i for i, s in enumerate(segmentation) if s.start < end and start < s.end]
    first, last = hits[0], hits[-1]
    if first == last:
        return segmentation

    merged = Segment(
        "".join(s.text for s in segmentation.segments[first : last + 1]),
        segmentation[first].start,
    )
    return Segmentation(
        segmentation.segments[:first] + (merged,) + segmentation.segments[last + 1 :]
    )
