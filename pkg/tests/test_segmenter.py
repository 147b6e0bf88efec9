import random

import pytest

from scripts.models.Segmenter import (
    Segment,
    SentenceSplitter,
    group_for_span,
    load_abbreviations,
    split_sentences,
)
from scripts.models.TranslateError import SpanOutOfBoundsError
from tests.conftest import FIXTURES


@pytest.fixture(scope="module")
def sentences() -> list[str]:
    return (FIXTURES / "sentences.txt").read_text(encoding="utf-8").splitlines()


def test_splits_the_reference_sentences(sentences):
    assert len(sentences) == 50
    segmentation = split_sentences(" ".join(sentences))
    assert [segment.core for segment in segmentation] == sentences


def test_segments_concatenate_to_the_input(sentences):
    rng = random.Random(7)
    for _ in range(200):
        chosen = rng.sample(sentences, rng.randint(1, 10))
        text = "".join(s + rng.choice([" ", "  ", "\n", "\n\n "]) for s in chosen)
        segmentation = split_sentences(text)
        assert segmentation.text == text
        assert all(segment.start == sum(len(s.text) for s in segmentation.segments[:i])
                   for i, segment in enumerate(segmentation))


def test_whitespace_stays_with_the_preceding_segment():
    segmentation = split_sentences("One. Two.  ")
    assert [s.text for s in segmentation] == ["One. ", "Two.  "]
    assert segmentation[0].trailing == " "
    assert segmentation[1].core == "Two."


def test_no_split_before_lowercase():
    assert len(split_sentences("It costs 3 dollars. and more.")) == 1


def test_custom_abbreviations():
    assert len(SentenceSplitter(abbreviations=[]).split("Dr. Silva came.")) == 2
    assert len(SentenceSplitter(abbreviations=["Dr."]).split("Dr. Silva came.")) == 1


def test_abbreviation_list_is_loaded_once():
    assert "Dr." in load_abbreviations()
    assert load_abbreviations() is load_abbreviations()


def test_empty_text():
    assert len(split_sentences("")) == 0


def test_segment_properties():
    segment = Segment("  Hello.  ", 4)
    assert (segment.leading, segment.core, segment.trailing, segment.end) == ("  ", "Hello.", "  ", 14)
    blank = Segment("   ", 0)
    assert (blank.core, blank.leading, blank.trailing) == ("", "   ", "")


def test_group_for_span_merges_straddling_segments():
    text = "First one. Second one. Third one."
    segmentation = split_sentences(text)
    assert len(segmentation) == 3
    span = (text.index("one. Second"), text.index("Second") + len("Second"))
    grouped = group_for_span(segmentation, span)
    assert [s.text for s in grouped] == ["First one. Second one. ", "Third one."]
    assert grouped.text == text
    assert grouped.index_covering(*span) == 0


def test_group_for_span_keeps_a_contained_span():
    segmentation = split_sentences("First one. Second one.")
    assert group_for_span(segmentation, (11, 17)) is segmentation
    assert segmentation.index_covering(11, 17) == 1
    assert segmentation.index_covering(5, 17) is None


@pytest.mark.parametrize("span", [(-1, 2), (5, 3), (0, 100)])
def test_group_for_span_out_of_bounds(span):
    with pytest.raises(SpanOutOfBoundsError):
        group_for_span(split_sentences("Short text."), span)


def test_group_for_span_over_random_texts_and_spans(sentences):
    rng = random.Random(23)
    for _ in range(500):
        chosen = rng.sample(sentences, rng.randint(1, 8))
        text = "".join(s + rng.choice([" ", "  ", "\n"]) for s in chosen)
        segmentation = split_sentences(text)
        start = rng.randint(0, len(text))
        end = rng.randint(start, min(len(text), start + 120))

        grouped = group_for_span(segmentation, (start, end))
        assert grouped.text == text
        assert len(grouped) <= len(segmentation)
        assert all(
            segment.start == sum(len(s.text) for s in grouped.segments[:i])
            for i, segment in enumerate(grouped)
        )
        holder = grouped.index_covering(start, end)
        assert holder is not None
        segment = grouped[holder]
        assert segment.text[start - segment.start : end - segment.start] == text[start:end]
