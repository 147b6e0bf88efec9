from decimal import Decimal
from fractions import Fraction

import pytest

from scripts.models.CostModel import (
    DatasetStats,
    PricingModel,
    SplitStats,
    ThroughputProfile,
    added_latency,
    added_latency_from_meter,
    avg_commercial_rate,
    avg_gpu_rate,
    build_report,
    dataset_stats,
    exact,
    format_table,
    load_profile,
    one_time_commercial,
    one_time_opensource,
    recurring_commercial,
    recurring_opensource,
    reference_stats,
    reference_throughput,
    reproduce_reference_table,
    round_half_even,
)
from scripts.models.Dataset import NLIPair, PassageCollection
from scripts.models.Meter import Meter
from scripts.models.TranslateError import (
    InvalidPricingError,
    MissingStatisticError,
    NoMeasurementsError,
    UsageError,
)


@pytest.fixture
def pricing() -> PricingModel:
    return load_profile("paper-2021")


def _usd(value) -> Decimal:
    return round_half_even(value, 2)


# Rates


def test_average_rates(pricing):
    assert avg_commercial_rate(pricing) == Fraction(50, 3)
    assert avg_gpu_rate(pricing) == Fraction("2.77")
    single = PricingModel((Fraction(7),), (Fraction(3),))
    assert (avg_commercial_rate(single), avg_gpu_rate(single)) == (7, 3)
    swapped = PricingModel(pricing.commercial_rates[::-1], pricing.gpu_hourly_rates[::-1])
    assert avg_gpu_rate(swapped) == avg_gpu_rate(pricing)


@pytest.mark.parametrize(
    "document",
    [
        {"commercial_per_million": [], "gpu_per_hour": [1]},
        {"commercial_per_million": [10], "gpu_per_hour": [0]},
        {"commercial_per_million": [10]},
        {"commercial_per_million": ["ten"], "gpu_per_hour": [1]},
    ],
)
def test_invalid_pricing(document):
    with pytest.raises(InvalidPricingError):
        PricingModel.from_dict(document)


def test_pricing_profile_from_file(tmp_path):
    path = tmp_path / "cheap.yaml"
    path.write_text("commercial_per_million: [5]\ngpu_per_hour: [1.5, 0.5]\n", encoding="utf-8")
    pricing = load_profile(path)
    assert pricing.name == "cheap"
    assert avg_gpu_rate(pricing) == 1
    with pytest.raises(UsageError):
        load_profile(tmp_path / "missing.json")


# One-time and recurring costs


@pytest.mark.parametrize(
    "characters, expected",
    [
        (3_047_540_622, "50792.34"),
        (56_521_137, "942.02"),
        (17_688_764, "294.81"),
        (0, "0.00"),
    ],
)
def test_one_time_commercial(pricing, characters, expected):
    assert _usd(one_time_commercial(characters, pricing)) == Decimal(expected)


@pytest.mark.parametrize("hours, expected", [(1.0, "2.77"), (2.25, "6.23"), (51.0, "141.27")])
def test_one_time_opensource(pricing, hours, expected):
    assert _usd(one_time_opensource(hours, pricing)) == Decimal(expected)


def test_one_time_opensource_is_exact(pricing):
    assert one_time_opensource(2.25, pricing) == Fraction("6.2325")


@pytest.mark.parametrize(
    "average, expected",
    [(1006.57, "16.78"), (89.80, "1.50"), (Fraction("344.67") * 1000 + Fraction("35.77"), "5745.10")],
)
def test_recurring_commercial(pricing, average, expected):
    assert _usd(recurring_commercial(average, pricing)) == Decimal(expected)


@pytest.mark.parametrize(
    "seconds, expected",
    [(2.50, "0.0601"), (0.78, "0.0188"), (680.64, "16.3661")],
)
def test_recurring_opensource(pricing, seconds, expected):
    profile = ThroughputProfile(exact(seconds), 32)
    assert round_half_even(recurring_opensource(profile, pricing), 4) == Decimal(expected)


def test_linearity_and_monotonicity(pricing):
    a, b = 123_457, 98_765_431
    assert one_time_commercial(a + b, pricing) == (
        one_time_commercial(a, pricing) + one_time_commercial(b, pricing)
    )
    assert recurring_commercial(10, pricing, n=2000) == 2 * recurring_commercial(10, pricing)
    assert one_time_opensource(2, pricing) > one_time_opensource(1, pricing)
    assert one_time_commercial(1, pricing) < one_time_commercial(2, pricing)


def test_recurring_opensource_and_latency_share_a_profile(pricing):
    profile = ThroughputProfile(Fraction("2.5"), 32)
    ratio = recurring_opensource(profile, pricing) / added_latency(profile)
    assert ratio == avg_gpu_rate(pricing) * 1000 / (3600 * profile.implied_examples_per_second) / profile.seconds_per_batch


def test_negative_characters_are_rejected(pricing):
    with pytest.raises(UsageError):
        one_time_commercial(-1, pricing)


# Throughput and latency


def test_throughput_consistency():
    ThroughputProfile(Fraction("2.5"), 32, examples_per_second=Fraction("12.8"))
    ThroughputProfile(Fraction("2.5"), 32, examples_per_second=Fraction("12.9"))
    with pytest.raises(UsageError):
        ThroughputProfile(Fraction("2.5"), 32, examples_per_second=Fraction(14))
    with pytest.raises(UsageError):
        ThroughputProfile(Fraction(0), 32)
    with pytest.raises(MissingStatisticError):
        ThroughputProfile.from_dict({"batch_size": 32})


def test_latency_from_meter():
    meter = Meter()
    with pytest.raises(NoMeasurementsError):
        added_latency_from_meter(meter)
    for latency in (1.0, 2.0, 3.0):
        meter.record_batch(["a"], ["a"], latency)
    meter.add_wall_seconds(7200)
    assert added_latency_from_meter(meter) == 2
    profile = ThroughputProfile.from_meter(meter, batch_size=32)
    assert (profile.seconds_per_batch, profile.wall_hours) == (2, 2)
    assert added_latency(reference_throughput("qa")) == Fraction("2.5")


# Statistics


def test_nli_statistics():
    pairs = [NLIPair("1", "p" * 40, "h" * 45, "neutral"), NLIPair("2", "p" * 50, "h" * 44, "neutral")]
    split = dataset_stats(pairs)["train"]
    assert (split.characters, split.examples) == (179, 2)
    assert split.avg_chars_per_example == Fraction("89.5")


def test_empty_dataset_statistics():
    split = dataset_stats(PassageCollection(), split="collection")["collection"]
    assert (split.characters, split.examples, split.avg_chars_per_example) == (0, 0, 0)


def test_qa_statistics_per_example_and_per_paragraph(qa_dataset):
    per_example = dataset_stats(qa_dataset)["train"]
    per_paragraph = dataset_stats(qa_dataset, qa_unit="paragraph")["train"]
    questions = sum(len(e.question) for e in qa_dataset)
    contexts = {e.context for e in qa_dataset}
    assert per_example.characters == sum(len(e.context) for e in qa_dataset) + questions
    assert per_paragraph.characters == sum(map(len, contexts)) + questions
    assert per_paragraph.examples == 3
    with pytest.raises(UsageError):
        dataset_stats(qa_dataset, qa_unit="sentence")


def test_split_statistics_documents():
    split = SplitStats.from_dict({"characters": 17_688_764, "avg_chars_per_example": 936.11})
    assert split.examples == 18_896
    assert SplitStats.from_dict({"characters": 10, "examples": 4}).avg_chars_per_example == Fraction(5, 2)
    with pytest.raises(MissingStatisticError):
        SplitStats.from_dict({"characters": 10})
    with pytest.raises(MissingStatisticError):
        DatasetStats()["train"]
    assert DatasetStats.from_dict({"a": {"characters": 3, "examples": 1}}).to_dict() == {
        "a": {"characters": 3, "examples": 1, "avg_chars_per_example": 3.0}
    }


# Reports


def test_zero_shot_report_is_empty(pricing):
    report = build_report("zero-shot", DatasetStats(), pricing)
    assert report.cells == frozenset()
    assert all(report.to_dict()[cell] is None for cell in ("one_time_commercial", "added_latency"))
    assert report.value("one_time_commercial") == 0


def test_nli_translate_train_report(pricing):
    report = build_report(
        "translate-train", reference_stats()["nli"], pricing, reference_throughput("nli"), task="nli"
    )
    assert report.to_dict() == {
        "task": "nli",
        "scenario": "translate-train",
        "one_time_commercial": 942.02,
        "one_time_opensource": 6.23,
        "recurring_commercial": None,
        "recurring_opensource": None,
        "added_latency": None,
    }


def test_strategy1_report_carries_both_costs(pricing):
    report = build_report(
        "translate-infer-s1",
        reference_stats()["ranking"],
        pricing,
        reference_throughput("ranking-s1"),
        train_split="collection",
        infer_split="queries",
    )
    assert report.rounded("one_time_commercial", 0) == Decimal("50792")
    assert report.rounded("recurring_commercial") == Decimal("0.60")
    assert report.rounded("added_latency") == Decimal("0.72")


def test_strategy2_report_pays_for_top_k_passages(pricing):
    stats = reference_stats()["ranking"]
    throughput = reference_throughput("ranking-s2")
    report = build_report("translate-infer-s2", stats, pricing, throughput, infer_split="queries")
    assert report.rounded("recurring_commercial") == Decimal("5745.10")
    assert report.rounded("recurring_opensource") == Decimal("16.37")
    assert "one_time_commercial" not in report.cells
    smaller = build_report("translate-infer-s2", stats, pricing, throughput, infer_split="queries", k=10)
    assert smaller.recurring_commercial < report.recurring_commercial


def test_report_requirements(pricing):
    stats = DatasetStats({"train": SplitStats.of(100, 1)})
    with pytest.raises(MissingStatisticError):
        build_report("translate-train", stats, pricing)
    with pytest.raises(MissingStatisticError):
        build_report("translate-train", stats, pricing, ThroughputProfile(Fraction(1), 32))
    with pytest.raises(MissingStatisticError):
        build_report("translate-infer", stats, pricing, ThroughputProfile(Fraction(1), 32))
    with pytest.raises(UsageError):
        build_report("translate-everything", stats, pricing)


def test_reference_table_reproduction():
    reports, discrepancies = reproduce_reference_table()
    assert len(reports) == 10
    assert [(d.task, d.scenario, d.cell) for d in discrepancies] == [
        ("qa", "translate-train", "one_time_commercial"),
        ("ranking", "translate-infer-s1", "recurring_commercial"),
        ("ranking", "translate-infer-s1", "recurring_opensource"),
    ]
    squad = discrepancies[0]
    assert (squad.derived, squad.published) == (Decimal("294.81"), Decimal("299.17"))
    assert "294.81" in str(squad)


def test_format_table(pricing):
    reports, _ = reproduce_reference_table(pricing)
    table = format_table(reports[:2])
    lines = table.splitlines()
    assert lines[0].startswith("Task")
    assert set(lines[1]) <= {"-", " "}
    assert "294.81" in lines[3]
    assert lines[2].split()[2:] == ["-"] * 5


def test_round_half_even():
    assert round_half_even(Fraction(1, 8)) == Decimal("0.12")
    assert round_half_even("0.135") == Decimal("0.14")
    assert round_half_even(2.5, 0) == Decimal("2")
