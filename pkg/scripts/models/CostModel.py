"""
Cost and latency of translating datasets: one-time cost of translating training
data, recurring cost per 1,000 examples translated at inference time, and the
latency a translation step adds to every batch.

All arithmetic is exact (``Fraction``); values are rounded only when presented.
"""

from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import yaml
from loguru import logger

from scripts.models.Dataset import NLIPair, QADataset, TextCollection
from scripts.models.Meter import Meter
from scripts.models.TranslateError import (
    InvalidPricingError,
    MissingStatisticError,
    UsageError,
)
from scripts.settings.cost import (
    DEFAULT_PRICING_PROFILE,
    DISCREPANCY_TOLERANCE,
    INFER_SPLITS,
    PASSAGE_SPLIT,
    PRICING_PROFILES,
    RECURRING_UNIT,
    REFERENCE_STATS,
    REFERENCE_TABLE,
    REFERENCE_THROUGHPUT,
    SCENARIOS,
    USD_DECIMALS,
)
from scripts.settings.translation import DEFAULT_TOP_K

Number = Union[int, float, str, Fraction, Decimal]
SECONDS_PER_HOUR = 3600
CHARACTERS_PER_PRICE_UNIT = 1_000_000


def exact(value: Number) -> Fraction:
    """Exact rational value of a number; floats are read through their shortest repr."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def round_half_even(value: Number, decimals: int = USD_DECIMALS) -> Decimal:
    """Banker's rounding of an exact value to a number of decimals."""
    value = exact(value)
    quantum = Decimal(1).scaleb(-decimals)
    return (Decimal(value.numerator) / Decimal(value.denominator)).quantize(
        quantum, rounding=ROUND_HALF_EVEN
    )


@dataclass(frozen=True)
class PricingModel:
    """
    :param commercial_rates: USD per million characters, one per provider.
    :param gpu_hourly_rates: USD per GPU hour, one per cloud.
    """

    commercial_rates: tuple[Fraction, ...]
    gpu_hourly_rates: tuple[Fraction, ...]
    name: str = ""

    def __post_init__(self):
        for label, rates in (
            ("commercial_per_million", self.commercial_rates),
            ("gpu_per_hour", self.gpu_hourly_rates),
        ):
            if not rates:
                raise InvalidPricingError(f"pricing '{self.name}': {label} is empty")
            if any(rate <= 0 for rate in rates):
                raise InvalidPricingError(f"pricing '{self.name}': {label} must be > 0")

    @classmethod
    def from_dict(cls, document: Mapping, name: str = "") -> "PricingModel":
        try:
            commercial = document["commercial_per_million"]
            gpu = document["gpu_per_hour"]
        except (KeyError, TypeError):
            raise InvalidPricingError(
                "pricing needs 'commercial_per_million' and 'gpu_per_hour' lists"
            ) from None
        try:
            commercial_rates = tuple(exact(rate) for rate in commercial)
            gpu_rates = tuple(exact(rate) for rate in gpu)
        except (TypeError, ValueError) as e:
            raise InvalidPricingError(f"pricing '{name}': rates must be numbers") from e
        return cls(commercial_rates, gpu_rates, name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "commercial_per_million": [float(r) for r in self.commercial_rates],
            "gpu_per_hour": [float(r) for r in self.gpu_hourly_rates],
        }


def load_profile(profile: Union[str, Path] = DEFAULT_PRICING_PROFILE) -> PricingModel:
    """
    Returns a shipped pricing profile by name, or loads one from a JSON/YAML file.

    :raises UsageError: neither a known profile nor an existing file.
    """
    if str(profile) in PRICING_PROFILES:
        return PricingModel.from_dict(PRICING_PROFILES[str(profile)], str(profile))
    path = Path(profile)
    if not path.is_file():
        raise UsageError(
            f"unknown pricing profile '{profile}' "
            f"(known: {', '.join(PRICING_PROFILES)}; or a file path)"
        )
    with path.open("r", encoding="utf-8") as f:
        document = yaml.safe_load(f)
    return PricingModel.from_dict(document, path.stem)


@dataclass(frozen=True)
class ThroughputProfile:
    """
    Measured translation throughput.

    ``wall_hours`` is the time one full translate-train run took, needed for the
    open-source one-time cost.
    """

    seconds_per_batch: Fraction
    batch_size: int
    examples_per_second: Optional[Fraction] = None
    wall_hours: Optional[Fraction] = None
    tolerance: Fraction = exact(DISCREPANCY_TOLERANCE)

    def __post_init__(self):
        if self.seconds_per_batch <= 0 or self.batch_size < 1:
            raise UsageError("throughput needs seconds_per_batch > 0 and batch_size >= 1")
        if self.examples_per_second is not None:
            implied = self.implied_examples_per_second
            if abs(self.examples_per_second - implied) > self.tolerance * implied:
                raise UsageError(
                    f"examples_per_second {float(self.examples_per_second):.4f} does not "
                    f"match batch_size / seconds_per_batch = {float(implied):.4f}"
                )

    @property
    def implied_examples_per_second(self) -> Fraction:
        return self.batch_size / self.seconds_per_batch

    @classmethod
    def from_dict(cls, document: Mapping) -> "ThroughputProfile":
        try:
            return cls(
                exact(document["seconds_per_batch"]),
                int(document["batch_size"]),
                exact(document["examples_per_second"])
                if document.get("examples_per_second") is not None
                else None,
                exact(document["wall_hours"])
                if document.get("wall_hours") is not None
                else None,
            )
        except KeyError as e:
            raise MissingStatisticError(f"throughput profile lacks {e}") from None

    @classmethod
    def from_meter(cls, meter: Meter, batch_size: int) -> "ThroughputProfile":
        """Profile measured by a backend meter: mean batch latency and wall time."""
        return cls(
            exact(meter.mean_latency()),
            batch_size,
            wall_hours=exact(meter.wall_seconds) / SECONDS_PER_HOUR,
        )

    def to_dict(self) -> dict:
        return {
            "seconds_per_batch": float(self.seconds_per_batch),
            "batch_size": self.batch_size,
            "examples_per_second": float(self.implied_examples_per_second),
            "wall_hours": float(self.wall_hours) if self.wall_hours is not None else None,
        }


@dataclass(frozen=True)
class SplitStats:
    characters: int
    examples: int
    avg_chars_per_example: Fraction

    @classmethod
    def of(cls, characters: int, examples: int) -> "SplitStats":
        average = Fraction(characters, examples) if examples else Fraction(0)
        return cls(characters, examples, average)

    @classmethod
    def from_dict(cls, document: Mapping) -> "SplitStats":
        """
        Reads a split written as totals; when the example count is missing it is
        derived from the total and the published average.
        """
        if "characters" not in document:
            raise MissingStatisticError("split statistics lack 'characters'")
        characters = int(document["characters"])
        if "avg_chars_per_example" in document:
            average = exact(document["avg_chars_per_example"])
            examples = document.get("examples")
            if examples is None:
                examples = round(characters / average) if average else 0
            return cls(characters, int(examples), average)
        if "examples" in document:
            return cls.of(characters, int(document["examples"]))
        raise MissingStatisticError(
            "split statistics need 'examples' or 'avg_chars_per_example'"
        )

    def to_dict(self) -> dict:
        return {
            "characters": self.characters,
            "examples": self.examples,
            "avg_chars_per_example": float(round_half_even(self.avg_chars_per_example)),
        }


@dataclass(frozen=True)
class DatasetStats:
    splits: Mapping[str, SplitStats] = field(default_factory=dict)

    def __getitem__(self, split: str) -> SplitStats:
        try:
            return self.splits[split]
        except KeyError:
            raise MissingStatisticError(
                f"no statistics for split '{split}' (have: {', '.join(self.splits) or 'none'})"
            ) from None

    def __contains__(self, split: str) -> bool:
        return split in self.splits

    def merge(self, other: "DatasetStats") -> "DatasetStats":
        return DatasetStats({**self.splits, **other.splits})

    @classmethod
    def from_dict(cls, document: Mapping) -> "DatasetStats":
        return cls({name: SplitStats.from_dict(split) for name, split in document.items()})

    def to_dict(self) -> dict:
        return {name: split.to_dict() for name, split in self.splits.items()}


def dataset_stats(
    dataset: Union[QADataset, Sequence[NLIPair], TextCollection],
    split: str = "train",
    qa_unit: str = "example",
) -> DatasetStats:
    """
    Counts the characters the pipeline would translate: context + question for QA,
    premise + hypothesis for NLI, the text of each passage or query for ranking.

    :param qa_unit: ``example`` counts every QA example with its context;
        ``paragraph`` counts each distinct context once plus all its questions.
    """
    if isinstance(dataset, QADataset):
        if qa_unit == "example":
            characters = sum(len(e.context) + len(e.question) for e in dataset)
            examples = len(dataset)
        elif qa_unit == "paragraph":
            contexts = dict.fromkeys(e.context for e in dataset)
            characters = sum(map(len, contexts)) + sum(len(e.question) for e in dataset)
            examples = len(contexts)
        else:
            raise UsageError(f"qa_unit must be 'example' or 'paragraph', got '{qa_unit}'")
    elif isinstance(dataset, TextCollection):
        characters = sum(len(text) for text in dataset.values())
        examples = len(dataset)
    else:
        pairs = list(dataset)
        characters = sum(len(p.premise) + len(p.hypothesis) for p in pairs)
        examples = len(pairs)
    return DatasetStats({split: SplitStats.of(characters, examples)})


def avg_commercial_rate(pricing: PricingModel) -> Fraction:
    """Mean USD per million characters over the commercial providers."""
    return sum(pricing.commercial_rates, Fraction(0)) / len(pricing.commercial_rates)


def avg_gpu_rate(pricing: PricingModel) -> Fraction:
    return sum(pricing.gpu_hourly_rates, Fraction(0)) / len(pricing.gpu_hourly_rates)


def one_time_commercial(characters: Number, pricing: PricingModel) -> Fraction:
    if exact(characters) < 0:
        raise UsageError("character count must be >= 0")
    return exact(characters) * avg_commercial_rate(pricing) / CHARACTERS_PER_PRICE_UNIT


def one_time_opensource(wall_hours: Number, pricing: PricingModel) -> Fraction:
    return exact(wall_hours) * avg_gpu_rate(pricing)


def recurring_commercial(
    avg_chars_per_example: Number, pricing: PricingModel, n: int = RECURRING_UNIT
) -> Fraction:
    return one_time_commercial(exact(avg_chars_per_example) * n, pricing)


def recurring_opensource(
    throughput: ThroughputProfile, pricing: PricingModel, n: int = RECURRING_UNIT
) -> Fraction:
    """GPU cost of translating n examples at the profile's throughput."""
    seconds = n / throughput.implied_examples_per_second
    return seconds / SECONDS_PER_HOUR * avg_gpu_rate(pricing)


def added_latency(throughput: ThroughputProfile) -> Fraction:
    return throughput.seconds_per_batch


def added_latency_from_meter(meter: Meter) -> Fraction:
    """:raises NoMeasurementsError: the meter has not seen a batch."""
    return exact(meter.mean_latency())


_CELLS = (
    "one_time_commercial",
    "one_time_opensource",
    "recurring_commercial",
    "recurring_opensource",
    "added_latency",
)
_HEADERS = ("One-time Comm.", "One-time OpenS", "Recurring Comm.", "Recurring OpenS", "Latency s/batch")


@dataclass(frozen=True)
class CostReport:
    """
    Costs of one scenario; cells a scenario does not have are zero and listed
    neither in ``cells`` nor in the text table.
    """

    scenario: str
    one_time_commercial: Fraction = Fraction(0)
    one_time_opensource: Fraction = Fraction(0)
    recurring_commercial: Fraction = Fraction(0)
    recurring_opensource: Fraction = Fraction(0)
    added_latency: Fraction = Fraction(0)
    cells: frozenset[str] = frozenset()
    task: str = ""

    def value(self, cell: str) -> Fraction:
        return getattr(self, cell)

    def rounded(self, cell: str, decimals: int = USD_DECIMALS) -> Decimal:
        return round_half_even(self.value(cell), decimals)

    def to_dict(self, decimals: int = USD_DECIMALS) -> dict:
        document = {"task": self.task, "scenario": self.scenario}
        for cell in _CELLS:
            document[cell] = float(self.rounded(cell, decimals)) if cell in self.cells else None
        return document

    def row(self) -> list[str]:
        return [
            f"{self.rounded(cell):,}" if cell in self.cells else "-" for cell in _CELLS
        ]


def build_report(
    scenario: str,
    stats: DatasetStats,
    pricing: PricingModel,
    throughput: Optional[ThroughputProfile] = None,
    train_split: str = "train",
    infer_split: str = "test",
    k: int = DEFAULT_TOP_K,
    task: str = "",
) -> CostReport:
    """
    Costs of one scenario.

    zero-shot has no translation cost. translate-train pays the one-time cost of
    the training split. translate-infer pays per 1k inference examples plus the
    batch latency; strategy 1 also pays the one-time cost of the collection, and
    strategy 2 pays, per query, for the query and its top-k passages.

    :raises MissingStatisticError: a split, throughput or wall time the scenario needs is missing.
    """
    if scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario '{scenario}', expected one of {SCENARIOS}")
    if scenario == "zero-shot":
        return CostReport(scenario, task=task)

    def need_throughput() -> ThroughputProfile:
        if throughput is None:
            raise MissingStatisticError(f"{scenario} needs a throughput profile")
        return throughput

    values: dict[str, Fraction] = {}
    if scenario in ("translate-train", "translate-infer-s1"):
        profile = need_throughput()
        if profile.wall_hours is None:
            raise MissingStatisticError(f"{scenario} needs the measured wall_hours")
        values["one_time_commercial"] = one_time_commercial(stats[train_split].characters, pricing)
        values["one_time_opensource"] = one_time_opensource(profile.wall_hours, pricing)
    if scenario.startswith("translate-infer"):
        profile = need_throughput()
        per_example = stats[infer_split].avg_chars_per_example
        if scenario == "translate-infer-s2":
            per_example += k * stats[PASSAGE_SPLIT].avg_chars_per_example
        values["recurring_commercial"] = recurring_commercial(per_example, pricing)
        values["recurring_opensource"] = recurring_opensource(profile, pricing)
        values["added_latency"] = added_latency(profile)
    return CostReport(scenario, cells=frozenset(values), task=task, **values)


def format_table(reports: Iterable[CostReport]) -> str:
    """Aligned text table, one row per report."""
    rows = [["Task", "Scenario", *_HEADERS]]
    rows += [[r.task, r.scenario, *r.row()] for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = [
        "  ".join(
            cell.ljust(width) if i < 2 else cell.rjust(width)
            for i, (cell, width) in enumerate(zip(row, widths))
        ).rstrip()
        for row in rows
    ]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines)


@dataclass(frozen=True)
class Discrepancy:
    task: str
    scenario: str
    cell: str
    derived: Decimal
    published: Decimal
    relative_gap: float

    def __str__(self) -> str:
        return (
            f"{self.task} {self.scenario} {self.cell}: derived {self.derived} "
            f"vs published {self.published} ({self.relative_gap:.1%})"
        )


def reference_stats() -> dict[str, DatasetStats]:
    return {task: DatasetStats.from_dict(splits) for task, splits in REFERENCE_STATS.items()}


def reference_throughput(key: str) -> ThroughputProfile:
    return ThroughputProfile.from_dict(REFERENCE_THROUGHPUT[key])


def reproduce_reference_table(
    pricing: Optional[PricingModel] = None,
    tolerance: float = DISCREPANCY_TOLERANCE,
) -> tuple[list[CostReport], list[Discrepancy]]:
    """
    Rebuilds every row of the shipped cost table from the shipped statistics.

    A derived cell is flagged when, rounded to the published precision, it differs
    from the published value by more than ``tolerance`` (relative).
    """
    pricing = pricing or load_profile(DEFAULT_PRICING_PROFILE)
    stats = reference_stats()
    reports: list[CostReport] = []
    discrepancies: list[Discrepancy] = []
    for task, scenario, throughput_key, train_split, published in REFERENCE_TABLE:
        report = build_report(
            scenario,
            stats[task],
            pricing,
            reference_throughput(throughput_key),
            train_split=train_split,
            infer_split=INFER_SPLITS[task],
            task=task,
        )
        reports.append(report)
        for cell, (value, decimals) in published.items():
            derived = report.rounded(cell, decimals)
            expected = round_half_even(value, decimals)
            gap = abs(float((derived - expected) / expected)) if expected else 0.0
            if gap > tolerance:
                discrepancy = Discrepancy(task, scenario, cell, derived, expected, gap)
                logger.warning(f"Published value not reproduced: {discrepancy}")
                discrepancies.append(discrepancy)
    return reports, discrepancies
