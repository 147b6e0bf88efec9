import string
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from loguru import logger

from scripts.models.Dataset import NLIPair, QADataset, RunEntry, RunFile
from scripts.models.TranslateError import UnknownExampleIdError, UnmappedLabelError
from scripts.settings.translation import ARTICLES, DEFAULT_MRR_CUTOFF

_PUNCTUATION = set(string.punctuation) | {"«", "»", "“", "”", "‘", "’", "¿", "¡", "…", "–", "—"}


def normalize_answer(text: str, articles: Iterable[str] = ARTICLES["en"]) -> str:
    """Lowercase, drop punctuation and articles, collapse whitespace."""
    text = "".join(
        ch
        for ch in text.lower()
        if ch not in _PUNCTUATION and not unicodedata.category(ch).startswith("P")
    )
    article_set = {a.lower() for a in articles}
    return " ".join(token for token in text.split() if token not in article_set)


def exact_match(prediction: str, golds: Sequence[str], articles: Iterable[str] = ARTICLES["en"]) -> int:
    articles = tuple(articles)
    normalized = normalize_answer(prediction, articles)
    return int(any(normalized == normalize_answer(gold, articles) for gold in golds))


def _f1(prediction_tokens: list[str], gold_tokens: list[str]) -> float:
    if not prediction_tokens and not gold_tokens:
        return 1.0
    common = Counter(prediction_tokens) & Counter(gold_tokens)
    overlap = sum(common.values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(prediction_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def token_f1(prediction: str, golds: Sequence[str], articles: Iterable[str] = ARTICLES["en"]) -> float:
    """Best bag-of-tokens F1 of the prediction against any gold answer."""
    articles = tuple(articles)
    tokens = normalize_answer(prediction, articles).split()
    return max(
        (_f1(tokens, normalize_answer(gold, articles).split()) for gold in golds),
        default=0.0,
    )


@dataclass(frozen=True)
class QAScore:
    exact_match: float
    f1: float
    total: int
    missing: int

    def to_dict(self) -> dict:
        return {
            "exact_match": self.exact_match,
            "f1": self.f1,
            "total": self.total,
            "missing": self.missing,
        }


def evaluate_qa(
    dataset: QADataset,
    predictions: Mapping[str, str],
    articles: Optional[Iterable[str]] = None,
) -> QAScore:
    """
    Corpus EM and F1: means of the per-example maxima over the gold answers.
    Examples without a prediction score 0.

    :raises UnknownExampleIdError: a prediction's id is not in the dataset.
    """
    articles = tuple(articles if articles is not None else ARTICLES.get(dataset.language, ARTICLES["en"]))
    ids = {example.id for example in dataset}
    unknown = [key for key in predictions if key not in ids]
    if unknown:
        raise UnknownExampleIdError(f"predictions for unknown ids: {unknown[:5]}")

    em = f1 = 0.0
    missing = 0
    for example in dataset:
        golds = [answer.text for answer in example.answers]
        if example.id not in predictions:
            missing += 1
            continue
        em += exact_match(predictions[example.id], golds, articles)
        f1 += token_f1(predictions[example.id], golds, articles)
    if missing:
        logger.warning(f"{missing} examples have no prediction and score 0")
    total = len(dataset)
    return QAScore(em / total if total else 0.0, f1 / total if total else 0.0, total, missing)


def accuracy(predictions: Sequence[str], golds: Sequence[str]) -> float:
    if len(predictions) != len(golds):
        raise ValueError(f"{len(predictions)} predictions for {len(golds)} labels")
    if not golds:
        return 0.0
    return sum(p == g for p, g in zip(predictions, golds)) / len(golds)


def evaluate_nli(
    pairs: Sequence[NLIPair],
    predictions: Mapping[str, str],
    remap: Optional[Mapping[str, str]] = None,
) -> float:
    """
    Accuracy over the gold pairs. ``remap`` rewrites predicted labels first, e.g.
    folding contradiction into neutral for a two-class gold scheme.

    :raises UnknownExampleIdError: a prediction's id is not among the pairs.
    :raises UnmappedLabelError: ``remap`` does not cover a predicted label.
    """
    ids = {pair.id for pair in pairs}
    unknown = [key for key in predictions if key not in ids]
    if unknown:
        raise UnknownExampleIdError(f"predictions for unknown ids: {unknown[:5]}")

    predicted = []
    for pair in pairs:
        label = predictions.get(pair.id)
        if label is not None and remap is not None:
            if label not in remap:
                raise UnmappedLabelError(f"label '{label}' has no mapping")
            label = remap[label]
        predicted.append(label)
    missing = sum(label is None for label in predicted)
    if missing:
        logger.warning(f"{missing} pairs have no prediction and count as wrong")
    return accuracy(predicted, [pair.label for pair in pairs])


def reciprocal_rank(ranking: Sequence[RunEntry], relevant: Iterable[str], k: int) -> float:
    """1/rank of the best-ranked relevant entry with rank <= k, else 0."""
    relevant = set(relevant)
    for entry in sorted(ranking, key=lambda e: e.rank):
        if entry.rank > k:
            break
        if entry.passage_id in relevant:
            return 1.0 / entry.rank
    return 0.0


def mrr_at_k(
    run: RunFile,
    qrels: Optional[Mapping[str, Iterable[str]]] = None,
    k: int = DEFAULT_MRR_CUTOFF,
) -> float:
    """
    Mean over judged queries of 1/rank of the first relevant passage in the top k.
    Judged queries absent from the run score 0.
    """
    qrels = qrels if qrels is not None else run.qrels
    if not qrels:
        logger.warning("mrr_at_k: no relevance judgments, score is 0")
        return 0.0
    rankings = run.rankings()
    total = sum(
        reciprocal_rank(rankings.get(query_id, []), relevant, k)
        for query_id, relevant in qrels.items()
    )
    return total / len(qrels)
