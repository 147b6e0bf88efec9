import os
import random
import re
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Sequence, Union

import requests
from loguru import logger
from requests.adapters import HTTPAdapter

from scripts.models.Meter import Meter
from scripts.models.TranslateError import (
    InvalidBatchError,
    LengthMismatchError,
    RateLimitedError,
    RequestRejectedError,
    TransportError,
    UsageError,
)
from scripts.settings.translation import (
    API_KEY_ENV,
    DEFAULT_BACKOFF_BASE,
    DEFAULT_BATCH_SIZE,
    DEFAULT_END_DELIMITER,
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_MAX_IN_FLIGHT,
    DEFAULT_SOURCE_LANG,
    DEFAULT_START_DELIMITER,
    DEFAULT_TARGET_LANG,
    DEFAULT_TIMEOUT,
    MOCK_KINDS,
    MOCK_PREFIX,
    RATE_LIMIT_STATUS_CODE,
    RETRY_STATUS_CODES,
    TRANSLATE_PATH,
)


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = "mock:identity"
    source_lang: str = DEFAULT_SOURCE_LANG
    target_lang: str = DEFAULT_TARGET_LANG
    max_batch_size: int = DEFAULT_BATCH_SIZE
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    backoff_base: float = DEFAULT_BACKOFF_BASE
    timeout: float = DEFAULT_TIMEOUT
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    def __post_init__(self):
        if self.max_batch_size < 1:
            raise UsageError(f"max batch size must be >= 1, got {self.max_batch_size}")
        if self.max_attempts < 1:
            raise UsageError(f"max attempts must be >= 1, got {self.max_attempts}")
        if self.max_in_flight < 1:
            raise UsageError(f"in-flight limit must be >= 1, got {self.max_in_flight}")

    def fingerprint(self) -> dict:
        """The fields that change what a job produces (not how fast)."""
        return {
            "endpoint": self.endpoint,
            "source_lang": self.source_lang,
            "target_lang": self.target_lang,
            "max_batch_size": self.max_batch_size,
        }

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BatchOutcome:
    """One finished batch: translations or the reason the batch was rejected."""

    index: int
    texts: Sequence[str]
    outputs: Optional[list[str]]
    latency: float = 0.0
    attempts: int = 1
    retried_characters: int = 0
    error: Optional[str] = field(default=None)

    @property
    def ok(self) -> bool:
        return self.outputs is not None


class TranslationBackend(ABC):
    """
    Batched translation with retries, metering and a bounded number of batches in flight.

    Subclasses only implement ``_request``: one attempt at translating one batch.
    """

    def __init__(
        self,
        config: BackendConfig = BackendConfig(),
        meter: Optional[Meter] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.meter = meter or Meter()
        self._sleep = sleep

    @abstractmethod
    def _request(self, texts: list[str]) -> list[str]:
        """Translates one batch in a single attempt."""

    def _check_batch(self, texts: Sequence[str]):
        if not texts:
            raise InvalidBatchError("cannot translate an empty batch")
        if len(texts) > self.config.max_batch_size:
            raise InvalidBatchError(
                f"batch of {len(texts)} exceeds max batch size {self.config.max_batch_size}"
            )

    def run_batch(self, texts: Sequence[str], index: int = 0) -> BatchOutcome:
        """
        Translates one batch, retrying transport failures with exponential backoff.

        :raises TransportError: retries exhausted.
        :raises LengthMismatchError: the backend returned the wrong number of strings.
        """
        self._check_batch(texts)
        texts = list(texts)
        characters = sum(len(t) for t in texts)
        retried = 0
        started = time.perf_counter()

        for attempt in range(1, self.config.max_attempts + 1):
            self.meter.count_request()
            try:
                outputs = self._request(texts)
                break
            except TransportError as e:
                self.meter.record_retry(characters)
                retried += characters
                if attempt == self.config.max_attempts:
                    logger.error(f"Batch {index} failed after {attempt} attempts: {e}")
                    raise
                delay = self.config.backoff_base * 2 ** (attempt - 1)
                if isinstance(e, RateLimitedError):
                    delay = max(delay, e.retry_after)
                logger.warning(
                    f"Batch {index} attempt {attempt} failed ({e.reason}): {e}; "
                    f"retrying in {delay:.1f}s"
                )
                self._sleep(delay)

        latency = time.perf_counter() - started
        if len(outputs) != len(texts):
            self.meter.record_rejected(texts)
            raise LengthMismatchError(len(texts), len(outputs), attempts=attempt)
        self.meter.record_batch(texts, outputs, latency)
        return BatchOutcome(index, texts, outputs, latency, attempt, retried)

    def translate_batch(self, texts: Sequence[str]) -> list[str]:
        """Translates a batch; output[i] is the translation of texts[i]."""
        return self.run_batch(texts).outputs

    def _outcome(self, index: int, texts: Sequence[str]) -> BatchOutcome:
        try:
            return self.run_batch(texts, index)
        except LengthMismatchError as e:
            logger.warning(f"Batch {index} rejected: {e}")
            return BatchOutcome(
                index, list(texts), None, attempts=e.attempts, error=e.reason
            )

    def translate_batches(
        self, batches: Sequence[Sequence[str]], first_index: int = 0
    ) -> Iterator[BatchOutcome]:
        """
        Translates batches with at most ``max_in_flight`` concurrent requests and
        yields outcomes in submission order, whatever order they complete in.

        A LengthMismatch rejects only its own batch; transport failures propagate.
        Closing the iterator early cancels batches that have not started.
        """
        workers = self.config.max_in_flight
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="translate") as pool:
            pending = []
            queue = iter(enumerate(batches, start=first_index))
            try:
                for index, texts in queue:
                    pending.append(pool.submit(self._outcome, index, texts))
                    if len(pending) >= workers:
                        break
                while pending:
                    outcome = pending.pop(0).result()
                    nxt = next(queue, None)
                    if nxt is not None:
                        pending.append(pool.submit(self._outcome, *nxt))
                    yield outcome
            finally:
                for future in pending:
                    future.cancel()

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class HttpBackend(TranslationBackend):
    """
    Client for the JSON translate protocol:
    POST {endpoint}/translate {"texts": [...], "source": ..., "target": ...}
    -> {"translations": [...]}.
    """

    def __init__(self, config: BackendConfig, meter: Optional[Meter] = None, **kwargs):
        super().__init__(config, meter, **kwargs)
        self.url = config.endpoint.rstrip("/")
        if not self.url.endswith(TRANSLATE_PATH):
            self.url += TRANSLATE_PATH
        self.session = requests.Session()
        adapter = HTTPAdapter(
            pool_connections=1, pool_maxsize=config.max_in_flight, max_retries=0
        )
        self.session.mount("http://", adapter)
        self.session.mount("https://", adapter)
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            self.session.headers["Authorization"] = f"Bearer {api_key}"

    def _request(self, texts: list[str]) -> list[str]:
        payload = {
            "texts": texts,
            "source": self.config.source_lang,
            "target": self.config.target_lang,
        }
        try:
            response = self.session.post(self.url, json=payload, timeout=self.config.timeout)
        except requests.RequestException as e:
            raise TransportError(f"{self.url}: {e}") from e

        if response.status_code == RATE_LIMIT_STATUS_CODE:
            try:
                retry_after = float(response.headers.get("Retry-After", 0))
            except ValueError:
                retry_after = 0.0
            raise RateLimitedError(f"{self.url}: rate limited", retry_after)
        if response.status_code in RETRY_STATUS_CODES:
            raise TransportError(f"{self.url}: HTTP {response.status_code}")
        if response.status_code != 200:
            raise RequestRejectedError(f"{self.url}: HTTP {response.status_code}")

        try:
            translations = response.json()["translations"]
        except (ValueError, KeyError, TypeError) as e:
            raise TransportError(f"{self.url}: malformed response: {e}") from e
        if not isinstance(translations, list) or not all(
            isinstance(t, str) for t in translations
        ):
            raise TransportError(f"{self.url}: 'translations' must be a list of strings")
        return translations

    def close(self):
        self.session.close()


# Deterministic test doubles


class IdentityBackend(TranslationBackend):
    def _request(self, texts: list[str]) -> list[str]:
        return list(texts)


class ReverseWordsBackend(TranslationBackend):
    def _request(self, texts: list[str]) -> list[str]:
        return [" ".join(reversed(text.split())) for text in texts]


# Small en -> pt glossary; other words get a seeded pseudo-translation
_GLOSSARY = {
    "the": "o",
    "a": "um",
    "is": "é",
    "of": "de",
    "and": "e",
    "in": "em",
    "has": "tem",
    "states": "estados",
    "country": "país",
    "city": "cidade",
    "capital": "capital",
    "what": "qual",
    "who": "quem",
    "where": "onde",
    "when": "quando",
    "year": "ano",
}


class DictionarySwapBackend(TranslationBackend):
    """
    Replaces every word through a glossary or a seeded letter shuffle.
    Delimiter tokens (any ``protected`` string) pass through untouched.
    """

    def __init__(
        self,
        config: BackendConfig = BackendConfig(),
        meter: Optional[Meter] = None,
        seed: int = 0,
        protected: Sequence[str] = (DEFAULT_START_DELIMITER, DEFAULT_END_DELIMITER),
        **kwargs,
    ):
        super().__init__(config, meter, **kwargs)
        self.seed = seed
        self._protected = (
            re.compile("(" + "|".join(re.escape(p) for p in protected) + ")")
            if protected
            else None
        )

    def _swap_word(self, match: re.Match) -> str:
        word = match.group(0)
        swapped = _GLOSSARY.get(word.lower())
        if swapped is None:
            letters = list(word.lower())
            random.Random(f"{self.seed}:{word.lower()}").shuffle(letters)
            swapped = "".join(letters)
        return swapped.capitalize() if word[0].isupper() else swapped

    def _translate(self, text: str) -> str:
        pieces = self._protected.split(text) if self._protected else [text]
        return "".join(
            piece if i % 2 else re.sub(r"\w+", self._swap_word, piece)
            for i, piece in enumerate(pieces)
        )

    def _request(self, texts: list[str]) -> list[str]:
        return [self._translate(text) for text in texts]


class DelimiterDropperBackend(TranslationBackend):
    """
    Identity translation that loses each delimiter occurrence independently with
    probability p. Decisions are seeded by (seed, text), so results do not depend
    on batch order or concurrency.
    """

    def __init__(
        self,
        config: BackendConfig = BackendConfig(),
        meter: Optional[Meter] = None,
        p: float = 0.1,
        seed: int = 0,
        delimiters: Sequence[str] = (DEFAULT_START_DELIMITER, DEFAULT_END_DELIMITER),
        **kwargs,
    ):
        super().__init__(config, meter, **kwargs)
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"drop probability must be in [0, 1], got {p}")
        self.p = p
        self.seed = seed
        self._pattern = re.compile("(" + "|".join(re.escape(d) for d in delimiters) + ")")

    def _drop(self, text: str) -> str:
        rng = random.Random(f"{self.seed}\x1f{text}")
        pieces = self._pattern.split(text)
        return "".join(
            "" if i % 2 and rng.random() < self.p else piece
            for i, piece in enumerate(pieces)
        )

    def _request(self, texts: list[str]) -> list[str]:
        return [self._drop(text) for text in texts]


def make_mock(
    kind: str,
    config: BackendConfig = BackendConfig(),
    meter: Optional[Meter] = None,
    **params,
) -> TranslationBackend:
    """
    Builds a deterministic test double.

    :param kind: identity | reverse-words | dictionary-swap | delimiter-dropper
    :param params: seed (dictionary-swap, delimiter-dropper), p and delimiters
        (delimiter-dropper), protected (dictionary-swap).
    """
    if kind == "identity":
        return IdentityBackend(config, meter)
    if kind == "reverse-words":
        return ReverseWordsBackend(config, meter)
    if kind == "dictionary-swap":
        return DictionarySwapBackend(config, meter, **params)
    if kind == "delimiter-dropper":
        return DelimiterDropperBackend(config, meter, **params)
    raise UsageError(f"unknown mock backend '{kind}', known: {', '.join(MOCK_KINDS)}")


def parse_mock_address(address: str) -> tuple[str, dict]:
    """
    Splits 'mock:<kind>[:param[:param]]' into kind and keyword parameters:
    mock:dictionary-swap:SEED, mock:delimiter-dropper:P[:SEED].
    """
    kind, *args = address[len(MOCK_PREFIX) :].split(":")
    try:
        if kind == "dictionary-swap":
            return kind, {"seed": int(args[0])} if args else {}
        if kind == "delimiter-dropper":
            params: dict[str, Union[int, float]] = {}
            if args:
                params["p"] = float(args[0])
            if len(args) > 1:
                params["seed"] = int(args[1])
            return kind, params
    except ValueError:
        raise UsageError(f"bad parameters in backend address '{address}'") from None
    if args:
        raise UsageError(f"mock backend '{kind}' takes no parameters")
    return kind, {}


def make_backend(
    config: BackendConfig,
    meter: Optional[Meter] = None,
    delimiters: Optional[Sequence[str]] = None,
) -> TranslationBackend:
    """Builds a backend from ``config.endpoint``: a mock address or an http(s) URL."""
    address = config.endpoint
    if address.startswith(MOCK_PREFIX):
        kind, params = parse_mock_address(address)
        if delimiters is not None:
            if kind == "delimiter-dropper":
                params["delimiters"] = tuple(delimiters)
            elif kind == "dictionary-swap":
                params["protected"] = tuple(delimiters)
        return make_mock(kind, config, meter, **params)
    if address.startswith(("http://", "https://")):
        return HttpBackend(config, meter)
    raise UsageError(f"backend must be 'mock:<kind>' or an http(s) URL, got '{address}'")


def backend_summary(backend: TranslationBackend) -> Mapping:
    return {"backend": backend.config.to_dict(), "meter": backend.meter.summary()}
