import statistics
import threading
from typing import Sequence

from scripts.models.TranslateError import NoMeasurementsError


class Meter:
    """
    Thread-safe usage counters for one backend.

    Billing counts characters once per successfully translated segment:
    characters_submitted only grows when a batch comes back complete. Characters of
    failed attempts go to characters_retried, characters of batches rejected for a
    length mismatch go to characters_rejected.
    """

    _COUNTERS = (
        "characters_submitted",
        "characters_received",
        "segments_translated",
        "requests_made",
        "batches_completed",
        "batches_failed",
        "characters_retried",
        "characters_rejected",
    )

    def __init__(self):
        self._lock = threading.Lock()
        self.characters_submitted = 0
        self.characters_received = 0
        self.segments_translated = 0
        self.requests_made = 0
        self.batches_completed = 0
        self.batches_failed = 0
        self.characters_retried = 0
        self.characters_rejected = 0
        self.wall_seconds = 0.0
        self.batch_latencies: list[float] = []

    def count_request(self):
        with self._lock:
            self.requests_made += 1

    def record_retry(self, characters: int):
        with self._lock:
            self.characters_retried += characters

    def record_batch(self, texts: Sequence[str], outputs: Sequence[str], latency: float):
        with self._lock:
            self.characters_submitted += sum(len(t) for t in texts)
            self.characters_received += sum(len(t) for t in outputs)
            self.segments_translated += len(texts)
            self.batches_completed += 1
            self.batch_latencies.append(latency)

    def record_rejected(self, texts: Sequence[str]):
        with self._lock:
            self.characters_rejected += sum(len(t) for t in texts)
            self.batches_failed += 1

    def add_wall_seconds(self, seconds: float):
        with self._lock:
            self.wall_seconds += seconds

    def mean_latency(self) -> float:
        """Average seconds per translated batch."""
        with self._lock:
            if not self.batch_latencies:
                raise NoMeasurementsError("no batch has been translated yet")
            return statistics.fmean(self.batch_latencies)

    def snapshot(self) -> dict:
        with self._lock:
            state = {name: getattr(self, name) for name in self._COUNTERS}
            state["wall_seconds"] = self.wall_seconds
            state["batch_latencies"] = list(self.batch_latencies)
            return state

    def restore(self, state: dict):
        """Replaces all counters with a snapshot, e.g. when resuming from a checkpoint."""
        with self._lock:
            for name in self._COUNTERS:
                setattr(self, name, int(state.get(name, 0)))
            self.wall_seconds = float(state.get("wall_seconds", 0.0))
            self.batch_latencies = [float(x) for x in state.get("batch_latencies", [])]

    def merge(self, state: dict):
        """Adds a snapshot's counts to this meter."""
        with self._lock:
            for name in self._COUNTERS:
                setattr(self, name, getattr(self, name) + int(state.get(name, 0)))
            self.wall_seconds += float(state.get("wall_seconds", 0.0))
            self.batch_latencies.extend(float(x) for x in state.get("batch_latencies", []))

    def record_attempts(self, attempts: int, retried_characters: int):
        """Counts requests and failed-attempt characters of a batch run elsewhere."""
        with self._lock:
            self.requests_made += attempts
            self.characters_retried += retried_characters

    def summary(self) -> dict:
        """Snapshot without the per-batch latency list, plus the mean latency."""
        state = self.snapshot()
        latencies = state.pop("batch_latencies")
        state["mean_batch_latency"] = statistics.fmean(latencies) if latencies else None
        return state

    def __repr__(self) -> str:
        return (
            f"Meter(chars={self.characters_submitted}, "
            f"segments={self.segments_translated}, requests={self.requests_made})"
        )
