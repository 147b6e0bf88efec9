from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml
from loguru import logger

from scripts.models.Backend import BackendConfig
from scripts.models.SpanMarker import DelimiterPair
from scripts.models.TranslateError import UsageError
from scripts.settings.common import DEFAULT_CHECKPOINT_NAME
from scripts.settings.translation import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_END_DELIMITER,
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_MAX_IN_FLIGHT,
    DEFAULT_QA_MODE,
    DEFAULT_SOURCE_LANG,
    DEFAULT_START_DELIMITER,
    DEFAULT_TARGET_LANG,
    DEFAULT_TIMEOUT,
    DEFAULT_TOP_K,
    NLI_SCHEMAS,
    QA_MODES,
)

TASKS = ("qa", "nli", "passages", "queries", "strategy2")
OFFSET_POLICIES = ("repair", "reject", "raise")


@dataclass
class JobConfig:
    """
    Everything a translate job needs; a job can be rerun from this alone.
    """

    task: str = ""
    input: Optional[str] = None
    output: str = "."
    backend: str = "mock:identity"
    source_lang: str = DEFAULT_SOURCE_LANG
    target_lang: str = DEFAULT_TARGET_LANG
    batch_size: int = DEFAULT_BATCH_SIZE
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    timeout: float = DEFAULT_TIMEOUT
    delims: str = f"{DEFAULT_START_DELIMITER},{DEFAULT_END_DELIMITER}"
    qa_mode: str = DEFAULT_QA_MODE
    offset_policy: str = "repair"
    nli_schema: str = "mnli"
    run: Optional[str] = None
    collection: Optional[str] = None
    queries: Optional[str] = None
    k: int = DEFAULT_TOP_K
    checkpoint: Optional[str] = None
    resume: bool = False
    stop_after: Optional[int] = None

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> "JobConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(document) - known)
        if unknown:
            raise UsageError(f"unknown job configuration keys: {', '.join(unknown)}")
        return cls(**dict(document))

    @classmethod
    def load(cls, path: Path) -> "JobConfig":
        """Reads a JSON (or YAML) job configuration file."""
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"--config: file not found: {path}")
        with path.open("r", encoding="utf-8") as f:
            document = yaml.safe_load(f) or {}
        if not isinstance(document, dict):
            raise UsageError(f"--config: {path} must hold a mapping")
        logger.debug(f"Loaded job configuration from {path}")
        return cls.from_dict(document)

    def merged(self, overrides: Mapping[str, Any]) -> "JobConfig":
        """Copy with every non-None override applied."""
        document = self.to_dict()
        document.update({k: v for k, v in overrides.items() if v is not None})
        return JobConfig.from_dict(document)

    @property
    def output_dir(self) -> Path:
        return Path(self.output)

    @property
    def checkpoint_path(self) -> Path:
        return Path(self.checkpoint) if self.checkpoint else self.output_dir / DEFAULT_CHECKPOINT_NAME

    def delimiter_pair(self) -> DelimiterPair:
        try:
            return DelimiterPair.parse(self.delims)
        except ValueError as e:
            raise UsageError(f"--delims: {e}") from None

    def backend_config(self) -> BackendConfig:
        return BackendConfig(
            endpoint=self.backend,
            source_lang=self.source_lang,
            target_lang=self.target_lang,
            max_batch_size=self.batch_size,
            max_attempts=self.max_attempts,
            timeout=self.timeout,
            max_in_flight=self.max_in_flight,
        )

    def validate(self) -> "JobConfig":
        """
        :raises UsageError: naming the offending flag.
        """
        if self.task not in TASKS:
            raise UsageError(f"task must be one of {TASKS}, got '{self.task}'")
        if self.batch_size < 1:
            raise UsageError(f"--batch-size must be >= 1, got {self.batch_size}")
        if self.max_in_flight < 1:
            raise UsageError(f"--max-in-flight must be >= 1, got {self.max_in_flight}")
        if self.stop_after is not None and self.stop_after < 1:
            raise UsageError(f"--stop-after must be >= 1, got {self.stop_after}")
        if self.k < 1:
            raise UsageError(f"--k must be >= 1, got {self.k}")
        if self.qa_mode not in QA_MODES:
            raise UsageError(f"--qa-mode must be one of {QA_MODES}, got '{self.qa_mode}'")
        if self.offset_policy not in OFFSET_POLICIES:
            raise UsageError(f"--offset-policy must be one of {OFFSET_POLICIES}")
        if self.task == "nli" and self.nli_schema not in NLI_SCHEMAS and not Path(self.nli_schema).is_file():
            raise UsageError(f"--nli-schema: unknown schema '{self.nli_schema}'")
        self.delimiter_pair()

        required = ("run", "collection", "queries") if self.task == "strategy2" else ("input",)
        for name in required:
            value = getattr(self, name)
            if not value:
                raise UsageError(f"--{name} is required for task '{self.task}'")
            if not Path(value).is_file():
                raise UsageError(f"--{name}: file not found: {value}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def job_description(self) -> dict:
        """What a checkpoint stores to resume this job: the config without run-only switches."""
        document = self.to_dict()
        for name in ("input", "output", "run", "collection", "queries"):
            if document[name]:
                document[name] = str(Path(document[name]).resolve())
        document.update(
            resume=True, stop_after=None, checkpoint=str(self.checkpoint_path.resolve())
        )
        return document
