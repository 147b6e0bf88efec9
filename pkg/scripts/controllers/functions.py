import json
import traceback
from datetime import timedelta
from pathlib import Path
from typing import Any

import yaml
from loguru import logger

from scripts.models.Dataset import NLISchema
from scripts.models.TranslateError import UsageError
from scripts.settings.translation import NLI_SCHEMAS


def format_timedelta(delta: timedelta) -> str:
    """
    Formats a timedelta object into HH:MM:SS.

    :param delta: The timedelta object.
    :return: A string in HH:MM:SS format.
    """
    total_seconds = int(delta.total_seconds())
    hours, remainder = divmod(total_seconds, 3600)
    minutes, seconds = divmod(remainder, 60)
    return f"{hours:02}:{minutes:02}:{seconds:02}"


def format_exception(exc: BaseException) -> str:
    return "".join(traceback.format_exception(type(exc), exc, exc.__traceback__))


def read_input(path: Path, flag: str = "--input") -> bytes:
    """
    Reads a whole input file.

    :raises UsageError: the file does not exist; the message names ``flag``.
    """
    path = read_input_path(path, flag)
    logger.debug(f"Reading {path}")
    return path.read_bytes()


def write_output(path: Path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    logger.info(f"Wrote {path}")


def write_json(path: Path, document: Any):
    write_output(path, (json.dumps(document, ensure_ascii=False, indent=2) + "\n").encode("utf-8"))


def load_mapping(path: Path, flag: str) -> dict:
    """Reads a JSON (or YAML) mapping file."""
    with read_input_path(path, flag).open("r", encoding="utf-8") as f:
        document = yaml.safe_load(f)
    if not isinstance(document, dict):
        raise UsageError(f"{flag}: {path} must hold a mapping")
    return document


def read_input_path(path: Path, flag: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"{flag}: file not found: {path}")
    return path


def load_nli_schema(name_or_path: str) -> NLISchema:
    """A shipped schema by name (mnli, assin2, plain) or a descriptor file."""
    if name_or_path in NLI_SCHEMAS:
        return NLISchema.named(name_or_path)
    return NLISchema.from_dict(load_mapping(Path(name_or_path), "--nli-schema"))
