import json
import os
from pathlib import Path
from typing import Optional

from loguru import logger

from scripts.models.TranslateError import StaleCheckpointError
from scripts.settings.common import CHECKPOINT_PARTS_SUFFIX


class Checkpoint:
    """
    Progress of one translation job, saved after every committed batch.

    The checkpoint itself is a small JSON document; the translated batches are
    appended to a JSON-lines file next to it (``outputs_path``), one line per batch.
    """

    def __init__(self, path: Path):
        """
        :param path: Location of the checkpoint JSON file.
        """
        self.path = Path(path)
        self.outputs_path = self.path.with_name(self.path.name + CHECKPOINT_PARTS_SUFFIX)
        self.job_id = ""
        self.task = ""
        self.total_batches = 0
        self.last_completed_batch = -1
        self.completed = False
        self.meter: dict = {}
        self.job: dict = {}

    def start(self, job_id: str, task: str, total_batches: int, job: Optional[dict] = None):
        """
        Begins a fresh job, discarding any earlier progress at this path.
        """
        self.job_id = job_id
        self.task = task
        self.total_batches = total_batches
        self.last_completed_batch = -1
        self.completed = total_batches == 0
        self.meter = {}
        self.job = job or {}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.outputs_path.write_text("", encoding="utf-8")
        self.dump()

    def dump(self):
        """
        Writes the checkpoint atomically (temp file + rename).
        """
        document = {
            "job_id": self.job_id,
            "task": self.task,
            "total_batches": self.total_batches,
            "last_completed_batch": self.last_completed_batch,
            "completed": self.completed,
            "outputs_path": self.outputs_path.name,
            "meter": self.meter,
            "job": self.job,
        }
        temp = self.path.with_name(self.path.name + ".tmp")
        with temp.open("w", encoding="utf-8") as f:
            json.dump(document, f, ensure_ascii=False, indent=2)
        os.replace(temp, self.path)

    def load(self) -> bool:
        """
        Loads the checkpoint if the file exists.
        Return True if the file was successfully loaded, otherwise False.
        """
        if not self.path.is_file():
            return False
        with self.path.open("r", encoding="utf-8") as f:
            document = json.load(f)
        self.job_id = document.get("job_id", "")
        self.task = document.get("task", "")
        self.total_batches = int(document.get("total_batches", 0))
        self.last_completed_batch = int(document.get("last_completed_batch", -1))
        self.completed = bool(document.get("completed", False))
        self.meter = document.get("meter", {})
        self.job = document.get("job", {})
        outputs_name = document.get("outputs_path")
        if outputs_name:
            self.outputs_path = self.path.with_name(outputs_name)
        return True

    def verify(self, job_id: str):
        """
        :raises StaleCheckpointError: the checkpoint was written for another job definition.
        """
        if self.job_id != job_id:
            raise StaleCheckpointError(
                f"{self.path} belongs to job {self.job_id[:12]}, not {job_id[:12]}; "
                f"the configuration or the input changed"
            )

    def commit(self, index: int, outputs: Optional[list[str]], error: Optional[str], meter: dict):
        """
        Records one finished batch, then advances the checkpoint past it.
        """
        line = {"batch": index, "outputs": outputs, "error": error}
        with self.outputs_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(line, ensure_ascii=False) + "\n")
            f.flush()
            os.fsync(f.fileno())
        self.last_completed_batch = index
        self.completed = index + 1 >= self.total_batches
        self.meter = meter
        self.dump()

    def read_batches(self) -> dict[int, Optional[list[str]]]:
        """
        Outputs of the committed batches; lines past the last commit are ignored.
        """
        batches: dict[int, Optional[list[str]]] = {}
        if not self.outputs_path.is_file():
            return batches
        with self.outputs_path.open("r", encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    logger.warning(f"Ignoring torn line in {self.outputs_path}")
                    continue
                if record["batch"] <= self.last_completed_batch:
                    batches[record["batch"]] = record["outputs"]
        missing = set(range(self.last_completed_batch + 1)) - set(batches)
        if missing:
            raise StaleCheckpointError(
                f"{self.outputs_path} lacks committed batches {sorted(missing)[:5]}"
            )
        return batches

    def remove_file(self):
        """
        Removes the checkpoint and its outputs if they exist.
        """
        for path in (self.path, self.outputs_path):
            if path.exists():
                path.unlink()
