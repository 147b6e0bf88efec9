from datetime import datetime
from pathlib import Path

import yaml

from scripts.settings.common import ERROR_LOG_FILE, RUN_LOG_YAML


class Log:
    """
    Base class for the log files kept in a job's output directory.
    """

    linesep: str = "=" * 50  # Separator line for log entries

    def __init__(self, path: Path, file_name: str):
        """
        :param path: Output directory, or the log file itself.
        :param file_name: File name used when ``path`` is a directory.
        """
        path = Path(path)
        self.file: Path = path if path.suffix and not path.is_dir() else path / file_name
        self.dir = self.file.parent

    def write(self, *args):
        raise NotImplementedError


class ErrorLog(Log):
    """
    Plain-text log of failures, one block per failure.
    """

    def __init__(self, path: Path):
        super().__init__(path, ERROR_LOG_FILE)

    def write(self, *args):
        """
        :param args: Lines of the entry, e.g. a summary and a traceback.
        """
        self.dir.mkdir(parents=True, exist_ok=True)
        stamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        contents = "\n".join((stamp, *args)) + "\n" + self.linesep + "\n"
        with self.file.open("a", encoding="utf-8") as f:
            f.write(contents)


class RunLog(Log):
    """
    YAML list of finished (or interrupted) jobs; every run appends one entry.
    """

    def __init__(self, path: Path):
        super().__init__(path, RUN_LOG_YAML)
        self.contents: list[dict] = []

    def read(self) -> list[dict]:
        if not self.file.is_file():
            return []
        with self.file.open("r", encoding="utf-8") as f:
            return yaml.safe_load(f) or []

    def write(self, log_dic: dict = None):
        """
        Appends ``log_dic`` with the next index and rewrites the file.
        """
        self.contents = self.read()
        entry = {"index": len(self.contents) + 1}
        entry.update(log_dic or {})
        self.contents.append(entry)
        self.dir.mkdir(parents=True, exist_ok=True)
        with self.file.open("w", encoding="utf-8") as f:
            yaml.safe_dump(
                self.contents,
                f,
                default_flow_style=False,
                sort_keys=False,
                allow_unicode=True,
                indent=4,
                width=220,
            )
