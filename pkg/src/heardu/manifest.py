"""Dataset manifest: a header line followed by one JSON record per line.

The header carries provenance (seed, config digest, backend identities, stage
parameters) and per-status counts. It deliberately holds no wall-clock data
so identical runs produce identical bytes; timestamps go to the
``<manifest>.runlog.jsonl`` sidecar.

Stages stream finished records into ``<manifest>.journal`` and rewrite the
manifest atomically at the end, which is what ``--resume`` replays.
"""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .core import TokenizationMode
from .errors import DataError
from .io import atomic_write_text, open_log_for_append
from .records import GenRecord, Status

FORMAT = "heardu.manifest/1"


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


@dataclass
class Manifest:
    header: dict = field(default_factory=dict)
    records: list[GenRecord] = field(default_factory=list)

    @property
    def mode(self) -> TokenizationMode:
        return TokenizationMode.parse(self.header.get("mode", "word"))

    def counts(self) -> dict[str, int]:
        c = Counter(r.status.value for r in self.records)
        return {s.value: c.get(s.value, 0) for s in Status}

    def check(self) -> None:
        ids = [r.id for r in self.records]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise DataError("manifest record ids are not strictly increasing")

    def to_text(self) -> str:
        self.records.sort(key=lambda r: r.id)
        self.check()
        header = dict(self.header, format=FORMAT, counts=self.counts(), n_records=len(self.records))
        lines = [_dumps({"header": header})]
        lines.extend(_dumps(r.to_json()) for r in self.records)
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        text = self.to_text()
        atomic_write_text(path, text)
        self.header = json.loads(text.split("\n", 1)[0])["header"]

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        try:
            with open(path, encoding="utf-8") as fh:
                lines = [ln for ln in fh if ln.strip()]
        except OSError as exc:
            raise DataError(f"cannot read manifest {path}: {exc}") from None
        if not lines:
            raise DataError(f"{path}: empty manifest")
        try:
            first = json.loads(lines[0])
            if "header" not in first:
                raise DataError(f"{path}: first line is not a manifest header")
            header = first["header"]
            mode = header.get("mode", "word")
            records = [GenRecord.from_json(json.loads(ln), mode) for ln in lines[1:]]
        except DataError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: malformed manifest ({exc})") from None
        m = cls(header, records)
        m.check()
        counts = header.get("counts")
        if counts is not None and counts != m.counts():
            raise DataError(f"{path}: header counts {counts} disagree with body {m.counts()}")
        return m


def journal_path(manifest_path: str | Path) -> Path:
    p = Path(manifest_path)
    return p.with_name(p.name + ".journal")


def runlog_path(manifest_path: str | Path) -> Path:
    p = Path(manifest_path)
    return p.with_name(p.name + ".runlog.jsonl")


class Journal:
    """Append-only JSONL of per-record stage results."""

    def __init__(self, manifest_path: str | Path, stage: str):
        self.path = journal_path(manifest_path)
        self.stage = stage
        self._fh = None

    def replay(self) -> dict[int, dict]:
        """Entries of this stage from a previous run, keyed by record id."""
        out: dict[int, dict] = {}
        if not self.path.exists():
            return out
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    entry = json.loads(line)
                except ValueError:
                    continue
                if entry.get("stage") == self.stage:
                    out[int(entry["id"])] = entry
        return out

    def reset(self) -> None:
        self.path.unlink(missing_ok=True)

    def append(self, record_id: int, **payload) -> None:
        if self._fh is None:
            self._fh = open_log_for_append(self.path)
        self._fh.write(_dumps({"stage": self.stage, "id": record_id, **payload}) + "\n")
        self._fh.flush()

    def close(self, remove: bool = False) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
        if remove:
            self.reset()


def append_runlog(manifest_path: str | Path, entry: dict) -> None:
    with open_log_for_append(runlog_path(manifest_path)) as fh:
        fh.write(_dumps({"time": time.strftime("%Y-%m-%dT%H:%M:%S%z"), **entry}) + "\n")


def iter_jsonl(path: str | Path) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    yield json.loads(line)
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
