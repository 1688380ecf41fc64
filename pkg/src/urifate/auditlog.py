"""Append-only results journal for long-running audits.

One JSON line per URI per round, stamped, for both liveness and archive
checks, so an interrupted week-long audit resumes without re-requesting
completed rounds. Lines are never rewritten; rereading the file and
reducing is the source of truth.
"""
from __future__ import annotations

import json
import threading
from datetime import datetime
from pathlib import Path


class ResultsLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.write("\n")

    def read_all(self) -> list[dict]:
        if not self.path.exists():
            return []
        records = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records

    def append_live(self, uri: str, round_no: int, at: datetime,
                    reason_kind: str, code: int | None) -> None:
        self.append({
            "kind": "live", "uri": uri, "round": round_no,
            "at": at.isoformat(), "reason": reason_kind, "code": code,
        })

    def append_archive(self, uri: str, round_no: int, at: datetime,
                       mementos: int | None) -> None:
        self.append({
            "kind": "archive", "uri": uri, "round": round_no,
            "at": at.isoformat(), "mementos": mementos,
        })

    def completed(self, kind: str) -> dict[tuple[str, int], dict]:
        """Map of (uri, round) -> record for already-finished work."""
        done = {}
        for record in self.read_all():
            if record.get("kind") == kind:
                done[(record["uri"], record["round"])] = record
        return done
