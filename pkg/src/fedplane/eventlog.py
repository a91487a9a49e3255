"""Append-only event log and snapshot store backing crash recovery.

The log is one JSON object per line: {"seq", "ts", "kind", "payload"}.
Sequence numbers are dense and start at 1. On open, a torn trailing line
(the classic mid-write crash) is detected and truncated away; corruption
anywhere else is refused rather than skipped.

Snapshots are full-state canonical JSON files named by the sequence number
they cover. Recovery is: load the newest snapshot, then replay logged
commands with a higher sequence.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .canon import canonical_json
from .errors import StateError, ValidationError


class EventLog:
    def __init__(self, path: Path | str) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._last_seq = 0
        self._recover_tail()
        self._fh = open(self.path, "a", encoding="utf-8")

    def _recover_tail(self) -> None:
        if not self.path.exists():
            return
        good_end = 0
        with open(self.path, "rb") as fh:
            data = fh.read()
        offset = 0
        while offset < len(data):
            newline = data.find(b"\n", offset)
            if newline == -1:
                break  # torn final line
            line = data[offset:newline]
            try:
                event = json.loads(line)
                seq = event["seq"]
            except (json.JSONDecodeError, KeyError, TypeError):
                if data.find(b"\n", newline + 1) == -1:
                    break  # last complete line is garbage: treat as torn
                raise StateError(f"corrupt event log entry at byte {offset}")
            if seq != self._last_seq + 1:
                raise StateError(f"event sequence gap: expected {self._last_seq + 1}, found {seq}")
            self._last_seq = seq
            good_end = newline + 1
            offset = newline + 1
        if good_end != len(data):
            with open(self.path, "r+b") as fh:
                fh.truncate(good_end)

    @property
    def last_seq(self) -> int:
        return self._last_seq

    def append(self, kind: str, payload: dict, ts: int) -> dict:
        if not kind:
            raise ValidationError("event kind must be non-empty")
        self._last_seq += 1
        event = {"seq": self._last_seq, "ts": ts, "kind": kind, "payload": payload}
        self._fh.write(canonical_json(event) + "\n")
        self._fh.flush()
        return event

    def read_since(self, seq: int = 0) -> list[dict]:
        """All complete events with sequence strictly greater than seq."""
        if not self.path.exists():
            return []
        out = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.endswith("\n"):
                    break
                event = json.loads(line)
                if event["seq"] > seq:
                    out.append(event)
        return out

    def sync(self) -> None:
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()


class SnapshotStore:
    def __init__(self, directory: Path | str) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, seq: int) -> Path:
        return self.directory / f"snap-{seq:010d}.json"

    def write(self, seq: int, ts: int, state: dict) -> Path:
        document = {"seq": seq, "ts": ts, "state": state}
        path = self._path(seq)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(canonical_json(document), encoding="utf-8")
        os.replace(tmp, path)
        return path

    def seqs(self) -> list[int]:
        out = []
        for path in self.directory.glob("snap-*.json"):
            stem = path.stem.removeprefix("snap-")
            if stem.isdigit():
                out.append(int(stem))
        return sorted(out)

    def latest(self) -> dict | None:
        seqs = self.seqs()
        if not seqs:
            return None
        return self.load(seqs[-1])

    def load(self, seq: int) -> dict:
        path = self._path(seq)
        if not path.exists():
            raise StateError(f"no snapshot for sequence {seq}")
        return json.loads(path.read_text(encoding="utf-8"))
