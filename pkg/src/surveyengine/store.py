"""Append-only event store: one JSON-lines file plus an in-memory index.

Every record is flushed and fsynced before append returns, so a reopened
store always sees all acknowledged records. Streams are independent;
appends within one stream are serialized by a single lock (desk-scale
deployment, one process).
"""

from __future__ import annotations

import csv
import io
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

EVENT_KINDS = frozenset({
    "SESSION_STARTED", "PROMPT_ISSUED", "UTTERANCE_RECEIVED",
    "ANSWER_COMMITTED", "READBACK_ISSUED", "READBACK_RESULT",
    "TIMEOUT", "SESSION_COMPLETED", "SESSION_ABANDONED",
    "USER_PARAM_SET",
})

CSV_HEADER = ("stream_id,seq,kind,at_utc_ms,user_id,flow_id,"
              "question_id,value_kind,value_canonical,raw_utterance")


class StoreError(Exception):
    pass


class StoreClosedError(StoreError):
    pass


@dataclass(frozen=True)
class EventRecord:
    stream_id: str
    seq: int
    kind: str
    payload: dict
    at: int  # UTC milliseconds

    def to_json(self) -> dict:
        return {
            "stream_id": self.stream_id,
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
            "at": self.at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EventRecord":
        return cls(
            stream_id=obj["stream_id"],
            seq=obj["seq"],
            kind=obj["kind"],
            payload=obj["payload"],
            at=obj["at"],
        )


class EventStore:
    """JSONL-backed append-only store. ``path=None`` keeps events in memory
    only (tests, throwaway simulations)."""

    def __init__(self, path: Optional[Path | str] = None):
        self._path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._streams: Dict[str, List[EventRecord]] = {}
        self._fh = None
        self._closed = False
        if self._path is not None:
            self._recover()
            self._fh = open(self._path, "a", encoding="utf-8")

    def _recover(self) -> None:
        assert self._path is not None
        if not self._path.exists():
            self._path.parent.mkdir(parents=True, exist_ok=True)
            return
        with open(self._path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = EventRecord.from_json(json.loads(line))
                self._streams.setdefault(record.stream_id, []).append(record)
        for stream_id, records in self._streams.items():
            for i, record in enumerate(records, start=1):
                if record.seq != i:
                    raise StoreError(
                        f"stream {stream_id}: seq {record.seq} at position {i}")

    # -- writes ------------------------------------------------------------

    def append(self, stream_id: str, kind: str, payload: dict, at: int) -> EventRecord:
        if kind not in EVENT_KINDS:
            raise StoreError(f"unknown event kind: {kind}")
        with self._lock:
            if self._closed:
                raise StoreClosedError("store is closed")
            records = self._streams.setdefault(stream_id, [])
            record = EventRecord(stream_id=stream_id, seq=len(records) + 1,
                                 kind=kind, payload=payload, at=at)
            if self._fh is not None:
                self._fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())
            records.append(record)
            return record

    def close(self) -> None:
        with self._lock:
            self._closed = True
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    # -- reads -------------------------------------------------------------

    def read_stream(self, stream_id: str, from_seq: int = 1) -> List[EventRecord]:
        with self._lock:
            records = self._streams.get(stream_id, [])
            return [r for r in records if r.seq >= from_seq]

    def stream_ids(self) -> List[str]:
        with self._lock:
            return sorted(self._streams)

    def all_records(self) -> List[EventRecord]:
        with self._lock:
            out: List[EventRecord] = []
            for stream_id in sorted(self._streams):
                out.extend(self._streams[stream_id])
            return out

    # -- export ------------------------------------------------------------

    def export(self,
               users: Optional[Sequence[str]] = None,
               from_ms: Optional[int] = None,
               to_ms: Optional[int] = None,
               kinds: Optional[Sequence[str]] = None,
               format: str = "csv") -> bytes:
        """Filtered export, deterministic (stream, seq) order.

        CSV columns are fixed (``CSV_HEADER``); JSON-lines emits one
        record object per line.
        """
        if format not in ("csv", "jsonl"):
            raise StoreError(f"unknown export format: {format}")
        user_set = set(users) if users is not None else None
        kind_set = set(kinds) if kinds is not None else None
        selected = []
        for record in self.all_records():
            if kind_set is not None and record.kind not in kind_set:
                continue
            if from_ms is not None and record.at < from_ms:
                continue
            if to_ms is not None and record.at >= to_ms:
                continue
            if user_set is not None and self._record_user(record) not in user_set:
                continue
            selected.append(record)

        if format == "jsonl":
            lines = [json.dumps(r.to_json(), ensure_ascii=False) for r in selected]
            return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for record in selected:
            p = record.payload
            writer.writerow([
                record.stream_id,
                record.seq,
                record.kind,
                record.at,
                self._record_user(record) or "",
                self._stream_head(record.stream_id).get("flow_id", "") if record.stream_id else "",
                p.get("question_id") or "",
                p.get("value_kind") or "",
                p.get("value_canonical") or "",
                p.get("raw_utterance") or p.get("text") or "",
            ])
        return buf.getvalue().encode("utf-8")

    def import_jsonl(self, data: bytes) -> int:
        """Append records from a JSON-lines export into an empty store."""
        count = 0
        for line in data.decode("utf-8").splitlines():
            if not line.strip():
                continue
            record = EventRecord.from_json(json.loads(line))
            self.append(record.stream_id, record.kind, record.payload, record.at)
            count += 1
        return count

    # -- helpers -----------------------------------------------------------

    def _stream_head(self, stream_id: str) -> dict:
        records = self._streams.get(stream_id)
        if records and records[0].kind == "SESSION_STARTED":
            return records[0].payload
        return {}

    def _record_user(self, record: EventRecord) -> Optional[str]:
        if "user_id" in record.payload:
            return record.payload["user_id"]
        head = self._stream_head(record.stream_id)
        return head.get("user_id")


def iter_session_streams(store: EventStore) -> Iterable[List[EventRecord]]:
    """All streams that are survey sessions (start with SESSION_STARTED)."""
    for stream_id in store.stream_ids():
        records = store.read_stream(stream_id)
        if records and records[0].kind == "SESSION_STARTED":
            yield records
