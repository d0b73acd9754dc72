"""Append-only JSON-lines journal with torn-write-tolerant replay.

Each record is one JSON object per line with a strictly increasing `seq`;
the first record is the study metadata. Appends are flushed and fsynced
before returning, so any crash leaves a valid prefix plus at most one
garbage tail line, which replay ignores.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from .errors import JournalCorruptError, JournalError
from .study import SearchSpace, Study, TrialRecord, TrialState

KIND_META = "study-meta"
KIND_TRIAL_START = "trial-start"
KIND_INTERMEDIATE = "intermediate"
KIND_TRIAL_END = "trial-end"
KIND_CHECKPOINT = "checkpoint"

_KINDS = (KIND_META, KIND_TRIAL_START, KIND_INTERMEDIATE, KIND_TRIAL_END, KIND_CHECKPOINT)


class Journal:
    """Writer handle; thread-safe, sequence numbers assigned under a lock."""

    def __init__(self, path, meta: dict | None = None):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._next_seq = 0
        self._fh = None
        if meta is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", encoding="utf-8")
            self.append(KIND_META, **meta)
        else:
            self._fh = open(self.path, "a", encoding="utf-8")
            existing = read_records(self.path)
            self._next_seq = len(existing)

    def append(self, kind: str, **payload) -> dict:
        """Append one record, assigning the next sequence number."""
        with self._lock:
            record = {"seq": self._next_seq, "kind": kind}
            record.update(payload)
            self._write(record)
            self._next_seq += 1
            return record

    def append_record(self, record: dict) -> None:
        """Append a pre-built record; its seq must be exactly last + 1."""
        with self._lock:
            if record.get("seq") != self._next_seq:
                raise JournalError(
                    f"sequence gap: expected {self._next_seq}, got {record.get('seq')}"
                )
            if record.get("kind") not in _KINDS:
                raise JournalError(f"unknown record kind {record.get('kind')!r}")
            self._write(record)
            self._next_seq += 1

    def _write(self, record: dict) -> None:
        if self._fh is None:
            raise JournalError("journal is closed")
        self._fh.write(json.dumps(record) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records(path) -> list[dict]:
    """Parse the journal, tolerating a torn final line.

    Any unreadable or out-of-sequence record other than the trailing one
    raises JournalCorruptError naming the expected sequence number.
    """
    raw = Path(path).read_bytes()
    lines = raw.split(b"\n")
    # drop trailing empty chunk from the final newline
    if lines and lines[-1] == b"":
        lines.pop()
    records: list[dict] = []
    for i, line in enumerate(lines):
        is_last = i == len(lines) - 1
        try:
            record = json.loads(line.decode("utf-8"))
            if not isinstance(record, dict):
                raise ValueError("record is not an object")
            if record.get("seq") != len(records):
                raise ValueError(
                    f"expected seq {len(records)}, got {record.get('seq')}"
                )
            if record.get("kind") not in _KINDS:
                raise ValueError(f"unknown kind {record.get('kind')!r}")
            if len(records) == 0 and record["kind"] != KIND_META:
                raise ValueError("first record must be study-meta")
        except (ValueError, UnicodeDecodeError) as exc:
            if is_last:
                break  # torn write: ignore the tail
            raise JournalCorruptError(len(records), str(exc)) from None
        records.append(record)
    return records


def study_from_records(records: list[dict]) -> Study:
    """Rebuild the study state; trials left mid-flight become failed."""
    if not records or records[0]["kind"] != KIND_META:
        raise JournalCorruptError(0, "journal missing study-meta record")
    meta = records[0]
    study = Study(
        space=SearchSpace.from_dict(meta["space"]),
        direction=meta["direction"],
        seed=int(meta["seed"]),
    )
    for record in records[1:]:
        kind = record["kind"]
        if kind == KIND_TRIAL_START:
            trial_id = record["trial_id"]
            if trial_id != len(study.trials):
                raise JournalCorruptError(
                    record["seq"], f"trial-start id {trial_id} out of order"
                )
            params = _revive_params(study.space, record["params"])
            study.trials.append(TrialRecord(trial_id=trial_id, params=params))
        elif kind == KIND_INTERMEDIATE:
            study.report_intermediate(
                record["trial_id"], int(record["step"]), float(record["value"])
            )
        elif kind == KIND_TRIAL_END:
            state = TrialState(record["state"])
            if state is TrialState.COMPLETE:
                study.tell(record["trial_id"], float(record["final_value"]))
            else:
                study.tell(record["trial_id"], state=state)
        # checkpoints carry no study state
    for trial in study.trials:
        if trial.state is TrialState.RUNNING:
            trial.state = TrialState.FAILED
    return study


def resume_study(path) -> Study:
    """Reconstruct the study at the last durable record of the journal."""
    return study_from_records(read_records(path))


def _revive_params(space: SearchSpace, params: dict) -> dict:
    """Map JSON values back onto the space's own choice objects so that
    domain checks stay type-exact after a round-trip."""
    revived = {}
    for name, value in params.items():
        dist = space[name]
        if dist.is_discrete:
            matches = [c for c in dist.choices if c == value and type(c) is type(value)]
            revived[name] = matches[0] if matches else value
        else:
            revived[name] = float(value)
    return revived
