"""Append-only event log and state replay.

Every dispute mutation is recorded as one JSON object per line:
{"event_seq", "dispute_id", "kind", "recorded_at", "payload"}. The
event_seq is a global, gapless, strictly increasing counter. Replaying
a dispute's events folds them back into exactly the live in-memory
state, which makes suggestion provenance and trigger audits inspectable
after the fact.

Appends are flushed (and by default fsynced) before the enclosing
operation reports success. A torn final write is detected on open as
CorruptLog carrying the byte offset of the last complete record;
opening with recover=True truncates the tail and keeps the intact
prefix.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from .detection import DetectionStrategy
from .domain import (
    Dispute,
    DisputeStatus,
    EveryNPolicy,
    HeatedPolicy,
    InactivityPolicy,
    Message,
    MessageOrigin,
    Participant,
    ParticipantRole,
    PartyRequestPolicy,
    Suggestion,
    SuggestionKind,
    SuggestionStatus,
    TriggerEvent,
    TriggerKind,
    TriggerPolicySet,
    utc_now,
)


class StorageError(Exception):
    """Base class for event log failures."""


class StorageFull(StorageError):
    """The underlying device refused the write."""


class SerializationError(StorageError):
    """The payload cannot be serialized; the log is unchanged."""


class CorruptLog(StorageError):
    """The log is damaged beyond ``offset`` (the last replayable byte)."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (recoverable prefix ends at byte {offset})")


class UnknownDispute(StorageError):
    """No events exist for the requested dispute."""


class EventKind(str, Enum):
    DISPUTE_CREATED = "dispute_created"
    MESSAGE_APPENDED = "message_appended"
    SUGGESTION_CREATED = "suggestion_created"
    SUGGESTION_RESOLVED = "suggestion_resolved"
    TRIGGER_FIRED = "trigger_fired"
    STATUS_CHANGED = "status_changed"


@dataclass(frozen=True)
class EventRecord:
    event_seq: int
    dispute_id: str
    kind: EventKind
    recorded_at: datetime
    payload: dict


# ---------------------------------------------------------------------------
# Entity codecs — payloads always carry the full serialized entity.
# ---------------------------------------------------------------------------


def _dt_to_wire(value: datetime) -> str:
    return value.isoformat(timespec="milliseconds")


def _dt_from_wire(value: str) -> datetime:
    return datetime.fromisoformat(value)


def participant_to_payload(participant: Participant) -> dict:
    return {
        "id": participant.id,
        "display_name": participant.display_name,
        "role": participant.role.value,
    }


def participant_from_payload(payload: dict) -> Participant:
    return Participant(payload["id"], payload["display_name"], ParticipantRole(payload["role"]))


def policy_to_payload(policy: TriggerPolicySet) -> dict:
    return {
        "party_request": {"enabled": policy.party_request.enabled},
        "inactivity": {
            "enabled": policy.inactivity.enabled,
            "threshold_seconds": policy.inactivity.threshold.total_seconds(),
        },
        "every_n": {"enabled": policy.every_n.enabled, "n": policy.every_n.n},
        "heated": {
            "enabled": policy.heated.enabled,
            "detector": policy.heated.detector.value,
        },
    }


def policy_from_payload(payload: dict) -> TriggerPolicySet:
    return TriggerPolicySet(
        party_request=PartyRequestPolicy(payload["party_request"]["enabled"]),
        inactivity=InactivityPolicy(
            payload["inactivity"]["enabled"],
            timedelta(seconds=payload["inactivity"]["threshold_seconds"]),
        ),
        every_n=EveryNPolicy(payload["every_n"]["enabled"], payload["every_n"]["n"]),
        heated=HeatedPolicy(
            payload["heated"]["enabled"], DetectionStrategy(payload["heated"]["detector"])
        ),
    )


def message_to_payload(message: Message) -> dict:
    return {
        "id": message.id,
        "dispute_id": message.dispute_id,
        "seq": message.seq,
        "author": message.author,
        "author_role": message.author_role.value,
        "body": message.body,
        "sent_at": _dt_to_wire(message.sent_at),
        "origin": message.origin.value,
        "suggestion_id": message.suggestion_id,
    }


def message_from_payload(payload: dict) -> Message:
    return Message(
        id=payload["id"],
        dispute_id=payload["dispute_id"],
        seq=payload["seq"],
        author=payload["author"],
        author_role=ParticipantRole(payload["author_role"]),
        body=payload["body"],
        sent_at=_dt_from_wire(payload["sent_at"]),
        origin=MessageOrigin(payload["origin"]),
        suggestion_id=payload.get("suggestion_id"),
    )


def suggestion_to_payload(suggestion: Suggestion) -> dict:
    return {
        "id": suggestion.id,
        "dispute_id": suggestion.dispute_id,
        "kind": suggestion.kind.value,
        "requester": suggestion.requester,
        "generated_text": suggestion.generated_text,
        "created_at": _dt_to_wire(suggestion.created_at),
        "status": suggestion.status.value,
        "original_text": suggestion.original_text,
        "context_snapshot": (
            None if suggestion.context_snapshot is None else list(suggestion.context_snapshot)
        ),
        "instructions": suggestion.instructions,
    }


def suggestion_from_payload(payload: dict) -> Suggestion:
    return Suggestion(
        id=payload["id"],
        dispute_id=payload["dispute_id"],
        kind=SuggestionKind(payload["kind"]),
        requester=payload["requester"],
        generated_text=payload["generated_text"],
        created_at=_dt_from_wire(payload["created_at"]),
        status=SuggestionStatus(payload["status"]),
        original_text=payload.get("original_text"),
        context_snapshot=(
            None
            if payload.get("context_snapshot") is None
            else tuple(payload["context_snapshot"])
        ),
        instructions=payload.get("instructions"),
    )


def trigger_to_payload(trigger: TriggerEvent) -> dict:
    return {
        "kind": trigger.kind.value,
        "dispute_id": trigger.dispute_id,
        "fired_at": _dt_to_wire(trigger.fired_at),
        "cause": trigger.cause,
    }


def trigger_from_payload(payload: dict) -> TriggerEvent:
    return TriggerEvent(
        kind=TriggerKind(payload["kind"]),
        dispute_id=payload["dispute_id"],
        fired_at=_dt_from_wire(payload["fired_at"]),
        cause=payload["cause"],
    )


def dispute_created_payload(dispute: Dispute) -> dict:
    return {
        "id": dispute.id,
        "title": dispute.title,
        "participants": {
            role.value: participant_to_payload(p) for role, p in dispute.participants.items()
        },
        "policy": policy_to_payload(dispute.policy),
        "created_at": _dt_to_wire(dispute.created_at),
        "status": dispute.status.value,
    }


# StatusChanged events carry the same full snapshot shape so participant
# changes (mediator attach) replay from the identical payload.
status_changed_payload = dispute_created_payload


def dispute_from_created_payload(payload: dict) -> Dispute:
    return Dispute(
        id=payload["id"],
        title=payload["title"],
        participants={
            ParticipantRole(role): participant_from_payload(p)
            for role, p in payload["participants"].items()
        },
        policy=policy_from_payload(payload["policy"]),
        created_at=_dt_from_wire(payload["created_at"]),
        status=DisputeStatus(payload["status"]),
    )


# ---------------------------------------------------------------------------
# Log file
# ---------------------------------------------------------------------------


class EventLog:
    """Single-writer append-only JSONL log with an in-memory dispute index."""

    def __init__(
        self,
        path: str | Path,
        *,
        recover: bool = False,
        fsync: bool = True,
        clock: Callable[[], datetime] = utc_now,
    ):
        self.path = Path(path)
        self._fsync = fsync
        self._clock = clock
        self._lock = threading.Lock()
        self._records: list[EventRecord] = []
        self._by_dispute: dict[str, list[EventRecord]] = {}
        self._load(recover=recover)
        self._file = open(self.path, "ab")

    # -- loading ----------------------------------------------------------

    def _load(self, recover: bool) -> None:
        if not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()
            return
        raw = self.path.read_bytes()
        offset = 0
        corrupt_at: Optional[int] = None
        reason = ""
        while offset < len(raw):
            newline = raw.find(b"\n", offset)
            if newline < 0:
                corrupt_at, reason = offset, "torn final record (no trailing newline)"
                break
            line = raw[offset : newline]
            try:
                record = self._decode_line(line)
            except (ValueError, KeyError, TypeError) as exc:
                corrupt_at, reason = offset, f"undecodable record: {exc}"
                break
            if record.event_seq != len(self._records) + 1:
                corrupt_at, reason = offset, (
                    f"event_seq {record.event_seq} breaks the gapless sequence"
                )
                break
            self._index(record)
            offset = newline + 1
        if corrupt_at is not None:
            if not recover:
                self._records.clear()
                self._by_dispute.clear()
                raise CorruptLog(reason, corrupt_at)
            os.truncate(self.path, corrupt_at)

    @staticmethod
    def _decode_line(line: bytes) -> EventRecord:
        data = json.loads(line.decode("utf-8"))
        return EventRecord(
            event_seq=data["event_seq"],
            dispute_id=data["dispute_id"],
            kind=EventKind(data["kind"]),
            recorded_at=_dt_from_wire(data["recorded_at"]),
            payload=data["payload"],
        )

    def _index(self, record: EventRecord) -> None:
        self._records.append(record)
        self._by_dispute.setdefault(record.dispute_id, []).append(record)

    # -- writing ----------------------------------------------------------

    def append(self, kind: EventKind, dispute_id: str, payload: dict) -> EventRecord:
        """Durably append one event; returns the stored record."""
        with self._lock:
            record = EventRecord(
                event_seq=len(self._records) + 1,
                dispute_id=dispute_id,
                kind=kind,
                recorded_at=self._clock(),
                payload=payload,
            )
            try:
                line = json.dumps(
                    {
                        "event_seq": record.event_seq,
                        "dispute_id": record.dispute_id,
                        "kind": record.kind.value,
                        "recorded_at": _dt_to_wire(record.recorded_at),
                        "payload": record.payload,
                    },
                    ensure_ascii=False,
                )
            except (TypeError, ValueError) as exc:
                raise SerializationError(f"unserializable payload: {exc}") from exc
            try:
                self._file.write(line.encode("utf-8") + b"\n")
                self._file.flush()
                if self._fsync:
                    os.fsync(self._file.fileno())
            except OSError as exc:
                raise StorageFull(f"append failed: {exc}") from exc
            self._index(record)
            return record

    def close(self) -> None:
        self._file.close()

    # -- reading ----------------------------------------------------------

    @property
    def last_seq(self) -> int:
        with self._lock:
            return len(self._records)

    def events(
        self, dispute_id: Optional[str] = None, since_seq: int = 0
    ) -> list[EventRecord]:
        """Events in event_seq order, optionally dispute-filtered."""
        with self._lock:
            source = self._records if dispute_id is None else self._by_dispute.get(dispute_id, [])
            if since_seq <= 0:
                return list(source)
            return [r for r in source if r.event_seq > since_seq]

    def dispute_ids(self) -> list[str]:
        """Dispute ids in order of first appearance."""
        with self._lock:
            return list(self._by_dispute.keys())

    def has_dispute(self, dispute_id: str) -> bool:
        with self._lock:
            return dispute_id in self._by_dispute


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def apply_event(dispute: Optional[Dispute], record: EventRecord) -> Dispute:
    """Fold one event into the dispute state.

    The same application path backs both the live engine commit and
    offline replay, so the two can never drift apart.
    """
    payload = record.payload
    seq = record.event_seq
    if record.kind is EventKind.DISPUTE_CREATED:
        if dispute is not None:
            raise CorruptLog("duplicate dispute_created event", seq)
        return dispute_from_created_payload(payload)
    if dispute is None:
        raise CorruptLog(f"{record.kind.value} event precedes dispute_created", seq)

    if record.kind is EventKind.MESSAGE_APPENDED:
        message = message_from_payload(payload)
        if message.seq != dispute.next_seq:
            raise CorruptLog(
                f"message seq {message.seq} breaks gapless order in dispute {dispute.id}", seq
            )
        dispute.messages.append(message)
    elif record.kind is EventKind.SUGGESTION_CREATED:
        suggestion = suggestion_from_payload(payload)
        dispute.suggestions[suggestion.id] = suggestion
    elif record.kind is EventKind.SUGGESTION_RESOLVED:
        suggestion = dispute.suggestions.get(payload["suggestion_id"])
        if suggestion is None:
            raise CorruptLog(
                f"resolution for unknown suggestion {payload['suggestion_id']}", seq
            )
        dispute.suggestions[suggestion.id] = dataclasses.replace(
            suggestion, status=SuggestionStatus(payload["status"])
        )
    elif record.kind is EventKind.TRIGGER_FIRED:
        dispute.audit.append(trigger_from_payload(payload))
    elif record.kind is EventKind.STATUS_CHANGED:
        dispute.status = DisputeStatus(payload["status"])
        dispute.participants = {
            ParticipantRole(role): participant_from_payload(p)
            for role, p in payload["participants"].items()
        }
    else:  # pragma: no cover - enum is exhaustive
        raise CorruptLog(f"unknown event kind {record.kind}", seq)
    return dispute


def replay(log: EventLog, dispute_id: str) -> Dispute:
    """Rebuild a dispute's state by folding its events in order."""
    records = log.events(dispute_id)
    if not records:
        raise UnknownDispute(f"no events for dispute {dispute_id}")
    state: Optional[Dispute] = None
    for record in records:
        state = apply_event(state, record)
    assert state is not None
    return state


def replay_all(log: EventLog) -> dict[str, Dispute]:
    return {dispute_id: replay(log, dispute_id) for dispute_id in log.dispute_ids()}
