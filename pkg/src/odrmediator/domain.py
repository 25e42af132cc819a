"""Core entities and state machines shared by the whole platform.

A Dispute is a two-party negotiation room with an optional human
mediator and a synthetic AI mediator participant. Messages are
immutable once appended and carry a gapless per-dispute sequence
number; sequence numbers, not timestamps, define order (clock skew must
never reorder chat). Every message records its origin provenance —
whether the text is the author's original, an accepted or edited
reformulation, a mediator draft, or an autonomous AI intervention.
"""

from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Optional

from .detection import DetectionStrategy


def utc_now() -> datetime:
    """Current UTC wall-clock time at millisecond precision.

    Truncated at creation so timestamps survive a serialization
    round-trip bit-identically.
    """
    now = datetime.now(timezone.utc)
    return now.replace(microsecond=now.microsecond // 1000 * 1000)


def new_id() -> str:
    return uuid.uuid4().hex


class DomainError(Exception):
    """Base class for domain rule violations."""


class DuplicateParticipant(DomainError):
    """The two parties resolve to the same participant, or a role is taken."""


class DisputeClosed(DomainError):
    """The dispute is not Open, so nothing may be appended or changed."""


class InvalidOrigin(DomainError):
    """Origin/suggestion-link provenance is inconsistent."""


class NotAParticipant(DomainError):
    """The author is not a participant of this dispute."""


class EmptyBody(DomainError):
    """Message bodies must be non-empty."""


class ParticipantRole(str, Enum):
    PARTY_A = "party_a"
    PARTY_B = "party_b"
    MEDIATOR = "mediator"
    AI_MEDIATOR = "ai_mediator"
    SYSTEM = "system"


PARTY_ROLES = (ParticipantRole.PARTY_A, ParticipantRole.PARTY_B)

# How a role is labeled when a message is rendered into a prompt or UI.
ROLE_LABELS = {
    ParticipantRole.PARTY_A: "party",
    ParticipantRole.PARTY_B: "party",
    ParticipantRole.MEDIATOR: "mediator",
    ParticipantRole.AI_MEDIATOR: "AI mediator",
    ParticipantRole.SYSTEM: "system",
}

AI_MEDIATOR_ID = "ai-mediator"
AI_MEDIATOR_NAME = "AI Mediator"


class DisputeStatus(str, Enum):
    OPEN = "open"
    SETTLED = "settled"
    CLOSED = "closed"


class MessageOrigin(str, Enum):
    HUMAN_ORIGINAL = "human_original"
    HUMAN_ACCEPTED_REFORMULATION = "human_accepted_reformulation"
    HUMAN_EDITED_REFORMULATION = "human_edited_reformulation"
    MEDIATOR_DRAFT_SENT = "mediator_draft_sent"
    MEDIATOR_DRAFT_EDITED = "mediator_draft_edited"
    MEDIATOR_FREEFORM = "mediator_freeform"
    AI_AUTONOMOUS = "ai_autonomous"


# Origins that must link back to the suggestion that produced the text.
LINKED_ORIGINS = frozenset(
    {
        MessageOrigin.HUMAN_ACCEPTED_REFORMULATION,
        MessageOrigin.HUMAN_EDITED_REFORMULATION,
        MessageOrigin.MEDIATOR_DRAFT_SENT,
        MessageOrigin.MEDIATOR_DRAFT_EDITED,
    }
)


class SuggestionKind(str, Enum):
    REFORMULATION = "reformulation"
    MEDIATOR_DRAFT = "mediator_draft"


class SuggestionStatus(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    EDITED = "edited"
    SENT_ORIGINAL = "sent_original"
    SUPERSEDED = "superseded"


TERMINAL_SUGGESTION_STATUSES = frozenset(
    {
        SuggestionStatus.ACCEPTED,
        SuggestionStatus.EDITED,
        SuggestionStatus.SENT_ORIGINAL,
        SuggestionStatus.SUPERSEDED,
    }
)


class TriggerKind(str, Enum):
    PARTY_REQUEST = "party_request"
    INACTIVITY = "inactivity"
    EVERY_N = "every_n"
    HEATED = "heated"


@dataclass(frozen=True)
class Participant:
    id: str
    display_name: str
    role: ParticipantRole

    @property
    def role_label(self) -> str:
        return ROLE_LABELS[self.role]


@dataclass(frozen=True)
class PartyRequestPolicy:
    enabled: bool = True


@dataclass(frozen=True)
class InactivityPolicy:
    enabled: bool = False
    threshold: timedelta = timedelta(minutes=60)

    def __post_init__(self) -> None:
        if self.threshold <= timedelta(0):
            raise ValueError("inactivity threshold must be positive")


@dataclass(frozen=True)
class EveryNPolicy:
    enabled: bool = False
    n: int = 10

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("every_n interval must be >= 1")


@dataclass(frozen=True)
class HeatedPolicy:
    enabled: bool = False
    detector: DetectionStrategy = DetectionStrategy.KEYWORD_SCAN


@dataclass(frozen=True)
class TriggerPolicySet:
    """Per-dispute configuration of autonomous-intervention triggers.

    Party request is on by default; the other triggers ship disabled.
    Disabled policies never fire.
    """

    party_request: PartyRequestPolicy = PartyRequestPolicy()
    inactivity: InactivityPolicy = InactivityPolicy()
    every_n: EveryNPolicy = EveryNPolicy()
    heated: HeatedPolicy = HeatedPolicy()


@dataclass(frozen=True)
class TriggerEvent:
    """An autonomous-intervention trigger that fired, kept for audit."""

    kind: TriggerKind
    dispute_id: str
    fired_at: datetime
    cause: str


@dataclass(frozen=True)
class Message:
    id: str
    dispute_id: str
    seq: int
    author: str
    author_role: ParticipantRole
    body: str
    sent_at: datetime
    origin: MessageOrigin
    suggestion_id: Optional[str] = None


@dataclass(frozen=True)
class Suggestion:
    """LLM-generated text awaiting a human decision.

    Reformulations keep the party's original draft; mediator drafts keep
    the ids of the context window that produced them. Pending is the
    only non-terminal status.
    """

    id: str
    dispute_id: str
    kind: SuggestionKind
    requester: str
    generated_text: str
    created_at: datetime
    status: SuggestionStatus = SuggestionStatus.PENDING
    original_text: Optional[str] = None
    # May be an empty tuple (instructions-only draft on an empty dispute);
    # None means "not a mediator draft".
    context_snapshot: Optional[tuple[str, ...]] = None
    instructions: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind is SuggestionKind.REFORMULATION and self.original_text is None:
            raise ValueError("reformulation suggestions need the original draft")
        if self.kind is SuggestionKind.MEDIATOR_DRAFT and self.context_snapshot is None:
            raise ValueError("mediator drafts need a context snapshot")


@dataclass
class Dispute:
    """A negotiation room. Mutable container; messages are immutable."""

    id: str
    title: str
    participants: dict[ParticipantRole, Participant]
    policy: TriggerPolicySet
    created_at: datetime
    status: DisputeStatus = DisputeStatus.OPEN
    messages: list[Message] = field(default_factory=list)
    suggestions: dict[str, Suggestion] = field(default_factory=dict)
    audit: list[TriggerEvent] = field(default_factory=list)

    @property
    def next_seq(self) -> int:
        return len(self.messages) + 1

    def participant_by_id(self, participant_id: str) -> Optional[Participant]:
        for participant in self.participants.values():
            if participant.id == participant_id:
                return participant
        return None

    def role_of(self, participant_id: str) -> Optional[ParticipantRole]:
        participant = self.participant_by_id(participant_id)
        return participant.role if participant else None

    @property
    def last_message(self) -> Optional[Message]:
        return self.messages[-1] if self.messages else None

    def pending_suggestions(
        self, requester: Optional[str] = None, kind: Optional[SuggestionKind] = None
    ) -> list[Suggestion]:
        return [
            s
            for s in self.suggestions.values()
            if s.status is SuggestionStatus.PENDING
            and (requester is None or s.requester == requester)
            and (kind is None or s.kind is kind)
        ]


def _slug(display_name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", display_name.casefold()).strip("-")
    return slug or new_id()[:8]


def create_dispute(
    title: str,
    party_a: str,
    party_b: str,
    policy: Optional[TriggerPolicySet] = None,
    *,
    party_a_id: Optional[str] = None,
    party_b_id: Optional[str] = None,
    dispute_id: Optional[str] = None,
    created_at: Optional[datetime] = None,
) -> Dispute:
    """Open a new two-party dispute with an empty message log.

    ``party_a`` / ``party_b`` are display names; participant ids default
    to a slug of the name. The synthetic AI mediator participant is
    created here — never by registration.
    """
    if not title.strip():
        raise ValueError("dispute title must be non-empty")
    id_a = party_a_id or _slug(party_a)
    id_b = party_b_id or _slug(party_b)
    if id_a == id_b:
        raise DuplicateParticipant(f"both parties resolve to participant id {id_a!r}")
    participants = {
        ParticipantRole.PARTY_A: Participant(id_a, party_a, ParticipantRole.PARTY_A),
        ParticipantRole.PARTY_B: Participant(id_b, party_b, ParticipantRole.PARTY_B),
        ParticipantRole.AI_MEDIATOR: Participant(
            AI_MEDIATOR_ID, AI_MEDIATOR_NAME, ParticipantRole.AI_MEDIATOR
        ),
    }
    return Dispute(
        id=dispute_id or new_id(),
        title=title,
        participants=participants,
        policy=policy or TriggerPolicySet(),
        created_at=created_at or utc_now(),
    )


def attach_mediator(
    dispute: Dispute, display_name: str, *, mediator_id: Optional[str] = None
) -> Participant:
    """Attach the (single) human mediator to an Open dispute."""
    if dispute.status is not DisputeStatus.OPEN:
        raise DisputeClosed(f"dispute {dispute.id} is {dispute.status.value}")
    if ParticipantRole.MEDIATOR in dispute.participants:
        raise DuplicateParticipant("dispute already has a mediator")
    proposed = mediator_id or _slug(display_name)
    if dispute.participant_by_id(proposed) is not None:
        raise DuplicateParticipant(f"participant id {proposed!r} already taken")
    mediator = Participant(proposed, display_name, ParticipantRole.MEDIATOR)
    dispute.participants[ParticipantRole.MEDIATOR] = mediator
    return mediator


def build_message(
    dispute: Dispute,
    author_id: str,
    body: str,
    origin: MessageOrigin,
    suggestion_id: Optional[str] = None,
    *,
    sent_at: Optional[datetime] = None,
    message_id: Optional[str] = None,
) -> Message:
    """Validate and construct the next message without mutating the dispute."""
    if dispute.status is not DisputeStatus.OPEN:
        raise DisputeClosed(f"dispute {dispute.id} is {dispute.status.value}")
    author = dispute.participant_by_id(author_id)
    if author is None:
        raise NotAParticipant(f"{author_id!r} is not a participant of dispute {dispute.id}")
    if not body or not body.strip():
        raise EmptyBody("message body must be non-empty")
    if (origin in LINKED_ORIGINS) != (suggestion_id is not None):
        raise InvalidOrigin(
            f"origin {origin.value} and suggestion link are inconsistent"
        )
    if (origin is MessageOrigin.AI_AUTONOMOUS) != (
        author.role is ParticipantRole.AI_MEDIATOR
    ):
        raise InvalidOrigin("AI-autonomous origin is reserved for the AI mediator")
    return Message(
        id=message_id or new_id(),
        dispute_id=dispute.id,
        seq=dispute.next_seq,
        author=author.id,
        author_role=author.role,
        body=body,
        sent_at=sent_at or utc_now(),
        origin=origin,
        suggestion_id=suggestion_id,
    )


def append_message(
    dispute: Dispute,
    author_id: str,
    body: str,
    origin: MessageOrigin,
    suggestion_id: Optional[str] = None,
    *,
    sent_at: Optional[datetime] = None,
) -> Message:
    """Append a validated message; seq = previous max + 1, gapless from 1."""
    message = build_message(
        dispute, author_id, body, origin, suggestion_id, sent_at=sent_at
    )
    dispute.messages.append(message)
    return message


def set_status(dispute: Dispute, status: DisputeStatus) -> None:
    """Manual lifecycle change; Settled and Closed are terminal."""
    if dispute.status is not DisputeStatus.OPEN:
        raise DisputeClosed(f"dispute {dispute.id} is already {dispute.status.value}")
    if status is DisputeStatus.OPEN:
        raise ValueError("dispute is already open")
    dispute.status = status
