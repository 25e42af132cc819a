"""Mediation engine: orchestrates the three assistance features.

Feature 1 runs a party's draft through detection and, when flagged (or
on explicit request), fetches a neutral-tone rewrite and parks it as a
Pending suggestion for the party to accept, edit, or bypass — the
platform never rewrites anyone's words silently. Feature 2 drafts an
intervention for the human mediator over the recent conversation
window. Feature 3 sends such an intervention straight to the parties
when a configured trigger fires, always labeled as AI-generated.

Per-dispute mutations are serialized through a per-dispute lock.
Provider calls happen outside the lock: generation runs on a snapshot
and the result is committed in a second locked step that re-validates
preconditions. Every committed change goes through the event log first
and is applied to live state via the same fold replay uses.
"""

from __future__ import annotations

import dataclasses
import logging
import threading
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Callable, Optional

from . import detection as detection_mod
from . import domain, eventlog, prompting
from .detection import DetectionResult, DetectionStrategy, Lexicon
from .domain import (
    AI_MEDIATOR_ID,
    PARTY_ROLES,
    Dispute,
    DisputeStatus,
    Message,
    MessageOrigin,
    Participant,
    ParticipantRole,
    Suggestion,
    SuggestionKind,
    SuggestionStatus,
    TriggerEvent,
    TriggerKind,
    TriggerPolicySet,
    utc_now,
)
from .eventlog import EventKind, EventLog
from .prompting import ContextMessage, PromptBundle, PromptPurpose
from .providers import CompletionProvider, ProviderError

logger = logging.getLogger(__name__)


class EngineError(Exception):
    """Base class for engine-level rule violations."""


class UnknownDispute(EngineError):
    pass


class UnknownSuggestion(EngineError):
    pass


class NotAParty(EngineError):
    """The actor does not hold PartyA or PartyB in this dispute."""


class NotMediator(EngineError):
    """The actor does not hold the Mediator role in this dispute."""


class NotRequester(EngineError):
    """Only the requester (or the mediator, for drafts) may resolve."""


class AlreadyResolved(EngineError):
    """The suggestion already reached a terminal state."""


class EmptyEdit(EngineError):
    """SendEdited requires non-empty text."""


class InvalidResolveAction(EngineError):
    """The action does not apply to this suggestion kind."""


class PolicyDisabled(EngineError):
    """The trigger's policy is disabled for this dispute."""


class ReformulationUnavailable(EngineError):
    """The provider failed; the caller may resend with force_send."""


class ResolveAction(str, Enum):
    SEND_ORIGINAL = "send_original"
    SEND_REFORMULATED = "send_reformulated"
    SEND_EDITED = "send_edited"


@dataclass(frozen=True)
class SubmitOutcome:
    """Either the message was sent, or a reformulation awaits review."""

    sent: Optional[Message] = None
    suggestion: Optional[Suggestion] = None

    def __post_init__(self) -> None:
        if (self.sent is None) == (self.suggestion is None):
            raise ValueError("exactly one of sent/suggestion must be set")

    @property
    def was_sent(self) -> bool:
        return self.sent is not None


# Maps a resolve action to the message origin, per suggestion kind.
_RESOLVE_ORIGINS = {
    SuggestionKind.REFORMULATION: {
        ResolveAction.SEND_ORIGINAL: MessageOrigin.HUMAN_ORIGINAL,
        ResolveAction.SEND_REFORMULATED: MessageOrigin.HUMAN_ACCEPTED_REFORMULATION,
        ResolveAction.SEND_EDITED: MessageOrigin.HUMAN_EDITED_REFORMULATION,
    },
    SuggestionKind.MEDIATOR_DRAFT: {
        ResolveAction.SEND_REFORMULATED: MessageOrigin.MEDIATOR_DRAFT_SENT,
        ResolveAction.SEND_EDITED: MessageOrigin.MEDIATOR_DRAFT_EDITED,
    },
}

_RESOLVE_STATUSES = {
    ResolveAction.SEND_ORIGINAL: SuggestionStatus.SENT_ORIGINAL,
    ResolveAction.SEND_REFORMULATED: SuggestionStatus.ACCEPTED,
    ResolveAction.SEND_EDITED: SuggestionStatus.EDITED,
}


class MediationEngine:
    """Single place all dispute mutations go through.

    Thread-safe: reads see consistent snapshots, writes to one dispute
    are serialized, and disputes are independent of each other.
    """

    def __init__(
        self,
        provider: CompletionProvider,
        log: EventLog,
        *,
        lexicon: Lexicon = detection_mod.EMPTY_LEXICON,
        llm_classifier_enabled: bool = False,
        context_window_size: int = prompting.DEFAULT_CONTEXT_WINDOW,
        clock: Callable[[], datetime] = utc_now,
    ):
        self.provider = provider
        self.log = log
        self.lexicon = lexicon
        self.llm_classifier_enabled = llm_classifier_enabled
        self.context_window_size = context_window_size
        self._clock = clock
        self._disputes: dict[str, Dispute] = eventlog.replay_all(log)
        self._suggestion_dispute: dict[str, str] = {
            sid: d.id for d in self._disputes.values() for sid in d.suggestions
        }
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._registry_lock = threading.Lock()

    # -- lookups ------------------------------------------------------------

    def _dispute(self, dispute_id: str) -> Dispute:
        with self._registry_lock:
            dispute = self._disputes.get(dispute_id)
        if dispute is None:
            raise UnknownDispute(f"no dispute {dispute_id}")
        return dispute

    def _lock(self, dispute_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks[dispute_id]

    def dispute_ids(self) -> list[str]:
        with self._registry_lock:
            return list(self._disputes.keys())

    def get_dispute(self, dispute_id: str) -> Dispute:
        return self._dispute(dispute_id)

    def get_suggestion(self, suggestion_id: str) -> Suggestion:
        dispute_id = self._suggestion_dispute.get(suggestion_id)
        if dispute_id is None:
            raise UnknownSuggestion(f"no suggestion {suggestion_id}")
        return self._dispute(dispute_id).suggestions[suggestion_id]

    # -- commit helpers -------------------------------------------------------

    def _commit_message(self, dispute: Dispute, message: Message) -> Message:
        payload = eventlog.message_to_payload(message)
        self.log.append(EventKind.MESSAGE_APPENDED, dispute.id, payload)
        stored = eventlog.message_from_payload(payload)
        dispute.messages.append(stored)
        return stored

    def _commit_suggestion(self, dispute: Dispute, suggestion: Suggestion) -> Suggestion:
        payload = eventlog.suggestion_to_payload(suggestion)
        self.log.append(EventKind.SUGGESTION_CREATED, dispute.id, payload)
        stored = eventlog.suggestion_from_payload(payload)
        dispute.suggestions[stored.id] = stored
        self._suggestion_dispute[stored.id] = dispute.id
        return stored

    def _commit_resolution(
        self, dispute: Dispute, suggestion: Suggestion, status: SuggestionStatus
    ) -> Suggestion:
        self.log.append(
            EventKind.SUGGESTION_RESOLVED,
            dispute.id,
            {"suggestion_id": suggestion.id, "status": status.value},
        )
        updated = dataclasses.replace(suggestion, status=status)
        dispute.suggestions[suggestion.id] = updated
        return updated

    def _supersede_pending(
        self, dispute: Dispute, requester: str, kind: SuggestionKind
    ) -> None:
        for stale in dispute.pending_suggestions(requester=requester, kind=kind):
            self._commit_resolution(dispute, stale, SuggestionStatus.SUPERSEDED)

    # -- dispute lifecycle ----------------------------------------------------

    def create_dispute(
        self,
        title: str,
        party_a: str,
        party_b: str,
        policy: Optional[TriggerPolicySet] = None,
        *,
        party_a_id: Optional[str] = None,
        party_b_id: Optional[str] = None,
        mediator: Optional[str] = None,
        mediator_id: Optional[str] = None,
    ) -> Dispute:
        dispute = domain.create_dispute(
            title,
            party_a,
            party_b,
            policy,
            party_a_id=party_a_id,
            party_b_id=party_b_id,
            created_at=self._clock(),
        )
        if mediator:
            domain.attach_mediator(dispute, mediator, mediator_id=mediator_id)
        payload = eventlog.dispute_created_payload(dispute)
        self.log.append(EventKind.DISPUTE_CREATED, dispute.id, payload)
        stored = eventlog.dispute_from_created_payload(payload)
        with self._registry_lock:
            self._disputes[stored.id] = stored
        return stored

    def attach_mediator(
        self, dispute_id: str, display_name: str, *, mediator_id: Optional[str] = None
    ) -> Participant:
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            mediator = domain.attach_mediator(dispute, display_name, mediator_id=mediator_id)
            self.log.append(
                EventKind.STATUS_CHANGED,
                dispute.id,
                eventlog.status_changed_payload(dispute),
            )
            return mediator

    def set_status(self, dispute_id: str, actor_id: str, status: DisputeStatus) -> Dispute:
        """Manual settle/close by any party or the mediator."""
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            role = dispute.role_of(actor_id)
            if role not in (*PARTY_ROLES, ParticipantRole.MEDIATOR):
                raise NotAParty(f"{actor_id!r} may not change the status of {dispute_id}")
            domain.set_status(dispute, status)
            self.log.append(
                EventKind.STATUS_CHANGED,
                dispute.id,
                eventlog.status_changed_payload(dispute),
            )
            return dispute

    # -- detection --------------------------------------------------------

    def _detect(self, body: str) -> DetectionResult:
        result = detection_mod.scan_keywords(body, self.lexicon)
        if result.flagged or not self.llm_classifier_enabled:
            return result
        try:
            return detection_mod.classify_with_llm(body, self.provider)
        except ProviderError as exc:
            # Never block human communication on classifier availability.
            logger.warning("llm classifier unavailable (%s); treating as not flagged", exc)
            return result

    # -- feature 1: reformulation -------------------------------------------

    def submit_party_message(
        self, dispute_id: str, party_id: str, body: str, force_send: bool = False
    ) -> SubmitOutcome:
        """Run a party's draft through detection; send it or offer a rewrite.

        With force_send, or when detection does not flag the draft, the
        message is appended verbatim with HumanOriginal origin. A flagged
        draft yields a Pending reformulation instead — nothing is
        appended until the party decides.
        """
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            self._require_party(dispute, party_id)
            self._require_open(dispute)
            if not body or not body.strip():
                raise domain.EmptyBody("message body must be non-empty")
            if force_send or not self._detect(body).flagged:
                message = domain.build_message(
                    dispute,
                    party_id,
                    body,
                    MessageOrigin.HUMAN_ORIGINAL,
                    sent_at=self._clock(),
                )
                return SubmitOutcome(sent=self._commit_message(dispute, message))
        suggestion = self._generate_reformulation(dispute_id, party_id, body)
        return SubmitOutcome(suggestion=suggestion)

    def request_reformulation(self, dispute_id: str, party_id: str, body: str) -> Suggestion:
        """Manual path: generate a rewrite regardless of detection."""
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            self._require_party(dispute, party_id)
            self._require_open(dispute)
            if not body or not body.strip():
                raise domain.EmptyBody("message body must be non-empty")
        return self._generate_reformulation(dispute_id, party_id, body)

    def _generate_reformulation(
        self, dispute_id: str, party_id: str, body: str
    ) -> Suggestion:
        bundle = prompting.build_reformulation_prompt(body)
        try:
            result = self._complete(bundle)
        except ProviderError as exc:
            raise ReformulationUnavailable(
                "reformulation is unavailable; resend with force_send to post the original"
            ) from exc
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            self._require_open(dispute)
            self._supersede_pending(dispute, party_id, SuggestionKind.REFORMULATION)
            suggestion = Suggestion(
                id=domain.new_id(),
                dispute_id=dispute.id,
                kind=SuggestionKind.REFORMULATION,
                requester=party_id,
                generated_text=result.text,
                created_at=self._clock(),
                original_text=body,
            )
            return self._commit_suggestion(dispute, suggestion)

    def resolve_suggestion(
        self,
        suggestion_id: str,
        actor_id: str,
        action: ResolveAction,
        edited_text: Optional[str] = None,
    ) -> Message:
        """Turn a Pending suggestion into exactly one appended message."""
        dispute_id = self._suggestion_dispute.get(suggestion_id)
        if dispute_id is None:
            raise UnknownSuggestion(f"no suggestion {suggestion_id}")
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            suggestion = dispute.suggestions[suggestion_id]
            if suggestion.status is not SuggestionStatus.PENDING:
                raise AlreadyResolved(f"suggestion {suggestion_id} is {suggestion.status.value}")
            self._require_resolver(dispute, suggestion, actor_id)
            self._require_open(dispute)

            origin = _RESOLVE_ORIGINS[suggestion.kind].get(action)
            if origin is None:
                raise InvalidResolveAction(
                    f"{action.value} does not apply to a {suggestion.kind.value} suggestion"
                )
            if action is ResolveAction.SEND_ORIGINAL:
                body = suggestion.original_text or ""
                link = None
            elif action is ResolveAction.SEND_REFORMULATED:
                body = suggestion.generated_text
                link = suggestion.id
            else:
                if not edited_text or not edited_text.strip():
                    raise EmptyEdit("edited text must be non-empty")
                body = edited_text
                link = suggestion.id

            message = domain.build_message(
                dispute, actor_id, body, origin, link, sent_at=self._clock()
            )
            self._commit_resolution(dispute, suggestion, _RESOLVE_STATUSES[action])
            return self._commit_message(dispute, message)

    # -- feature 2: mediator drafts -------------------------------------------

    def draft_intervention(
        self, dispute_id: str, mediator_id: str, instructions: Optional[str] = None
    ) -> Suggestion:
        """Generate a Pending intervention draft for the human mediator."""
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            if dispute.role_of(mediator_id) is not ParticipantRole.MEDIATOR:
                raise NotMediator(f"{mediator_id!r} is not the mediator of {dispute_id}")
            self._require_open(dispute)
            context = self._context_window(dispute)
        bundle = prompting.build_mediator_prompt(
            context,
            instructions,
            purpose=PromptPurpose.MEDIATOR_DRAFT,
            window_size=self.context_window_size,
        )
        result = self._complete(bundle)
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            self._require_open(dispute)
            self._supersede_pending(dispute, mediator_id, SuggestionKind.MEDIATOR_DRAFT)
            suggestion = Suggestion(
                id=domain.new_id(),
                dispute_id=dispute.id,
                kind=SuggestionKind.MEDIATOR_DRAFT,
                requester=mediator_id,
                generated_text=result.text,
                created_at=self._clock(),
                context_snapshot=bundle.context_message_ids,
                instructions=bundle.instructions,
            )
            return self._commit_suggestion(dispute, suggestion)

    def send_mediator_message(self, dispute_id: str, mediator_id: str, body: str) -> Message:
        """Freeform mediator message, no suggestion involved."""
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            if dispute.role_of(mediator_id) is not ParticipantRole.MEDIATOR:
                raise NotMediator(f"{mediator_id!r} is not the mediator of {dispute_id}")
            message = domain.build_message(
                dispute,
                mediator_id,
                body,
                MessageOrigin.MEDIATOR_FREEFORM,
                sent_at=self._clock(),
            )
            return self._commit_message(dispute, message)

    # -- feature 3: autonomous interventions ----------------------------------

    def request_ai_intervention(self, dispute_id: str, requester_id: str) -> Message:
        """A party asks the AI mediator to intervene right now."""
        dispute = self._dispute(dispute_id)
        self._require_party(dispute, requester_id)
        if not dispute.policy.party_request.enabled:
            raise PolicyDisabled("party_request intervention is disabled for this dispute")
        trigger = TriggerEvent(
            kind=TriggerKind.PARTY_REQUEST,
            dispute_id=dispute_id,
            fired_at=self._clock(),
            cause=f"requested by participant {requester_id}",
        )
        return self.autonomous_intervene(dispute_id, trigger)

    def autonomous_intervene(self, dispute_id: str, trigger: TriggerEvent) -> Message:
        """Generate and send an AI intervention directly to the parties.

        The appended message is attributed to the synthetic AI mediator
        with AiAutonomous origin, so every surface can label it as
        AI-generated. Provider failure appends nothing.
        """
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            self._require_policy_enabled(dispute, trigger.kind)
            self._require_open(dispute)
            context = self._context_window(dispute)
        bundle = prompting.build_mediator_prompt(
            context,
            None,
            purpose=PromptPurpose.AUTONOMOUS_INTERVENTION,
            window_size=self.context_window_size,
        )
        result = self._complete(bundle)
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            self._require_policy_enabled(dispute, trigger.kind)
            self._require_open(dispute)
            self.log.append(
                EventKind.TRIGGER_FIRED, dispute.id, eventlog.trigger_to_payload(trigger)
            )
            dispute.audit.append(trigger)
            message = domain.build_message(
                dispute,
                AI_MEDIATOR_ID,
                result.text,
                MessageOrigin.AI_AUTONOMOUS,
                sent_at=self._clock(),
            )
            return self._commit_message(dispute, message)

    def evaluate_triggers(
        self, dispute_id: str, now: Optional[datetime] = None
    ) -> list[TriggerEvent]:
        """All currently-firing enabled polled triggers (PartyRequest is
        event-driven and never returned here). Pure read; idempotent for
        a fixed clock and state."""
        now = now or self._clock()
        with self._lock(dispute_id):
            dispute = self._dispute(dispute_id)
            if dispute.status is not DisputeStatus.OPEN:
                return []
            fired: list[TriggerEvent] = []
            policy = dispute.policy

            last = dispute.last_message
            if (
                policy.inactivity.enabled
                and last is not None
                and last.origin is not MessageOrigin.AI_AUTONOMOUS
                and now - last.sent_at >= policy.inactivity.threshold
            ):
                fired.append(
                    TriggerEvent(
                        TriggerKind.INACTIVITY,
                        dispute_id,
                        now,
                        f"no activity since {last.sent_at.isoformat()}",
                    )
                )

            count = len(dispute.messages)
            if policy.every_n.enabled and count > 0 and count % policy.every_n.n == 0:
                window_start = count - policy.every_n.n + 1
                intervened = any(
                    m.origin is MessageOrigin.AI_AUTONOMOUS
                    for m in dispute.messages[window_start - 1 :]
                )
                if not intervened:
                    fired.append(
                        TriggerEvent(
                            TriggerKind.EVERY_N,
                            dispute_id,
                            now,
                            f"message count reached {count} (n={policy.every_n.n})",
                        )
                    )

            if policy.heated.enabled:
                flagged_cause = self._heated_cause(dispute)
                if flagged_cause:
                    fired.append(TriggerEvent(TriggerKind.HEATED, dispute_id, now, flagged_cause))
            return fired

    def _heated_cause(self, dispute: Dispute) -> Optional[str]:
        """Cause string when the most recent party message runs hot.

        Does not re-fire once the AI has already responded to that
        message (otherwise the poller would intervene every tick).
        """
        last_party: Optional[Message] = None
        for message in reversed(dispute.messages):
            if message.origin is MessageOrigin.AI_AUTONOMOUS and last_party is None:
                return None
            if message.author_role in PARTY_ROLES:
                last_party = message
                break
        if last_party is None:
            return None
        detector = dispute.policy.heated.detector
        if detector is DetectionStrategy.KEYWORD_SCAN:
            result = detection_mod.scan_keywords(last_party.body, self.lexicon)
        elif detector is DetectionStrategy.LLM_CLASSIFIER and self.llm_classifier_enabled:
            try:
                result = detection_mod.classify_with_llm(last_party.body, self.provider)
            except ProviderError as exc:
                logger.warning("heated classifier failed: %s", exc)
                return None
        else:
            return None
        if not result.flagged:
            return None
        return f"message seq {last_party.seq} flagged by {detector.value}"

    def poll_triggers_once(self, now: Optional[datetime] = None) -> list[Message]:
        """One poller tick: evaluate all open disputes and intervene."""
        sent: list[Message] = []
        for dispute_id in self.dispute_ids():
            for trigger in self.evaluate_triggers(dispute_id, now):
                try:
                    sent.append(self.autonomous_intervene(dispute_id, trigger))
                except (ProviderError, EngineError, prompting.PromptError) as exc:
                    logger.warning(
                        "autonomous intervention failed for %s: %s", dispute_id, exc
                    )
        return sent

    # -- shared helpers -----------------------------------------------------

    def _complete(self, bundle: PromptBundle):
        budget = getattr(self.provider, "max_context_tokens", None)
        if budget:
            bundle = prompting.estimate_and_trim(bundle, budget)
        return self.provider.complete(bundle)

    def _context_window(self, dispute: Dispute) -> list[ContextMessage]:
        window = dispute.messages[-self.context_window_size :]
        context = []
        for message in window:
            participant = dispute.participant_by_id(message.author)
            name = participant.display_name if participant else message.author
            label = participant.role_label if participant else message.author_role.value
            context.append(ContextMessage(message.id, name, label, message.body))
        return context

    @staticmethod
    def _require_party(dispute: Dispute, participant_id: str) -> None:
        if dispute.role_of(participant_id) not in PARTY_ROLES:
            raise NotAParty(f"{participant_id!r} is not a party of dispute {dispute.id}")

    @staticmethod
    def _require_open(dispute: Dispute) -> None:
        if dispute.status is not DisputeStatus.OPEN:
            raise domain.DisputeClosed(f"dispute {dispute.id} is {dispute.status.value}")

    @staticmethod
    def _require_resolver(dispute: Dispute, suggestion: Suggestion, actor_id: str) -> None:
        if actor_id == suggestion.requester:
            return
        if (
            suggestion.kind is SuggestionKind.MEDIATOR_DRAFT
            and dispute.role_of(actor_id) is ParticipantRole.MEDIATOR
        ):
            return
        raise NotRequester(f"{actor_id!r} may not resolve suggestion {suggestion.id}")

    @staticmethod
    def _require_policy_enabled(dispute: Dispute, kind: TriggerKind) -> None:
        policy = dispute.policy
        enabled = {
            TriggerKind.PARTY_REQUEST: policy.party_request.enabled,
            TriggerKind.INACTIVITY: policy.inactivity.enabled,
            TriggerKind.EVERY_N: policy.every_n.enabled,
            TriggerKind.HEATED: policy.heated.enabled,
        }[kind]
        if not enabled:
            raise PolicyDisabled(f"{kind.value} intervention is disabled for dispute {dispute.id}")


class TriggerPoller:
    """Background thread running the trigger poll on a fixed cadence."""

    def __init__(self, engine: MediationEngine, interval_seconds: float = 30.0):
        self.engine = engine
        self.interval = interval_seconds
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, name="trigger-poller", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        while not self._stop.wait(self.interval):
            try:
                self.engine.poll_triggers_once()
            except Exception:  # pragma: no cover - defensive; poller must survive
                logger.exception("trigger poll tick failed")

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
