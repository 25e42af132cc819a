"""Prompt assembly for the three mediation features.

Builds the role-tagged chat payloads sent to a completion provider:
a reformulation request for a party's draft, a mediator intervention
over the most recent conversation window, and the yes/no tone
classifier. The system prompt strings are load-bearing and covered by
golden tests; do not reflow or "fix" their wording.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

REFORMULATION_SYSTEM_PROMPT = (
    "You are an ODR platform. You are given the chat message of a party. "
    "Reformulate the message to maintain the content, but make it less "
    "confrontational and more encouraging for an amicable settlement. "
    "Respond directly with the reformulated message, do not explain."
)

MEDIATOR_SYSTEM_PROMPT = (
    "You are a mediator. Your goal is to guide the discussion of two parties "
    "towards an amicable settlement that is acceptable to both parties. "
    "Respond to this communication between the parties. Stick to the role of "
    "the mediator - do not complete the dialog of the parties. Remain neutral, "
    "do not take the side of any party."
)

CLASSIFIER_SYSTEM_PROMPT = (
    "You are an ODR platform. Answer YES if the following chat message "
    "contains inflammatory, insulting, or hostile language, otherwise answer "
    "NO. Answer with a single word."
)

# Mediator instructions are appended to the system turn as their own paragraph.
INSTRUCTIONS_PREFIX = "Additional instructions from the mediator: "

DEFAULT_CONTEXT_WINDOW = 10

# Words-to-tokens fudge factor for the whitespace token estimate.
TOKEN_ESTIMATE_FACTOR = 1.5


class PromptError(Exception):
    """Base class for prompt assembly failures."""


class EmptyDraft(PromptError):
    """A reformulation was requested for an empty draft."""


class EmptyContext(PromptError):
    """A mediator prompt was requested with no messages and no instructions."""


class SystemPromptTooLarge(PromptError):
    """The system turn alone does not fit the token budget."""


class TurnRole(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class PromptPurpose(str, Enum):
    REFORMULATION = "reformulation"
    MEDIATOR_DRAFT = "mediator_draft"
    AUTONOMOUS_INTERVENTION = "autonomous_intervention"
    CLASSIFIER = "classifier"


@dataclass(frozen=True)
class ChatTurn:
    role: TurnRole
    content: str

    def __post_init__(self) -> None:
        if not self.content:
            raise ValueError("chat turn content must be non-empty")


@dataclass(frozen=True)
class ContextMessage:
    """A dispute message labeled for inclusion in a mediator prompt."""

    message_id: str
    display_name: str
    role_label: str
    body: str

    def as_line(self) -> str:
        return f"{self.display_name} ({self.role_label}): {self.body}"


@dataclass(frozen=True)
class PromptBundle:
    """An ordered sequence of chat turns ready for a completion provider.

    ``context_message_ids`` records which dispute messages were rendered
    into user turns, in chronological order. ``instructions`` keeps the
    mediator's free-text steering (also embedded in the system turn) so
    deterministic providers can key on it.
    """

    turns: tuple[ChatTurn, ...]
    purpose: PromptPurpose
    context_message_ids: tuple[str, ...] = field(default=())
    instructions: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.turns or self.turns[0].role is not TurnRole.SYSTEM:
            raise ValueError("first turn must be the system turn")
        if sum(1 for t in self.turns if t.role is TurnRole.SYSTEM) != 1:
            raise ValueError("exactly one system turn allowed")

    @property
    def system_turn(self) -> ChatTurn:
        return self.turns[0]

    def final_user_turn(self) -> Optional[ChatTurn]:
        for turn in reversed(self.turns):
            if turn.role is TurnRole.USER:
                return turn
        return None


def build_reformulation_prompt(draft_body: str) -> PromptBundle:
    """Prompt asking the model to rewrite a party's draft in a neutral tone.

    The draft is passed through verbatim as the single user turn.
    """
    if not draft_body or not draft_body.strip():
        raise EmptyDraft("cannot reformulate an empty draft")
    return PromptBundle(
        turns=(
            ChatTurn(TurnRole.SYSTEM, REFORMULATION_SYSTEM_PROMPT),
            ChatTurn(TurnRole.USER, draft_body),
        ),
        purpose=PromptPurpose.REFORMULATION,
    )


def build_classifier_prompt(body: str) -> PromptBundle:
    """Prompt asking the model for a single-word YES/NO tone verdict."""
    if not body or not body.strip():
        raise EmptyDraft("cannot classify an empty message")
    return PromptBundle(
        turns=(
            ChatTurn(TurnRole.SYSTEM, CLASSIFIER_SYSTEM_PROMPT),
            ChatTurn(TurnRole.USER, body),
        ),
        purpose=PromptPurpose.CLASSIFIER,
    )


def build_mediator_prompt(
    context: Sequence[ContextMessage],
    instructions: Optional[str] = None,
    *,
    purpose: PromptPurpose = PromptPurpose.MEDIATOR_DRAFT,
    window_size: int = DEFAULT_CONTEXT_WINDOW,
) -> PromptBundle:
    """Prompt asking the model to intervene in a conversation.

    Renders the last ``min(window_size, len(context))`` messages, one
    user turn per message as "<display name> (<role label>): <body>",
    preserving chronological order. Instructions, when given, are
    appended to the system turn as an extra paragraph and appear
    nowhere else.
    """
    if purpose not in (PromptPurpose.MEDIATOR_DRAFT, PromptPurpose.AUTONOMOUS_INTERVENTION):
        raise ValueError(f"not a mediator prompt purpose: {purpose}")
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    instructions = instructions.strip() if instructions and instructions.strip() else None
    if not context and instructions is None:
        raise EmptyContext("nothing to mediate: no messages and no instructions")

    system_text = MEDIATOR_SYSTEM_PROMPT
    if instructions is not None:
        system_text = f"{system_text}\n\n{INSTRUCTIONS_PREFIX}{instructions}"

    window = list(context)[-window_size:]
    turns = [ChatTurn(TurnRole.SYSTEM, system_text)]
    turns.extend(ChatTurn(TurnRole.USER, m.as_line()) for m in window)
    return PromptBundle(
        turns=tuple(turns),
        purpose=purpose,
        context_message_ids=tuple(m.message_id for m in window),
        instructions=instructions,
    )


def estimate_turn_tokens(turn: ChatTurn) -> int:
    """Whitespace-token estimate: word count x 1.5, rounded up."""
    return math.ceil(len(turn.content.split()) * TOKEN_ESTIMATE_FACTOR)


def estimate_bundle_tokens(bundle: PromptBundle) -> int:
    return sum(estimate_turn_tokens(t) for t in bundle.turns)


def estimate_and_trim(bundle: PromptBundle, max_context_tokens: int) -> PromptBundle:
    """Drop oldest context turns until the token estimate fits the budget.

    Never drops the system turn or the newest turn; surviving turns keep
    their order and their context_message_ids stay aligned. If the
    system turn plus the newest turn alone exceed the budget the
    maximally trimmed bundle is returned as-is (there is nothing left
    that may be dropped).
    """
    if max_context_tokens < 1:
        raise ValueError("max_context_tokens must be positive")
    system_estimate = estimate_turn_tokens(bundle.system_turn)
    if system_estimate >= max_context_tokens:
        raise SystemPromptTooLarge(
            f"system turn estimate {system_estimate} exceeds budget {max_context_tokens}"
        )

    turns = list(bundle.turns)
    ids = list(bundle.context_message_ids)
    ids_aligned = len(ids) == len(turns) - 1
    total = sum(estimate_turn_tokens(t) for t in turns)
    # Droppable turns sit between the system turn and the newest turn.
    while total > max_context_tokens and len(turns) > 2:
        dropped = turns.pop(1)
        if ids_aligned:
            ids.pop(0)
        total -= estimate_turn_tokens(dropped)
    if turns == list(bundle.turns):
        return bundle
    return replace(bundle, turns=tuple(turns), context_message_ids=tuple(ids))
