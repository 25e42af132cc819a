"""Online dispute resolution platform with LLM-assisted mediation.

Two parties and an optional mediator negotiate in a chat room; a
completion provider suggests neutral-tone rewrites of inflammatory
drafts, drafts mediator interventions, and can intervene autonomously
under configurable trigger policies. Every change is event-sourced for
replayable provenance.
"""

from .detection import DetectionResult, DetectionStrategy, Lexicon, scan_keywords
from .domain import (
    Dispute,
    DisputeStatus,
    Message,
    MessageOrigin,
    ParticipantRole,
    Suggestion,
    SuggestionKind,
    SuggestionStatus,
    TriggerKind,
    TriggerPolicySet,
)
from .engine import MediationEngine, ResolveAction, SubmitOutcome, TriggerPoller
from .eventlog import EventKind, EventLog, replay
from .prompting import PromptBundle, build_mediator_prompt, build_reformulation_prompt
from .providers import RemoteProvider, ScriptedProvider, load_script

__version__ = "0.1.0"

__all__ = [
    "DetectionResult",
    "DetectionStrategy",
    "Dispute",
    "DisputeStatus",
    "EventKind",
    "EventLog",
    "Lexicon",
    "MediationEngine",
    "Message",
    "MessageOrigin",
    "ParticipantRole",
    "PromptBundle",
    "RemoteProvider",
    "ResolveAction",
    "ScriptedProvider",
    "SubmitOutcome",
    "Suggestion",
    "SuggestionKind",
    "SuggestionStatus",
    "TriggerKind",
    "TriggerPolicySet",
    "TriggerPoller",
    "build_mediator_prompt",
    "build_reformulation_prompt",
    "load_script",
    "replay",
    "scan_keywords",
    "__version__",
]
