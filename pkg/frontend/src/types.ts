/** Wire types for the mediation platform JSON API. */

export type ParticipantRole = "party_a" | "party_b" | "mediator" | "ai_mediator" | "system";

export type MessageOrigin =
  | "human_original"
  | "human_accepted_reformulation"
  | "human_edited_reformulation"
  | "mediator_draft_sent"
  | "mediator_draft_edited"
  | "mediator_freeform"
  | "ai_autonomous";

export type SuggestionKind = "reformulation" | "mediator_draft";

export type SuggestionStatusValue =
  | "pending"
  | "accepted"
  | "edited"
  | "sent_original"
  | "superseded";

export type DisputeStatusValue = "open" | "settled" | "closed";

export type ResolveActionValue = "send_original" | "send_reformulated" | "send_edited";

export interface Participant {
  id: string;
  display_name: string;
  role: ParticipantRole;
}

export interface WireMessage {
  id: string;
  dispute_id: string;
  seq: number;
  author: string;
  author_role: ParticipantRole;
  body: string;
  sent_at: string;
  origin: MessageOrigin;
  suggestion_id: string | null;
}

export interface WireSuggestion {
  id: string;
  dispute_id: string;
  kind: SuggestionKind;
  requester: string;
  generated_text: string;
  created_at: string;
  status: SuggestionStatusValue;
  original_text: string | null;
  context_snapshot: string[] | null;
  instructions: string | null;
}

export interface TriggerAudit {
  kind: "party_request" | "inactivity" | "every_n" | "heated";
  dispute_id: string;
  fired_at: string;
  cause: string;
}

export interface PolicyWire {
  party_request: { enabled: boolean };
  inactivity: { enabled: boolean; threshold_seconds: number };
  every_n: { enabled: boolean; n: number };
  heated: { enabled: boolean; detector: string };
}

export interface DisputeSnapshot {
  id: string;
  title: string;
  status: DisputeStatusValue;
  created_at: string;
  participants: Partial<Record<ParticipantRole, Participant>>;
  policy: PolicyWire;
  messages: WireMessage[];
  suggestions: Record<string, WireSuggestion>;
  audit: TriggerAudit[];
}

export interface DisputeListItem {
  id: string;
  title: string;
  status: DisputeStatusValue;
  message_count: number;
}

export type EventKind =
  | "dispute_created"
  | "message_appended"
  | "suggestion_created"
  | "suggestion_resolved"
  | "trigger_fired"
  | "status_changed";

export interface WireEvent {
  event_seq: number;
  dispute_id: string;
  kind: EventKind;
  recorded_at: string;
  // Full serialized entity; shape depends on kind.
  payload: Record<string, unknown>;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  retry_after_seconds?: number;
}
