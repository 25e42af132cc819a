/** Shared builders for wire-shaped fixtures. */

import type {
  DisputeSnapshot,
  WireEvent,
  WireMessage,
  WireSuggestion,
} from "../src/types.js";

export function makeSnapshot(overrides: Partial<DisputeSnapshot> = {}): DisputeSnapshot {
  return {
    id: "d1",
    title: "Broken camera",
    status: "open",
    created_at: "2024-01-01T12:00:00.000+00:00",
    participants: {
      party_a: { id: "john", display_name: "John", role: "party_a" },
      party_b: { id: "jane", display_name: "Jane", role: "party_b" },
      mediator: { id: "maria", display_name: "Maria", role: "mediator" },
      ai_mediator: { id: "ai-mediator", display_name: "AI Mediator", role: "ai_mediator" },
    },
    policy: {
      party_request: { enabled: true },
      inactivity: { enabled: false, threshold_seconds: 3600 },
      every_n: { enabled: false, n: 10 },
      heated: { enabled: false, detector: "keyword_scan" },
    },
    messages: [],
    suggestions: {},
    audit: [],
    ...overrides,
  };
}

export function makeMessage(overrides: Partial<WireMessage> = {}): WireMessage {
  return {
    id: `m${overrides.seq ?? 1}`,
    dispute_id: "d1",
    seq: 1,
    author: "john",
    author_role: "party_a",
    body: "hello",
    sent_at: "2024-01-01T12:00:01.000+00:00",
    origin: "human_original",
    suggestion_id: null,
    ...overrides,
  };
}

export function makeSuggestion(overrides: Partial<WireSuggestion> = {}): WireSuggestion {
  return {
    id: "s1",
    dispute_id: "d1",
    kind: "reformulation",
    requester: "john",
    generated_text: "a calmer version",
    created_at: "2024-01-01T12:00:02.000+00:00",
    status: "pending",
    original_text: "an angry version",
    context_snapshot: null,
    instructions: null,
    ...overrides,
  };
}

export function eventOf(
  seq: number,
  kind: WireEvent["kind"],
  payload: Record<string, unknown>,
): WireEvent {
  return {
    event_seq: seq,
    dispute_id: "d1",
    kind,
    recorded_at: "2024-01-01T12:00:00.000+00:00",
    payload,
  };
}
