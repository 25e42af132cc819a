/** Client-side dispute state: a snapshot folded forward by events.
 *
 * The store never invents state: everything renders from the server
 * snapshot plus the ordered event stream, so a reload mid-conversation
 * reconstructs the identical view.
 */

import type {
  DisputeSnapshot,
  Participant,
  ParticipantRole,
  SuggestionStatusValue,
  TriggerAudit,
  WireEvent,
  WireMessage,
  WireSuggestion,
} from "./types.js";

export type RoleView = "party" | "mediator";

export function roleViewFor(snapshot: DisputeSnapshot, participantId: string): RoleView {
  const participant = participantById(snapshot, participantId);
  if (!participant) {
    throw new Error(`not a participant of this dispute: ${participantId}`);
  }
  return participant.role === "mediator" ? "mediator" : "party";
}

export function participantById(
  snapshot: DisputeSnapshot,
  participantId: string,
): Participant | undefined {
  return Object.values(snapshot.participants).find((p) => p && p.id === participantId);
}

export function displayName(snapshot: DisputeSnapshot, participantId: string): string {
  return participantById(snapshot, participantId)?.display_name ?? participantId;
}

export function roleLabel(role: ParticipantRole): string {
  switch (role) {
    case "party_a":
    case "party_b":
      return "party";
    case "mediator":
      return "mediator";
    case "ai_mediator":
      return "AI mediator";
    case "system":
      return "system";
  }
}

/** Fold one event into the snapshot (pure; returns the same object mutated
 * for simplicity — the store owns the only reference). */
export function applyEvent(snapshot: DisputeSnapshot, event: WireEvent): DisputeSnapshot {
  switch (event.kind) {
    case "dispute_created":
      // Full state bootstrap; only seen when folding from seq 0.
      return { ...(event.payload as unknown as DisputeSnapshot), messages: [], suggestions: {}, audit: [] };
    case "message_appended": {
      const message = event.payload as unknown as WireMessage;
      if (message.seq === snapshot.messages.length + 1) {
        snapshot.messages.push(message);
      }
      return snapshot;
    }
    case "suggestion_created": {
      const suggestion = event.payload as unknown as WireSuggestion;
      snapshot.suggestions[suggestion.id] = suggestion;
      return snapshot;
    }
    case "suggestion_resolved": {
      const payload = event.payload as { suggestion_id: string; status: SuggestionStatusValue };
      const suggestion = snapshot.suggestions[payload.suggestion_id];
      if (suggestion) {
        suggestion.status = payload.status;
      }
      return snapshot;
    }
    case "trigger_fired": {
      snapshot.audit.push(event.payload as unknown as TriggerAudit);
      return snapshot;
    }
    case "status_changed": {
      const payload = event.payload as unknown as DisputeSnapshot;
      snapshot.status = payload.status;
      snapshot.participants = payload.participants;
      return snapshot;
    }
  }
}

export type StoreListener = (store: DisputeStore) => void;

export class DisputeStore {
  snapshot: DisputeSnapshot;
  cursor: number;
  connected = true;
  private listeners: StoreListener[] = [];

  constructor(snapshot: DisputeSnapshot, cursor: number) {
    this.snapshot = snapshot;
    this.cursor = cursor;
  }

  onChange(listener: StoreListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener(this);
    }
  }

  /** Apply stream events after the cursor; duplicates are dropped. */
  applyEvents(events: WireEvent[]): void {
    let changed = false;
    for (const event of events) {
      if (event.event_seq <= this.cursor) {
        continue;
      }
      this.cursor = event.event_seq;
      applyEvent(this.snapshot, event);
      changed = true;
    }
    if (changed) {
      this.notify();
    }
  }

  setConnected(connected: boolean): void {
    if (this.connected !== connected) {
      this.connected = connected;
      this.notify();
    }
  }

  pendingReformulationFor(participantId: string): WireSuggestion | undefined {
    return Object.values(this.snapshot.suggestions).find(
      (s) =>
        s.kind === "reformulation" &&
        s.status === "pending" &&
        s.requester === participantId,
    );
  }
}

/** Rebuild a snapshot purely from the event list (refresh equivalence). */
export function snapshotFromEvents(events: WireEvent[]): DisputeSnapshot {
  if (events.length === 0 || events[0].kind !== "dispute_created") {
    throw new Error("event stream must start with dispute_created");
  }
  let snapshot = applyEvent(undefined as unknown as DisputeSnapshot, events[0]);
  for (const event of events.slice(1)) {
    snapshot = applyEvent(snapshot, event);
  }
  return snapshot;
}
