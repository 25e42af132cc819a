/** Typed client for the mediation platform HTTP API and event stream. */

import type {
  ApiErrorBody,
  DisputeListItem,
  DisputeSnapshot,
  ResolveActionValue,
  WireEvent,
  WireMessage,
  WireSuggestion,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

/** Result of posting a party message: sent, parked for review, or degraded. */
export type SubmitResult =
  | { kind: "sent"; message: WireMessage }
  | { kind: "suggestion"; suggestion: WireSuggestion }
  | { kind: "provider_unavailable"; error: ApiErrorBody };

export interface SubscribeHandlers {
  onEvent: (event: WireEvent) => void;
  /** Connection state changes; drives the "reconnecting" banner. */
  onStatus?: (connected: boolean) => void;
}

const POLL_INTERVAL_MS = 500;

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const json = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, json as ApiErrorBody);
    }
    return json as T;
  }

  listDisputes(): Promise<{ disputes: DisputeListItem[] }> {
    return this.request("GET", "/disputes");
  }

  getDispute(disputeId: string): Promise<DisputeSnapshot> {
    return this.request("GET", `/disputes/${disputeId}`);
  }

  createDispute(body: {
    title: string;
    party_a: { name: string; id?: string };
    party_b: { name: string; id?: string };
    mediator?: { name: string; id?: string };
  }): Promise<DisputeSnapshot> {
    return this.request("POST", "/disputes", body);
  }

  /**
   * Post a party or mediator message. The typed text is transmitted
   * byte-identical; a 202 means a reformulation awaits review and nothing
   * was sent yet; a 502 means the rewrite engine is down and the caller
   * may retry with forceSend.
   */
  async postMessage(
    disputeId: string,
    authorId: string,
    body: string,
    forceSend = false,
  ): Promise<SubmitResult> {
    const response = await fetch(`${this.baseUrl}/disputes/${disputeId}/messages`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ author_id: authorId, body, force_send: forceSend }),
    });
    const json = await response.json();
    if (response.status === 201) {
      return { kind: "sent", message: (json as { message: WireMessage }).message };
    }
    if (response.status === 202) {
      return {
        kind: "suggestion",
        suggestion: (json as { suggestion: WireSuggestion }).suggestion,
      };
    }
    if (response.status === 502) {
      return { kind: "provider_unavailable", error: json as ApiErrorBody };
    }
    throw new ApiError(response.status, json as ApiErrorBody);
  }

  async resolveSuggestion(
    suggestionId: string,
    actorId: string,
    action: ResolveActionValue,
    editedText?: string,
  ): Promise<WireMessage> {
    const json = await this.request<{ message: WireMessage }>(
      "POST",
      `/suggestions/${suggestionId}/resolve`,
      { actor_id: actorId, action, edited_text: editedText },
    );
    return json.message;
  }

  async requestReformulation(
    disputeId: string,
    authorId: string,
    body: string,
  ): Promise<WireSuggestion> {
    const json = await this.request<{ suggestion: WireSuggestion }>(
      "POST",
      `/disputes/${disputeId}/reformulate`,
      { author_id: authorId, body },
    );
    return json.suggestion;
  }

  async draftIntervention(
    disputeId: string,
    mediatorId: string,
    instructions?: string,
  ): Promise<WireSuggestion> {
    const json = await this.request<{ suggestion: WireSuggestion }>(
      "POST",
      `/disputes/${disputeId}/draft`,
      { mediator_id: mediatorId, instructions: instructions || null },
    );
    return json.suggestion;
  }

  async aiIntervene(disputeId: string, requesterId: string): Promise<WireMessage> {
    const json = await this.request<{ message: WireMessage }>(
      "POST",
      `/disputes/${disputeId}/ai-intervene`,
      { requester_id: requesterId },
    );
    return json.message;
  }

  getEvents(
    disputeId: string,
    since: number,
  ): Promise<{ events: WireEvent[]; last_seq: number }> {
    return this.request("GET", `/disputes/${disputeId}/events?since=${since}`);
  }

  /**
   * Subscribe to a dispute's ordered event stream starting after `since`.
   * Uses the server-sent-events channel when the runtime provides
   * EventSource, otherwise falls back to cursor polling. Returns an
   * unsubscribe function. Events are delivered exactly once, in
   * event_seq order; the internal cursor drives lossless resume.
   */
  subscribe(disputeId: string, since: number, handlers: SubscribeHandlers): () => void {
    let cursor = since;
    let stopped = false;

    const deliver = (event: WireEvent) => {
      if (event.event_seq <= cursor) {
        return; // already seen (resume overlap)
      }
      cursor = event.event_seq;
      handlers.onEvent(event);
    };

    if (typeof EventSource !== "undefined") {
      let source: EventSource | null = null;
      const connect = () => {
        if (stopped) return;
        source = new EventSource(
          `${this.baseUrl}/disputes/${disputeId}/stream?since=${cursor}`,
        );
        source.onopen = () => handlers.onStatus?.(true);
        source.onmessage = (raw) => deliver(JSON.parse(raw.data) as WireEvent);
        source.onerror = () => {
          handlers.onStatus?.(false);
          source?.close();
          // automatic resume from the cursor after a short pause
          setTimeout(connect, 1000);
        };
      };
      connect();
      return () => {
        stopped = true;
        source?.close();
      };
    }

    const poll = async () => {
      while (!stopped) {
        try {
          const batch = await this.getEvents(disputeId, cursor);
          handlers.onStatus?.(true);
          for (const event of batch.events) {
            deliver(event);
          }
        } catch {
          handlers.onStatus?.(false);
        }
        await new Promise((resolve) => setTimeout(resolve, POLL_INTERVAL_MS));
      }
    };
    void poll();
    return () => {
      stopped = true;
    };
  }
}
