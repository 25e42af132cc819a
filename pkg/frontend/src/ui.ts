/** DOM components: timeline, composer, review dialog, mediator panel.
 *
 * No framework; everything renders from server records. AI-authored
 * messages always carry a visible badge so autonomous interventions are
 * clearly labeled as machine-generated.
 */

import type { DisputeSnapshot, ResolveActionValue, WireMessage, WireSuggestion } from "./types.js";
import { displayName, participantById, roleLabel } from "./state.js";

export const AI_BADGE_TEXT = "AI";
export const AI_BADGE_TITLE = "Written by an AI-based system";

/** Clicks within this window are ignored by the AI-intervention button. */
export const AI_BUTTON_DEBOUNCE_MS = 2000;

type Child = HTMLElement | string;

export function el(
  tag: string,
  attrs: Record<string, string> = {},
  children: Child[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function formatTime(iso: string): string {
  const date = new Date(iso);
  if (Number.isNaN(date.getTime())) {
    return "";
  }
  return date.toLocaleTimeString([], { hour: "2-digit", minute: "2-digit" });
}

export function renderMessage(snapshot: DisputeSnapshot, message: WireMessage): HTMLElement {
  const author = participantById(snapshot, message.author);
  const isAi = message.origin === "ai_autonomous";
  const header: Child[] = [
    el("span", { class: "msg-author" }, [
      `${displayName(snapshot, message.author)} (${author ? roleLabel(author.role) : message.author_role})`,
    ]),
  ];
  if (isAi) {
    header.push(
      el("span", { class: "badge-ai", title: AI_BADGE_TITLE, "data-testid": "ai-badge" }, [
        AI_BADGE_TEXT,
      ]),
    );
  }
  header.push(el("span", { class: "msg-time" }, [formatTime(message.sent_at)]));
  return el(
    "div",
    {
      class: `msg msg-${message.author_role}${isAi ? " msg-ai" : ""}`,
      "data-message-id": message.id,
      "data-seq": String(message.seq),
      "data-origin": message.origin,
    },
    [el("div", { class: "msg-header" }, header), el("div", { class: "msg-body" }, [message.body])],
  );
}

/** Rebuild the timeline from the snapshot; messages in seq order. */
export function renderTimeline(container: HTMLElement, snapshot: DisputeSnapshot): void {
  container.replaceChildren(
    ...[...snapshot.messages]
      .sort((a, b) => a.seq - b.seq)
      .map((message) => renderMessage(snapshot, message)),
  );
  container.scrollTop = container.scrollHeight;
}

export interface Composer {
  root: HTMLElement;
  textarea: HTMLTextAreaElement;
  setBusy(busy: boolean): void;
}

/** Message composer; transmits the typed text byte-identical. */
export function createComposer(
  onSend: (body: string) => Promise<void>,
  placeholder = "Type a message...",
): Composer {
  const textarea = el("textarea", {
    class: "composer-input",
    placeholder,
    "data-testid": "composer-input",
  }) as HTMLTextAreaElement;
  const button = el("button", { class: "composer-send", "data-testid": "composer-send" }, [
    "Send",
  ]) as HTMLButtonElement;

  const send = async () => {
    const body = textarea.value;
    if (!body.trim()) {
      return;
    }
    button.disabled = true;
    try {
      await onSend(body);
      textarea.value = "";
    } catch (error) {
      // keep the draft so nothing typed is ever lost
      console.error("send failed", error);
    } finally {
      button.disabled = false;
    }
  };
  button.addEventListener("click", () => void send());
  textarea.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && !event.shiftKey) {
      event.preventDefault();
      void send();
    }
  });

  return {
    root: el("div", { class: "composer" }, [textarea, button]),
    textarea,
    setBusy(busy: boolean) {
      button.disabled = busy;
    },
  };
}

export type DialogAction =
  | { action: "send_original" }
  | { action: "send_reformulated" }
  | { action: "send_edited"; editedText: string };

export interface ReformulationDialog {
  root: HTMLElement;
  close(): void;
}

/**
 * Review dialog for a suggested rewrite: shows the original and the
 * reformulated text side by side with the three possible decisions.
 * Exactly one resolve is issued no matter how the user clicks.
 */
export function openReformulationDialog(
  host: HTMLElement,
  suggestion: WireSuggestion,
  onAction: (choice: DialogAction) => Promise<void>,
): ReformulationDialog {
  let resolved = false;
  const overlay = el("div", { class: "dialog-overlay", "data-testid": "reformulation-dialog" });
  const errorLine = el("div", { class: "dialog-error", hidden: "hidden", "data-testid": "dialog-error" });

  const close = () => overlay.remove();

  const decide = async (choice: DialogAction, busyButton: HTMLButtonElement) => {
    if (resolved) {
      return;
    }
    resolved = true;
    busyButton.disabled = true;
    try {
      await onAction(choice);
      close();
    } catch (error) {
      // stay open so the user can retry the decision
      resolved = false;
      busyButton.disabled = false;
      errorLine.hidden = false;
      errorLine.textContent = `Could not send: ${
        error instanceof Error ? error.message : String(error)
      }. Try again.`;
    }
  };

  const editArea = el("textarea", {
    class: "dialog-edit",
    "data-testid": "dialog-edit",
    hidden: "hidden",
  }) as HTMLTextAreaElement;
  editArea.value = suggestion.generated_text;

  const sendOriginal = el(
    "button",
    { class: "dialog-btn", "data-testid": "send-original" },
    ["Send my original message"],
  ) as HTMLButtonElement;
  const sendReformulated = el(
    "button",
    { class: "dialog-btn primary", "data-testid": "send-reformulated" },
    ["Send the suggested version"],
  ) as HTMLButtonElement;
  const editThenSend = el(
    "button",
    { class: "dialog-btn", "data-testid": "edit-then-send" },
    ["Edit the suggestion"],
  ) as HTMLButtonElement;

  sendOriginal.addEventListener("click", () =>
    void decide({ action: "send_original" }, sendOriginal),
  );
  sendReformulated.addEventListener("click", () =>
    void decide({ action: "send_reformulated" }, sendReformulated),
  );
  editThenSend.addEventListener("click", () => {
    if (editArea.hidden) {
      // first click reveals the editable field prefilled with the suggestion
      editArea.hidden = false;
      editThenSend.textContent = "Send my edited version";
      return;
    }
    void decide({ action: "send_edited", editedText: editArea.value }, editThenSend);
  });

  overlay.append(
    el("div", { class: "dialog" }, [
      el("h3", {}, ["This message may come across as inflammatory"]),
      el("p", { class: "dialog-hint" }, [
        "A calmer rewording is suggested below. You decide what gets sent.",
      ]),
      el("div", { class: "dialog-columns" }, [
        el("div", { class: "dialog-col" }, [
          el("h4", {}, ["Your message"]),
          el("div", { class: "dialog-text", "data-testid": "dialog-original" }, [
            suggestion.original_text ?? "",
          ]),
        ]),
        el("div", { class: "dialog-col" }, [
          el("h4", {}, ["Suggested rewording"]),
          el("div", { class: "dialog-text", "data-testid": "dialog-reformulated" }, [
            suggestion.generated_text,
          ]),
        ]),
      ]),
      editArea,
      errorLine,
      el("div", { class: "dialog-actions" }, [sendOriginal, sendReformulated, editThenSend]),
    ]),
  );
  host.append(overlay);
  return { root: overlay, close };
}

export interface MediatorPanel {
  root: HTMLElement;
  instructionsInput: HTMLTextAreaElement;
  draftButton: HTMLButtonElement;
  draftArea: HTMLTextAreaElement;
  sendDraftButton: HTMLButtonElement;
  setError(text: string | null): void;
}

/**
 * Mediator tools: request an intervention draft (optionally steered by
 * instructions), edit it in place, send it; plus a freeform composer.
 * Sending an unchanged draft resolves SendReformulated; a modified one
 * resolves SendEdited with the edited text.
 */
export function createMediatorPanel(opts: {
  canDraft: () => boolean;
  onDraft: (instructions: string | undefined) => Promise<WireSuggestion>;
  onSendDraft: (
    suggestion: WireSuggestion,
    action: ResolveActionValue,
    editedText?: string,
  ) => Promise<void>;
  onFreeform: (body: string) => Promise<void>;
}): MediatorPanel {
  let current: WireSuggestion | null = null;

  const instructionsInput = el("textarea", {
    class: "panel-instructions",
    placeholder: "Optional instructions for the draft (e.g. ask about insurance)",
    "data-testid": "draft-instructions",
  }) as HTMLTextAreaElement;
  const draftButton = el("button", { class: "panel-btn", "data-testid": "draft-button" }, [
    "Suggest an intervention",
  ]) as HTMLButtonElement;
  const draftArea = el("textarea", {
    class: "panel-draft",
    hidden: "hidden",
    "data-testid": "draft-area",
  }) as HTMLTextAreaElement;
  const sendDraftButton = el(
    "button",
    { class: "panel-btn primary", hidden: "hidden", "data-testid": "send-draft" },
    ["Send to the parties"],
  ) as HTMLButtonElement;
  const errorBox = el("div", { class: "panel-error", hidden: "hidden" });

  const setError = (text: string | null) => {
    if (text === null) {
      errorBox.hidden = true;
      errorBox.textContent = "";
    } else {
      errorBox.hidden = false;
      errorBox.textContent = text;
    }
  };

  const refreshDraftability = () => {
    const allowed = opts.canDraft() || instructionsInput.value.trim().length > 0;
    draftButton.disabled = !allowed;
    draftButton.title = allowed
      ? ""
      : "Nothing to mediate yet: the dispute has no messages";
  };
  refreshDraftability();
  instructionsInput.addEventListener("input", refreshDraftability);

  draftButton.addEventListener("click", () => {
    const instructions = instructionsInput.value.trim() || undefined;
    draftButton.disabled = true;
    void opts
      .onDraft(instructions)
      .then((suggestion) => {
        current = suggestion;
        setError(null);
        draftArea.hidden = false;
        draftArea.value = suggestion.generated_text;
        sendDraftButton.hidden = false;
      })
      .catch((error: unknown) => {
        // inline retry affordance: the button stays usable
        setError(`Draft failed: ${error instanceof Error ? error.message : error}. Try again.`);
      })
      .finally(() => {
        draftButton.disabled = false;
        refreshDraftability();
      });
  });

  sendDraftButton.addEventListener("click", () => {
    if (!current) {
      return;
    }
    const suggestion = current;
    const edited = draftArea.value;
    const action: ResolveActionValue =
      edited === suggestion.generated_text ? "send_reformulated" : "send_edited";
    sendDraftButton.disabled = true;
    void opts
      .onSendDraft(suggestion, action, action === "send_edited" ? edited : undefined)
      .then(() => {
        current = null;
        draftArea.hidden = true;
        sendDraftButton.hidden = true;
        setError(null);
      })
      .catch((error: unknown) => {
        setError(`Send failed: ${error instanceof Error ? error.message : error}`);
      })
      .finally(() => {
        sendDraftButton.disabled = false;
      });
  });

  const freeform = createComposer(opts.onFreeform, "Write to the parties as yourself...");

  const root = el("div", { class: "mediator-panel", "data-testid": "mediator-panel" }, [
    el("h3", {}, ["Mediator tools"]),
    instructionsInput,
    draftButton,
    draftArea,
    sendDraftButton,
    errorBox,
    el("h4", {}, ["Freeform message"]),
    freeform.root,
  ]);
  return { root, instructionsInput, draftButton, draftArea, sendDraftButton, setError };
}

/** One click, one intervention; rapid re-clicks inside the debounce
 * window are ignored. Returns null when the policy is disabled (the
 * button must then not exist at all). */
export function createAiButton(
  policyEnabled: boolean,
  onRequest: () => Promise<void>,
  now: () => number = Date.now,
): HTMLButtonElement | null {
  if (!policyEnabled) {
    return null;
  }
  const button = el("button", { class: "ai-btn", "data-testid": "ai-intervene" }, [
    "Ask the AI mediator to step in",
  ]) as HTMLButtonElement;
  let lastClick = -Infinity;
  button.addEventListener("click", () => {
    const at = now();
    if (at - lastClick < AI_BUTTON_DEBOUNCE_MS) {
      return;
    }
    lastClick = at;
    void onRequest();
  });
  return button;
}

export function createConnectionBanner(): { root: HTMLElement; set(connected: boolean): void } {
  const root = el("div", { class: "conn-banner", hidden: "hidden", "data-testid": "conn-banner" }, [
    "Connection lost - reconnecting and resuming...",
  ]);
  return {
    root,
    set(connected: boolean) {
      root.hidden = connected;
    },
  };
}
