/** Application entry: join screen (dispute + role selection) and chat screen. */

import { ApiClient, ApiError } from "./api.js";
import { DisputeStore, roleViewFor } from "./state.js";
import type { DisputeSnapshot, Participant, WireSuggestion } from "./types.js";
import {
  createAiButton,
  createComposer,
  createConnectionBanner,
  createMediatorPanel,
  el,
  openReformulationDialog,
  renderTimeline,
} from "./ui.js";

function appRoot(): HTMLElement {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  return root;
}

export async function showJoinScreen(api: ApiClient): Promise<void> {
  const root = appRoot();
  const { disputes } = await api.listDisputes();
  const list = el("div", { class: "join-list" });
  for (const dispute of disputes) {
    const button = el("button", { class: "join-dispute", "data-dispute": dispute.id }, [
      `${dispute.title} - ${dispute.status} (${dispute.message_count} messages)`,
    ]);
    button.addEventListener("click", () => void showRoleSelection(api, dispute.id));
    list.append(button);
  }
  if (disputes.length === 0) {
    list.append(el("p", {}, ["No disputes yet. Start the server with --seed-demo to explore."]));
  }
  root.replaceChildren(el("div", { class: "join" }, [el("h2", {}, ["Select a dispute"]), list]));
}

export async function showRoleSelection(api: ApiClient, disputeId: string): Promise<void> {
  const root = appRoot();
  const snapshot = await api.getDispute(disputeId);
  const choices = el("div", { class: "role-list" });
  const selectable = Object.values(snapshot.participants).filter(
    (p): p is Participant => !!p && p.role !== "ai_mediator" && p.role !== "system",
  );
  for (const participant of selectable) {
    const button = el("button", { class: "role-choice", "data-participant": participant.id }, [
      `${participant.display_name} (${participant.role === "mediator" ? "mediator" : "party"})`,
    ]);
    button.addEventListener("click", () => void showChatScreen(api, disputeId, participant.id));
    choices.append(button);
  }
  root.replaceChildren(
    el("div", { class: "join" }, [
      el("h2", {}, [`Join "${snapshot.title}" as`]),
      choices,
    ]),
  );
}

export async function showChatScreen(
  api: ApiClient,
  disputeId: string,
  participantId: string,
): Promise<void> {
  const root = appRoot();
  const snapshot = await api.getDispute(disputeId);
  const initialEvents = await api.getEvents(disputeId, 0);
  const store = new DisputeStore(snapshot, initialEvents.last_seq);
  const view = roleViewFor(snapshot, participantId);

  const banner = createConnectionBanner();
  const timeline = el("div", { class: "timeline", "data-testid": "timeline" });
  const controls = el("div", { class: "controls" });

  const notice = el("div", { class: "notice", hidden: "hidden" });
  const showNotice = (text: string | null) => {
    notice.hidden = text === null;
    notice.textContent = text ?? "";
  };

  const resolveSuggestion = async (
    suggestion: WireSuggestion,
    action: "send_original" | "send_reformulated" | "send_edited",
    editedText?: string,
  ) => {
    try {
      await api.resolveSuggestion(suggestion.id, participantId, action, editedText);
    } catch (error) {
      if (error instanceof ApiError && error.body.code === "already_resolved") {
        showNotice("This suggestion was already handled elsewhere.");
        return;
      }
      throw error;
    }
  };

  if (view === "party") {
    const composer = createComposer(async (body) => {
      const outcome = await api.postMessage(disputeId, participantId, body);
      if (outcome.kind === "suggestion") {
        openReformulationDialog(root, outcome.suggestion, async (choice) => {
          await resolveSuggestion(
            outcome.suggestion,
            choice.action,
            choice.action === "send_edited" ? choice.editedText : undefined,
          );
        });
      } else if (outcome.kind === "provider_unavailable") {
        // degrade path: the platform never blocks human communication
        showNotice("The rewrite assistant is unavailable.");
        const force = el("button", { class: "force-send" }, ["Send the original anyway"]);
        force.addEventListener("click", () => {
          void api.postMessage(disputeId, participantId, body, true).then(() => {
            showNotice(null);
            force.remove();
          });
        });
        notice.append(force);
      }
    });
    controls.append(composer.root);

    const aiButton = createAiButton(snapshot.policy.party_request.enabled, async () => {
      try {
        await api.aiIntervene(disputeId, participantId);
      } catch (error) {
        if (error instanceof ApiError && error.status === 403) {
          aiButton?.remove();
          return;
        }
        throw error;
      }
    });
    if (aiButton) {
      controls.append(aiButton);
    }
  } else {
    const panel = createMediatorPanel({
      canDraft: () => store.snapshot.messages.length > 0,
      onDraft: (instructions) => api.draftIntervention(disputeId, participantId, instructions),
      onSendDraft: (suggestion, action, editedText) =>
        resolveSuggestion(suggestion, action, editedText),
      onFreeform: async (body) => {
        await api.postMessage(disputeId, participantId, body);
      },
    });
    controls.append(panel.root);
  }

  root.replaceChildren(
    el("div", { class: "chat" }, [
      el("h2", { class: "chat-title" }, [snapshot.title]),
      banner.root,
      notice,
      timeline,
      controls,
    ]),
  );
  renderTimeline(timeline, store.snapshot);

  store.onChange(() => {
    renderTimeline(timeline, store.snapshot);
    banner.set(store.connected);
  });
  api.subscribe(disputeId, store.cursor, {
    onEvent: (event) => store.applyEvents([event]),
    onStatus: (connected) => store.setConnected(connected),
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void showJoinScreen(new ApiClient(""));
}
