// Wires the chat panel, trace side panel, and dashboard to the DOM shell in
// index.html. The service base URL defaults to the page origin.

import { ApiError, CopilotClient } from "./api.js";
import { ChatPanel } from "./chatPanel.js";
import { renderDashboard } from "./dashboard.js";
import { initialState, selectTrace } from "./state.js";
import { renderTrace } from "./tracePanel.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

export function bootstrap(baseUrl: string = window.location.origin): void {
  const client = new CopilotClient(baseUrl);
  const state = initialState();

  const tracePanelEl = el<HTMLElement>("trace-panel");
  const traceBodyEl = el<HTMLElement>("trace-body");

  const showTrace = async (traceId: string) => {
    selectTrace(state, traceId);
    tracePanelEl.classList.add("open");
    try {
      renderTrace(traceBodyEl, await client.getTrace(traceId));
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        renderTrace(traceBodyEl, null);
      } else {
        throw error;
      }
    }
  };

  const chat = new ChatPanel(el("chat-body"), client, state, {
    onTraceSelected: (traceId) => void showTrace(traceId),
  });

  const input = el<HTMLTextAreaElement>("chat-input");
  const sendButton = el<HTMLButtonElement>("chat-send");
  const fileInput = el<HTMLInputElement>("chat-attachment");
  let attachment: string | undefined;

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (!file) {
      attachment = undefined;
      return;
    }
    void file.text().then((text) => {
      attachment = text;
    });
  });

  const send = async () => {
    const text = input.value.trim();
    if (!text) {
      return;
    }
    input.value = "";
    sendButton.disabled = true;
    try {
      await chat.sendTurn(text, attachment);
    } finally {
      attachment = undefined;
      fileInput.value = "";
      sendButton.disabled = false;
    }
  };

  sendButton.addEventListener("click", () => void send());
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && !event.shiftKey) {
      event.preventDefault();
      void send();
    }
  });

  el<HTMLButtonElement>("trace-close").addEventListener("click", () => {
    selectTrace(state, null);
    tracePanelEl.classList.remove("open");
  });

  const runInput = el<HTMLInputElement>("report-run-id");
  const dashboardEl = el<HTMLElement>("dashboard-body");
  el<HTMLButtonElement>("report-load").addEventListener("click", () => {
    void (async () => {
      try {
        renderDashboard(dashboardEl, await client.getReportRecords(runInput.value.trim()));
      } catch (error) {
        if (error instanceof ApiError && error.status === 404) {
          renderDashboard(dashboardEl, null);
        } else {
          throw error;
        }
      }
    })();
  });
}

if (typeof document !== "undefined" && document.getElementById("chat-body")) {
  bootstrap();
}
