// Chat messages plus the send flow: optimistic user bubble, assistant bubble
// with trace link on success, inline error bubble on failure.

import { CopilotClient } from "./api.js";
import { validateAttachmentCsv } from "./csv.js";
import {
  ChatViewState,
  SendQueue,
  addUserMessage,
  failTurn,
  resolveTurn,
} from "./state.js";

export interface ChatPanelOptions {
  onTraceSelected?: (traceId: string) => void;
  now?: () => number;
}

export class ChatPanel {
  private queue = new SendQueue();
  private sessionPromise: Promise<string> | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: CopilotClient,
    readonly state: ChatViewState,
    private readonly options: ChatPanelOptions = {},
  ) {}

  private now(): number {
    return this.options.now ? this.options.now() : Date.now();
  }

  ensureSession(): Promise<string> {
    if (this.sessionPromise === null) {
      this.sessionPromise = this.client.createSession().then(({ session_id }) => {
        this.state.sessionId = session_id;
        return session_id;
      });
      this.sessionPromise.catch(() => {
        this.sessionPromise = null;
      });
    }
    return this.sessionPromise;
  }

  /** Send one turn. Resolves after the assistant (or error) bubble renders. */
  async sendTurn(text: string, attachmentCsv?: string): Promise<void> {
    if (attachmentCsv !== undefined) {
      const check = validateAttachmentCsv(attachmentCsv);
      if (!check.ok) {
        failTurn(this.state, addUserMessage(this.state, text, this.now()),
          check.error ?? "invalid attachment", this.now());
        this.render();
        return;
      }
    }
    const userMessage = addUserMessage(this.state, text, this.now());
    this.render();
    await this.queue.run("turns", async () => {
      try {
        const sessionId = await this.ensureSession();
        const response = await this.client.sendMessage(sessionId, text, attachmentCsv);
        resolveTurn(this.state, userMessage, response.answer,
          response.trace_id, response.intent, this.now());
      } catch (error) {
        failTurn(this.state, userMessage, String(error), this.now());
      }
      this.render();
    });
  }

  render(): void {
    this.root.textContent = "";
    const list = document.createElement("div");
    list.className = "messages";
    this.state.messages.forEach((message, i) => {
      const bubble = document.createElement("div");
      bubble.className = `bubble bubble-${message.role}`;
      bubble.dataset.index = String(i);
      if (message.pending) {
        bubble.classList.add("pending");
      }
      const body = document.createElement("div");
      body.className = "bubble-text";
      body.textContent = message.text;
      bubble.appendChild(body);
      if (message.traceId) {
        const link = document.createElement("a");
        link.className = "trace-link";
        link.href = "#";
        link.dataset.traceId = message.traceId;
        link.textContent = `trace ${message.traceId.slice(0, 8)}`;
        link.addEventListener("click", (event) => {
          event.preventDefault();
          this.options.onTraceSelected?.(message.traceId as string);
        });
        bubble.appendChild(link);
      }
      list.appendChild(bubble);
    });
    this.root.appendChild(list);
  }
}
