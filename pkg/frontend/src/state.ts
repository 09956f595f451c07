// Chat view state and the send queue. All metric and answer values shown by
// the UI come from the service; nothing is computed client-side.

export type Role = "user" | "assistant" | "error";

export interface ChatMessage {
  role: Role;
  text: string;
  timestamp: number;
  traceId?: string;
  intent?: string;
  pending?: boolean;
}

export interface ChatViewState {
  sessionId: string | null;
  messages: ChatMessage[];
  selectedTraceId: string | null;
  tracePanelOpen: boolean;
}

export function initialState(): ChatViewState {
  return {
    sessionId: null,
    messages: [],
    selectedTraceId: null,
    tracePanelOpen: false,
  };
}

export function addUserMessage(state: ChatViewState, text: string, now: number): ChatMessage {
  const message: ChatMessage = { role: "user", text, timestamp: now, pending: true };
  state.messages.push(message);
  return message;
}

export function resolveTurn(
  state: ChatViewState,
  userMessage: ChatMessage,
  answer: string,
  traceId: string,
  intent: string,
  now: number,
): ChatMessage {
  userMessage.pending = false;
  const message: ChatMessage = {
    role: "assistant",
    text: answer,
    timestamp: now,
    traceId,
    intent,
  };
  state.messages.push(message);
  return message;
}

export function failTurn(
  state: ChatViewState,
  userMessage: ChatMessage,
  detail: string,
  now: number,
): ChatMessage {
  userMessage.pending = false;
  const message: ChatMessage = { role: "error", text: detail, timestamp: now };
  state.messages.push(message);
  return message;
}

export function selectTrace(state: ChatViewState, traceId: string | null): void {
  state.selectedTraceId = traceId;
  state.tracePanelOpen = traceId !== null;
}

/**
 * Serializes an async action per key: one in-flight request per session,
 * so rapid sends resolve strictly in send order.
 */
export class SendQueue {
  private tails = new Map<string, Promise<unknown>>();

  run<T>(key: string, action: () => Promise<T>): Promise<T> {
    const previous = this.tails.get(key) ?? Promise.resolve();
    const next = previous.then(action, action);
    this.tails.set(key, next.catch(() => undefined));
    return next;
  }
}
