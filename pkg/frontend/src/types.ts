// Wire types for the copilot service JSON API.

export interface MessageResponse {
  answer: string;
  intent: string;
  intent_source: string;
  trace_id: string;
}

export interface TraceStep {
  kind: string;
  payload: string;
  ts: number;
}

export interface Trace {
  trace_id: string;
  steps: TraceStep[];
}

export interface SessionTurn {
  user_text: string;
  attachment_ref: string | null;
  answer: string;
  trace_id: string;
  intent: string;
}

export interface SessionHistory {
  session_id: string;
  turns: SessionTurn[];
}

/** One line of the report's machine records (schema runreport/v1). */
export interface ReportRecord {
  schema: string;
  run_id: string;
  kind: string;
  candidate: string;
  metrics: Record<string, unknown>;
  transcript: string | null;
}

export const JUDGE_CRITERIA = [
  "accuracy",
  "relevance",
  "thoroughness",
  "clarity",
  "conciseness",
] as const;

export type JudgeCriterion = (typeof JUDGE_CRITERIA)[number];
