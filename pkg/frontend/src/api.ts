import type { MessageResponse, ReportRecord, SessionHistory, Trace } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: string,
  ) {
    super(`HTTP ${status}: ${body}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    throw new ApiError(response.status, await response.text());
  }
  return (await response.json()) as T;
}

/** Thin client over the service HTTP API; the UI has no other data source. */
export class CopilotClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson<T>(response);
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.url(path));
    return asJson<T>(response);
  }

  createSession(): Promise<{ session_id: string }> {
    return this.post("/v1/sessions", {});
  }

  sendMessage(sessionId: string, text: string, attachmentCsv?: string): Promise<MessageResponse> {
    const body: Record<string, unknown> = { text };
    if (attachmentCsv !== undefined) {
      body.attachment_csv = attachmentCsv;
    }
    return this.post(`/v1/sessions/${sessionId}/messages`, body);
  }

  getSession(sessionId: string): Promise<SessionHistory> {
    return this.get(`/v1/sessions/${sessionId}`);
  }

  getTrace(traceId: string): Promise<Trace> {
    return this.get(`/v1/traces/${traceId}`);
  }

  async getReportRecords(runId: string): Promise<ReportRecord[]> {
    const body = await this.get<{ records: string }>(
      `/v1/reports/${runId}?format=records`,
    );
    return body.records
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as ReportRecord);
  }

  health(): Promise<{ status: string; index_built: boolean }> {
    return this.get("/v1/health");
  }
}
