/**
 * REST client for the annotation service. All mutation goes through these
 * endpoints; the UI holds no other channel to the server.
 */

import type { ExportKind, Polarity, SentencePage } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  async createSession(text: string): Promise<{ session_id: string; sentences: number }> {
    const response = await this.request("POST", "/sessions", { text });
    return (await response.json()) as { session_id: string; sentences: number };
  }

  async getSentences(sessionId: string, cursor = 0, limit = 200): Promise<SentencePage> {
    const response = await this.request(
      "GET",
      `/sessions/${sessionId}/sentences?cursor=${cursor}&limit=${limit}`,
    );
    return (await response.json()) as SentencePage;
  }

  async putSpan(
    sessionId: string,
    sentence: number,
    span: { start: number; end: number; polarity: Polarity; version: number },
  ): Promise<number> {
    const response = await this.request(
      "PUT",
      `/sessions/${sessionId}/sentences/${sentence}/spans`,
      span,
    );
    return ((await response.json()) as { version: number }).version;
  }

  async resolveProposal(
    sessionId: string,
    sentence: number,
    body: { start: number; end: number; action: "accept" | "reject"; version: number },
  ): Promise<number> {
    const response = await this.request(
      "PUT",
      `/sessions/${sessionId}/sentences/${sentence}/proposals`,
      body,
    );
    return ((await response.json()) as { version: number }).version;
  }

  async autolabel(sessionId: string, checkpoint: string): Promise<number> {
    const response = await this.request("POST", `/sessions/${sessionId}/autolabel`, {
      checkpoint,
    });
    return ((await response.json()) as { proposals_added: number }).proposals_added;
  }

  /** Returns the export document exactly as served (no re-encoding). */
  async exportCorpus(
    sessionId: string,
    kind: ExportKind,
    includeProposals = false,
  ): Promise<string> {
    const response = await this.request(
      "GET",
      `/sessions/${sessionId}/export?kind=${kind}&include_proposals=${includeProposals}`,
    );
    return await response.text();
  }
}
