import type { RlePayload } from "./rle.js";

export type Polarity = "positive" | "negative";

export interface OpenResponse {
  session_id: string;
  t_f1_ms: number;
  width: number;
  height: number;
}

export interface ClickResponse {
  mask_rle: RlePayload;
  iou_hint: number | null;
  t_f2_ms: number;
}

export interface UndoResponse {
  status: "ok" | "noop";
  mask_rle?: RlePayload;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

/** Typed client for the session service JSON API. */
export class SessionApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (body.detail !== undefined) {
          detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
        }
      } catch {
        // keep the status text when the body is not JSON
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.request(path, init);
    return (await response.json()) as T;
  }

  openSession(imageBase64: string): Promise<OpenResponse> {
    return this.requestJson<OpenResponse>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ image: imageBase64 }),
    });
  }

  addClick(sessionId: string, x: number, y: number, polarity: Polarity): Promise<ClickResponse> {
    return this.requestJson<ClickResponse>(`/sessions/${sessionId}/clicks`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ x, y, polarity }),
    });
  }

  undo(sessionId: string): Promise<UndoResponse> {
    return this.requestJson<UndoResponse>(`/sessions/${sessionId}/undo`, { method: "POST" });
  }

  exportMask(sessionId: string): Promise<RlePayload> {
    return this.requestJson<RlePayload>(`/sessions/${sessionId}/mask?format=rle`);
  }

  async exportPng(sessionId: string): Promise<Blob> {
    const response = await this.request(`/sessions/${sessionId}/mask?format=png`);
    return response.blob();
  }

  async closeSession(sessionId: string): Promise<void> {
    await this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
