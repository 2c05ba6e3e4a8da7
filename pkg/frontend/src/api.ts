/**
 * Thin fetch wrapper over the review service API.
 */

import type {
  CloudsPayload,
  ReportFilter,
  ReportPage,
  Summary,
  Verdict,
} from "./types";

/** Error carrying the server's status code and error code. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = "HttpError";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") {
      code = body.error;
      message = typeof body.message === "string" ? body.message : message;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as T;
  }

  report(filter: ReportFilter, offset: number, limit: number): Promise<ReportPage> {
    const query = new URLSearchParams({
      filter,
      offset: String(offset),
      limit: String(limit),
    });
    return this.getJson<ReportPage>(`/api/report?${query}`);
  }

  summary(): Promise<Summary> {
    return this.getJson<Summary>("/api/summary");
  }

  clouds(): Promise<CloudsPayload> {
    return this.getJson<CloudsPayload>("/api/clouds");
  }

  /** POST one verdict; resolves to the server's post-decision summary. */
  async decide(imageId: string, verdict: Verdict, note?: string): Promise<Summary> {
    const payload: Record<string, string> = { image_id: imageId, verdict };
    if (note !== undefined) {
      payload.note = note;
    }
    const response = await fetch(this.baseUrl + "/api/decision", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) {
      throw await toApiError(response);
    }
    const body = (await response.json()) as { summary: Summary };
    return body.summary;
  }

  imageUrl(imageId: string): string {
    return `${this.baseUrl}/api/image/${encodeURIComponent(imageId)}`;
  }
}
