// Thin typed client over fetch. All model math stays on the server.

import type {
  EditRequest,
  EditResponse,
  HealthResponse,
  InterpolateRequest,
  InterpolateResponse,
} from "./apiTypes.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

async function readDetail(response: Response): Promise<string> {
  try {
    const body: unknown = await response.json();
    if (body && typeof body === "object" && "detail" in body) {
      const detail = (body as { detail: unknown }).detail;
      if (typeof detail === "string") return detail;
    }
  } catch {
    // fall through to the generic message
  }
  return `service error (HTTP ${response.status})`;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async post<T>(path: string, payload: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      });
    } catch (err) {
      throw new ApiError(0, `cannot reach the service: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    try {
      return (await response.json()) as T;
    } catch {
      throw new ApiError(response.status, "service returned malformed JSON");
    }
  }

  async edit(request: EditRequest): Promise<EditResponse> {
    const body = await this.post<EditResponse>("/edit", request);
    if (typeof body.image !== "string" || typeof body.edit_id !== "string") {
      throw new ApiError(200, "service response is missing image or edit_id");
    }
    return body;
  }

  async interpolate(request: InterpolateRequest): Promise<InterpolateResponse> {
    const body = await this.post<InterpolateResponse>("/interpolate", request);
    if (typeof body.image !== "string") {
      throw new ApiError(200, "service response is missing the image");
    }
    return body;
  }

  async health(): Promise<HealthResponse> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/health`);
    } catch (err) {
      throw new ApiError(0, `cannot reach the service: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as HealthResponse;
  }
}
