// Thin fetch client for the edit service. No latent math happens here or
// anywhere else in the client; the service is the only party touching codes.

import type {
  CheckpointInfo,
  EditOp,
  EditResponse,
  EditTarget,
  SessionResponse,
  StreamResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`service error ${status}: ${detail}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return response.json() as Promise<T>;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async createSession(seed?: number): Promise<SessionResponse> {
    const body = seed === undefined ? {} : { seed };
    const r = await fetch(this.url("/session"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson<SessionResponse>(r);
  }

  async edit(
    sessionId: string,
    target: EditTarget,
    op: EditOp,
    args: Record<string, unknown> = {},
  ): Promise<EditResponse> {
    const r = await fetch(this.url(`/session/${sessionId}/edit`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ target, op, args }),
    });
    return asJson<EditResponse>(r);
  }

  async interpolateStream(
    sessionId: string,
    target: EditTarget,
    other: { other_seed?: number },
    steps: number,
  ): Promise<StreamResponse> {
    const r = await fetch(this.url(`/session/${sessionId}/interpolate-stream`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ target, other, steps }),
    });
    return asJson<StreamResponse>(r);
  }

  async undo(sessionId: string): Promise<EditResponse> {
    const r = await fetch(this.url(`/session/${sessionId}/undo`));
    return asJson<EditResponse>(r);
  }

  async info(): Promise<CheckpointInfo> {
    const r = await fetch(this.url("/checkpoint/info"));
    return asJson<CheckpointInfo>(r);
  }
}
