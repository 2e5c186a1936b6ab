/** Typed HTTP client for the listening-test service.
 *
 * All persistence lives behind the service; this client holds no response
 * state of its own. The fetch implementation is injectable so the test
 * suite can drive the client against a scripted service.
 */

import type {
  NextTrial,
  ResponsePayload,
  SessionKind,
  SessionSummary,
  SubmitAck,
  TrialView,
  VideoPayload,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  status: number;
  ok: boolean;
  json(): Promise<unknown>;
  text(): Promise<string>;
  arrayBuffer(): Promise<ArrayBuffer>;
}>;

/** Service answered with an error status. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(`service returned ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** The playback budget for a stimulus is exhausted (HTTP 409). */
export class PlaybackDeniedError extends ApiError {
  constructor(detail: string) {
    super(409, detail);
    this.name = "PlaybackDeniedError";
  }
}

async function errorDetail(response: {
  json(): Promise<unknown>;
  text(): Promise<string>;
}): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (body && typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return "(no detail)";
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    const impl = fetchImpl ?? (globalThis.fetch as unknown as FetchLike);
    if (!impl) throw new Error("no fetch implementation available");
    this.fetchImpl = impl;
  }

  /** Absolute form of a service-relative URL such as a stimulus audio_url. */
  resolve(path: string): string {
    if (/^https?:/.test(path)) return path;
    return this.base + (path.startsWith("/") ? path : `/${path}`);
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<unknown> {
    const response = await this.fetchImpl(this.resolve(path), {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response.json();
  }

  async createSession(
    kind: SessionKind,
    seed: number,
    subject = "anonymous",
  ): Promise<SessionSummary> {
    return (await this.request("POST", "/v1/sessions", {
      kind,
      seed,
      subject,
    })) as SessionSummary;
  }

  async session(sessionId: string): Promise<SessionSummary> {
    return (await this.request(
      "GET",
      `/v1/sessions/${sessionId}`,
    )) as SessionSummary;
  }

  async nextTrial(sessionId: string): Promise<NextTrial> {
    return (await this.request(
      "GET",
      `/v1/sessions/${sessionId}/trials/next`,
    )) as NextTrial;
  }

  async trial(sessionId: string, trialId: string): Promise<TrialView> {
    return (await this.request(
      "GET",
      `/v1/sessions/${sessionId}/trials/${trialId}`,
    )) as TrialView;
  }

  /**
   * Fetch stimulus audio bytes. A 409 means the playback budget is spent
   * and is raised as PlaybackDeniedError so views can lock themselves.
   */
  async fetchAudio(audioUrl: string): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(this.resolve(audioUrl), {
      method: "GET",
    });
    if (response.status === 409) {
      throw new PlaybackDeniedError(await errorDetail(response));
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response.arrayBuffer();
  }

  async fetchVideo(videoUrl: string): Promise<VideoPayload> {
    return (await this.request("GET", videoUrl)) as VideoPayload;
  }

  async submit(
    sessionId: string,
    trialId: string,
    payload: ResponsePayload,
    token: string,
  ): Promise<SubmitAck> {
    return (await this.request("POST", `/v1/sessions/${sessionId}/responses`, {
      trial_id: trialId,
      payload,
      token,
    })) as SubmitAck;
  }

  /** The stored session record: one object per line of the export. */
  async exportRecords(sessionId: string): Promise<Record<string, unknown>[]> {
    const response = await this.fetchImpl(
      this.resolve(`/v1/sessions/${sessionId}/export`),
      { method: "GET" },
    );
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    const text = await response.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as Record<string, unknown>);
  }
}
