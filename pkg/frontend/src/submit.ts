/** Submission with idempotency tokens and an offline retry buffer.
 *
 * Each trial submission mints one token that is reused verbatim on every
 * retry, so a response that reached the service before the network failed
 * is replayed, not duplicated. Failed submissions stay in the buffer until
 * flush() gets them through; the buffer is the only client-side storage of
 * response data.
 */

import type { ResponsePayload, SubmitAck } from "./types.js";

export type PostFn = (
  trialId: string,
  payload: ResponsePayload,
  token: string,
) => Promise<SubmitAck>;

export interface PendingSubmission {
  trialId: string;
  payload: ResponsePayload;
  token: string;
  attempts: number;
}

function defaultToken(): string {
  const cryptoApi = (globalThis as { crypto?: { randomUUID?: () => string } })
    .crypto;
  if (cryptoApi?.randomUUID) return cryptoApi.randomUUID();
  return `t-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

/** Thrown when a submission is parked in the retry buffer. */
export class SubmissionQueuedError extends Error {
  constructor(readonly pending: PendingSubmission) {
    super(
      `submission for trial ${pending.trialId} queued after a network failure`,
    );
    this.name = "SubmissionQueuedError";
  }
}

export class SubmissionQueue {
  private readonly buffer = new Map<string, PendingSubmission>();

  constructor(
    private readonly post: PostFn,
    private readonly makeToken: () => string = defaultToken,
  ) {}

  pending(): PendingSubmission[] {
    return [...this.buffer.values()];
  }

  /**
   * Submit one trial's payload. A service error (4xx/5xx) propagates to the
   * caller; a transport failure parks the submission and raises
   * SubmissionQueuedError so the view can show "will retry".
   */
  async submit(trialId: string, payload: ResponsePayload): Promise<SubmitAck> {
    const existing = this.buffer.get(trialId);
    const entry: PendingSubmission = existing ?? {
      trialId,
      payload,
      token: this.makeToken(),
      attempts: 0,
    };
    this.buffer.set(trialId, entry);
    return this.attempt(entry);
  }

  /** Retry everything in the buffer, oldest first. */
  async flush(): Promise<SubmitAck[]> {
    const acks: SubmitAck[] = [];
    for (const entry of this.pending()) {
      acks.push(await this.attempt(entry));
    }
    return acks;
  }

  private async attempt(entry: PendingSubmission): Promise<SubmitAck> {
    entry.attempts += 1;
    let ack: SubmitAck;
    try {
      ack = await this.post(entry.trialId, entry.payload, entry.token);
    } catch (error) {
      if (isTransportFailure(error)) {
        throw new SubmissionQueuedError(entry);
      }
      this.buffer.delete(entry.trialId); // the service judged it; don't loop
      throw error;
    }
    this.buffer.delete(entry.trialId);
    return ack;
  }
}

/** Transport failures have no HTTP status; service verdicts do. */
function isTransportFailure(error: unknown): boolean {
  return !(
    typeof error === "object" &&
    error !== null &&
    "status" in error &&
    typeof (error as { status: unknown }).status === "number"
  );
}
