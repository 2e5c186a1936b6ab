/** Session orchestration: walk the trial sequence the service hands out.
 *
 * The flow owns no protocol knowledge beyond the wire contract — the service
 * decides ordering, blinding, and when the session is complete. Volume is a
 * client-side concern: it may be adjusted during intelligibility training
 * trials and is locked for the rest of the session so every scored stimulus
 * is heard at the same level.
 */

import type { ApiClient } from "./api.js";
import { SubmissionQueue } from "./submit.js";
import type {
  ResponsePayload,
  SessionKind,
  SubmitAck,
  TrialView,
} from "./types.js";

export const TRAINING_BANNER =
  "Training trial — set a comfortable volume now; it will be locked for the scored trials.";

export class VolumeControl {
  private level: number;
  private locked = false;

  constructor(initial = 0.8) {
    this.level = clamp01(initial);
  }

  get value(): number {
    return this.level;
  }

  get isLocked(): boolean {
    return this.locked;
  }

  /** Returns false (and keeps the old level) once the control is locked. */
  set(level: number): boolean {
    if (this.locked) return false;
    this.level = clamp01(level);
    return true;
  }

  lock(): void {
    this.locked = true;
  }
}

function clamp01(x: number): number {
  if (!Number.isFinite(x)) throw new RangeError(`volume must be finite: ${x}`);
  return Math.min(1, Math.max(0, x));
}

export function isTrainingTrial(view: TrialView): boolean {
  return view.kind === "intelligibility_training";
}

export interface FlowStep {
  complete: boolean;
  trial: TrialView | null;
}

export class SessionFlow {
  readonly queue: SubmissionQueue;
  readonly volume = new VolumeControl();
  private sessionId: string | null = null;
  private trialsSeen = 0;

  constructor(private readonly api: ApiClient) {
    this.queue = new SubmissionQueue((trialId, payload, token) => {
      if (this.sessionId === null) {
        throw new Error("no active session");
      }
      return this.api.submit(this.sessionId, trialId, payload, token);
    });
  }

  get id(): string {
    if (this.sessionId === null) throw new Error("no active session");
    return this.sessionId;
  }

  get trialsStarted(): number {
    return this.trialsSeen;
  }

  async start(kind: SessionKind, seed: number, subject: string): Promise<string> {
    const summary = await this.api.createSession(kind, seed, subject);
    this.sessionId = summary.session_id;
    this.trialsSeen = 0;
    return summary.session_id;
  }

  /** Fetch the next trial; locks the volume on the first non-training trial. */
  async next(): Promise<FlowStep> {
    const step = await this.api.nextTrial(this.id);
    if (step.trial !== null) {
      this.trialsSeen += 1;
      if (!isTrainingTrial(step.trial) && !this.volume.isLocked) {
        this.volume.lock();
      }
    }
    return step;
  }

  async submit(trialId: string, payload: ResponsePayload): Promise<SubmitAck> {
    if (this.sessionId === null) {
      // Programmer error, not a transport failure: never enters the queue.
      throw new Error("no active session");
    }
    return this.queue.submit(trialId, payload);
  }

  async retryPending(): Promise<SubmitAck[]> {
    return this.queue.flush();
  }
}
