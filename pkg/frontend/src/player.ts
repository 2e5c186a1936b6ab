/** Audio-clocked frame playback.
 *
 * Video frames are drawn by sampling the audio clock: the frame shown at
 * audio time t is floor(t * fps), so whenever a draw happens the displayed
 * frame's interval contains the current audio time. At the service's frame
 * rates (>= 25 fps) one frame spans at most SYNC_TOLERANCE_MS, which is the
 * declared audio/video sync tolerance.
 */

import type { VideoPayload } from "./types.js";

export const SYNC_TOLERANCE_MS = 40;

export function frameIndexAt(
  audioSeconds: number,
  fps: number,
  nFrames: number,
): number {
  if (fps <= 0) throw new RangeError(`fps must be positive, got ${fps}`);
  if (nFrames < 1) throw new RangeError("no frames to play");
  const index = Math.floor(Math.max(audioSeconds, 0) * fps);
  return Math.min(index, nFrames - 1);
}

/**
 * How far the shown frame's interval is from the audio clock, in ms
 * (0 while the clock sits inside the frame's own interval).
 */
export function syncErrorMs(
  audioSeconds: number,
  frameIndex: number,
  fps: number,
): number {
  const start = frameIndex / fps;
  const end = (frameIndex + 1) / fps;
  if (audioSeconds >= start && audioSeconds < end) return 0;
  return 1000 * Math.min(Math.abs(audioSeconds - start), Math.abs(audioSeconds - end));
}

/** Decode one base64 frame into row-major grey bytes. */
export function decodeFrame(
  b64: string,
  width: number,
  height: number,
): Uint8Array {
  const binary = atob(b64);
  if (binary.length !== width * height) {
    throw new Error(
      `frame holds ${binary.length} bytes, expected ${width * height}`,
    );
  }
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i += 1) bytes[i] = binary.charCodeAt(i);
  return bytes;
}

export class FramePlayer {
  private readonly frames: Uint8Array[];
  private lastDrawn = -1;

  constructor(
    readonly video: VideoPayload,
    private readonly draw: (frame: Uint8Array, index: number) => void,
    private readonly audioClockSeconds: () => number,
  ) {
    this.frames = video.frames.map((b64) =>
      decodeFrame(b64, video.width, video.height),
    );
  }

  /** Draw the frame for the current audio time; returns its index. */
  tick(): number {
    const index = frameIndexAt(
      this.audioClockSeconds(),
      this.video.fps,
      this.video.n_frames,
    );
    if (index !== this.lastDrawn) {
      this.draw(this.frames[index], index);
      this.lastDrawn = index;
    }
    return index;
  }

  /** Sync error of the currently drawn frame against the audio clock. */
  currentSyncErrorMs(): number {
    if (this.lastDrawn < 0) return 0;
    return syncErrorMs(this.audioClockSeconds(), this.lastDrawn, this.video.fps);
  }
}
