/** Shared builders for trial views matching the service wire format. */

import type {
  KeywordTrialView,
  MushraTrialView,
  StimulusRef,
  VideoPayload,
} from "../src/types.js";

export const RATING_BANDS = ["bad", "poor", "fair", "good", "excellent"];
export const COLOURS = ["blue", "green", "red", "white"];
export const DIGITS = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"];
export const LETTERS = [..."ABCDEFGHIJKLMNOPQRSTUVXYZ"]; // no W

export function stimulusRef(
  sessionId: string,
  trialId: string,
  handle: string,
  withVideo = false,
): StimulusRef {
  const base = `/v1/sessions/${sessionId}/trials/${trialId}/stimuli/${handle}`;
  return {
    handle,
    audio_url: `${base}/audio`,
    video_url: withVideo ? `${base}/video` : null,
  };
}

export function mushraView(
  trialId = "trial-0",
  sessionId = "session-0",
  position = 0,
): MushraTrialView {
  return {
    trial_id: trialId,
    kind: "mushra",
    position,
    n_trials: 16,
    sequence_index: 0,
    reference: stimulusRef(sessionId, trialId, "ref"),
    slots: Array.from({ length: 7 }, (_, i) =>
      stimulusRef(sessionId, trialId, `slot${i}`),
    ),
    rating_scale: {
      min: 0,
      max: 100,
      bands: [...RATING_BANDS],
      band_edges: [0, 20, 40, 60, 80, 100],
    },
    playback_limit: null,
  };
}

export function keywordView(
  trialId = "trial-0",
  sessionId = "session-0",
  training = false,
  position = 0,
): KeywordTrialView {
  return {
    trial_id: trialId,
    kind: training ? "intelligibility_training" : "intelligibility",
    position,
    n_trials: 320,
    sequence_index: 0,
    training,
    stimulus: stimulusRef(sessionId, trialId, "av", true),
    inputs: {
      colours: [...COLOURS],
      digits: [...DIGITS],
      letters: [...LETTERS],
    },
    playback_limit: 1,
  };
}

export function encodeFrame(bytes: Uint8Array): string {
  let binary = "";
  for (const byte of bytes) binary += String.fromCharCode(byte);
  return btoa(binary);
}

export function videoPayload(
  nFrames = 5,
  width = 4,
  height = 3,
  fps = 25,
): VideoPayload {
  const frames: string[] = [];
  for (let f = 0; f < nFrames; f += 1) {
    const bytes = new Uint8Array(width * height);
    for (let i = 0; i < bytes.length; i += 1) bytes[i] = (f * 37 + i) % 256;
    frames.push(encodeFrame(bytes));
  }
  return { fps, width, height, n_frames: nFrames, frames };
}
