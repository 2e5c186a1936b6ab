/** Wire types for the listening-test service JSON API (prefix /v1). */

export type SessionKind =
  | "mushra"
  | "intelligibility"
  | "intelligibility_training";

/** One playable stimulus, addressed only by an opaque handle. */
export interface StimulusRef {
  handle: string;
  audio_url: string;
  video_url: string | null;
}

export interface RatingScale {
  min: number;
  max: number;
  bands: string[];
  /** Band boundaries including both ends, e.g. [0, 20, 40, 60, 80, 100]. */
  band_edges: number[];
}

interface TrialCommon {
  trial_id: string;
  kind: SessionKind;
  position: number;
  n_trials: number;
  sequence_index: number;
}

/** Multi-stimulus rating screen: a visible reference plus blinded slots. */
export interface MushraTrialView extends TrialCommon {
  kind: "mushra";
  reference: StimulusRef;
  slots: StimulusRef[];
  rating_scale: RatingScale;
  playback_limit: null;
}

/** Play-once keyword screen with closed answer vocabularies. */
export interface KeywordTrialView extends TrialCommon {
  kind: "intelligibility" | "intelligibility_training";
  training: boolean;
  stimulus: StimulusRef;
  inputs: { colours: string[]; digits: string[]; letters: string[] };
  playback_limit: number;
}

export type TrialView = MushraTrialView | KeywordTrialView;

export interface SessionSummary {
  session_id: string;
  kind: SessionKind;
  subject: string;
  seed: number;
  n_trials: number;
  n_answered: number;
  complete: boolean;
  next_trial_id: string | null;
}

export interface NextTrial {
  complete: boolean;
  trial: TrialView | null;
}

export interface SubmitAck {
  stored: boolean;
  replayed: boolean;
  trial_id: string;
  timestamp: number;
  n_answered: number;
  complete: boolean;
}

export interface VideoPayload {
  fps: number;
  width: number;
  height: number;
  n_frames: number;
  /** Base64 of row-major uint8 grey values, one entry per frame. */
  frames: string[];
}

export interface MushraPayload {
  ratings: number[];
}

export interface KeywordPayload {
  colour: string;
  digit: string;
  letter: string;
}

export type ResponsePayload = MushraPayload | KeywordPayload;
