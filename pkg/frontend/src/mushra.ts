/** State machine for one multi-stimulus rating screen.
 *
 * Subjects may switch freely between the reference and the blinded slots
 * (switching keeps the shared playhead, so the trial never restarts), move
 * each slider over the full 0-100 range, and submit only once every slot
 * has been rated. The payload lists ratings in slot order, matching the
 * order the service sent.
 */

import type { MushraPayload, MushraTrialView } from "./types.js";

export interface BandLabel {
  label: string;
  lo: number;
  hi: number;
}

export class MushraTrialState {
  readonly view: MushraTrialView;
  /** One entry per slot; null until the subject moves that slider. */
  private readonly ratings: (number | null)[];
  /** Handle of the stimulus currently selected for playback. */
  current: string;
  /** Shared playback position in seconds, preserved across switches. */
  playheadSeconds = 0;

  constructor(view: MushraTrialView) {
    if (view.kind !== "mushra") {
      throw new Error(`not a rating trial: ${view.kind}`);
    }
    this.view = view;
    this.ratings = view.slots.map(() => null);
    this.current = view.reference.handle;
  }

  get scale() {
    return this.view.rating_scale;
  }

  /** The five labelled intervals of the rating scale. */
  bandLabels(): BandLabel[] {
    const edges = this.scale.band_edges;
    return this.scale.bands.map((label, i) => ({
      label,
      lo: edges[i],
      hi: edges[i + 1],
    }));
  }

  /** Which band a slider value falls in (upper edge joins the last band). */
  bandFor(value: number): string {
    const edges = this.scale.band_edges;
    for (let i = 0; i < this.scale.bands.length; i += 1) {
      if (value >= edges[i] && value < edges[i + 1]) return this.scale.bands[i];
    }
    if (value === edges[edges.length - 1]) {
      return this.scale.bands[this.scale.bands.length - 1];
    }
    throw new RangeError(`value ${value} is outside the rating scale`);
  }

  setRating(slotIndex: number, value: number): void {
    if (slotIndex < 0 || slotIndex >= this.ratings.length) {
      throw new RangeError(`no slot ${slotIndex}`);
    }
    if (!Number.isInteger(value)) {
      throw new RangeError(`rating must be an integer, got ${value}`);
    }
    if (value < this.scale.min || value > this.scale.max) {
      throw new RangeError(
        `rating ${value} is outside ${this.scale.min}-${this.scale.max}`,
      );
    }
    this.ratings[slotIndex] = value;
  }

  ratingOf(slotIndex: number): number | null {
    return this.ratings[slotIndex];
  }

  /** Switch playback to another handle; ratings and playhead carry over. */
  switchTo(handle: string): void {
    const known = [
      this.view.reference.handle,
      ...this.view.slots.map((slot) => slot.handle),
    ];
    if (!known.includes(handle)) {
      throw new RangeError(`trial has no stimulus handle ${handle}`);
    }
    this.current = handle;
  }

  allRated(): boolean {
    return this.ratings.every((value) => value !== null);
  }

  canSubmit(): boolean {
    return this.allRated();
  }

  /** Build the submission; partial payloads are never produced. */
  payload(): MushraPayload {
    if (!this.allRated()) {
      const missing = this.ratings.filter((value) => value === null).length;
      throw new Error(`cannot submit: ${missing} slot(s) still unrated`);
    }
    return { ratings: this.ratings.map((value) => value as number) };
  }
}
