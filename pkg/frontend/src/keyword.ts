/** State machine for one play-once keyword-report screen.
 *
 * The stimulus may be played exactly once: the second press is inert
 * client-side, and the service independently rejects a second audio fetch
 * with 409 (markDenied records that case, e.g. after a page reload).
 * Colour and digit answers come from closed choice lists; the letter is a
 * single character from the allowed alphabet (W is not in it).
 */

import type { KeywordPayload, KeywordTrialView } from "./types.js";

export class KeywordTrialState {
  readonly view: KeywordTrialView;
  private played = false;
  private denied = false;
  private colour: string | null = null;
  private digit: string | null = null;
  private letterRaw = "";

  constructor(view: KeywordTrialView) {
    if (view.kind === ("mushra" as string)) {
      throw new Error("not a keyword trial");
    }
    this.view = view;
  }

  get training(): boolean {
    return this.view.training;
  }

  /**
   * Claim the single playback. Returns true exactly once; later presses
   * are inert and return false.
   */
  beginPlayback(): boolean {
    if (this.played || this.denied) return false;
    this.played = true;
    return true;
  }

  /** The service refused the audio fetch (budget already spent). */
  markDenied(): void {
    this.denied = true;
  }

  get playbackUsed(): boolean {
    return this.played || this.denied;
  }

  get canPlay(): boolean {
    return !this.playbackUsed;
  }

  setColour(colour: string): void {
    if (!this.view.inputs.colours.includes(colour)) {
      throw new RangeError(
        `colour ${colour} is not one of ${this.view.inputs.colours.join(", ")}`,
      );
    }
    this.colour = colour;
  }

  setDigit(digit: string): void {
    if (!this.view.inputs.digits.includes(digit)) {
      throw new RangeError(`digit ${digit} is not in the answer list`);
    }
    this.digit = digit;
  }

  /** Free-text letter field; kept raw so the widget can echo it back. */
  setLetter(raw: string): void {
    this.letterRaw = raw;
  }

  normalizedLetter(): string {
    return this.letterRaw.trim().toUpperCase();
  }

  letterValid(): boolean {
    const letter = this.normalizedLetter();
    return letter.length === 1 && this.view.inputs.letters.includes(letter);
  }

  /** All three answers set and the stimulus has been played. */
  canSubmit(): boolean {
    return (
      this.playbackUsed &&
      this.colour !== null &&
      this.digit !== null &&
      this.letterValid()
    );
  }

  payload(): KeywordPayload {
    if (!this.canSubmit()) {
      throw new Error("cannot submit an incomplete keyword response");
    }
    return {
      colour: this.colour as string,
      digit: this.digit as string,
      letter: this.normalizedLetter(),
    };
  }
}
