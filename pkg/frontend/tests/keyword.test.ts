import { describe, expect, it } from "vitest";

import { KeywordTrialState } from "../src/keyword.js";
import { keywordView } from "./fixtures.js";

function answered(state: KeywordTrialState): KeywordTrialState {
  state.beginPlayback();
  state.setColour("blue");
  state.setDigit("4");
  state.setLetter("k");
  return state;
}

describe("KeywordTrialState", () => {
  it("rejects rating trial views", () => {
    const view = { ...keywordView(), kind: "mushra" };
    expect(() => new KeywordTrialState(view as never)).toThrow(
      /not a keyword trial/,
    );
  });

  it("grants playback exactly once", () => {
    const state = new KeywordTrialState(keywordView());
    expect(state.canPlay).toBe(true);
    expect(state.beginPlayback()).toBe(true);
    expect(state.beginPlayback()).toBe(false);
    expect(state.beginPlayback()).toBe(false);
    expect(state.playbackUsed).toBe(true);
    expect(state.canPlay).toBe(false);
  });

  it("treats a service playback denial as the playback being spent", () => {
    const state = new KeywordTrialState(keywordView());
    state.markDenied();
    expect(state.beginPlayback()).toBe(false);
    expect(state.playbackUsed).toBe(true);
  });

  it("accepts only colours from the closed answer list", () => {
    const state = new KeywordTrialState(keywordView());
    for (const colour of ["blue", "green", "red", "white"]) {
      state.setColour(colour);
    }
    expect(() => state.setColour("purple")).toThrow(RangeError);
    expect(() => state.setColour("Blue")).toThrow(RangeError);
  });

  it("accepts only digits from the closed answer list", () => {
    const state = new KeywordTrialState(keywordView());
    for (let d = 0; d <= 9; d += 1) state.setDigit(String(d));
    expect(() => state.setDigit("10")).toThrow(RangeError);
    expect(() => state.setDigit("four")).toThrow(RangeError);
  });

  it("normalizes the letter and validates it against the alphabet", () => {
    const state = new KeywordTrialState(keywordView());
    state.setLetter("b");
    expect(state.normalizedLetter()).toBe("B");
    expect(state.letterValid()).toBe(true);
    state.setLetter(" a ");
    expect(state.normalizedLetter()).toBe("A");
    expect(state.letterValid()).toBe(true);
  });

  it("rejects letters outside the alphabet", () => {
    const state = new KeywordTrialState(keywordView());
    for (const raw of ["W", "w", "ab", "", " ", "7", "é"]) {
      state.setLetter(raw);
      expect(state.letterValid()).toBe(false);
    }
  });

  it("requires playback plus all three answers before submission", () => {
    const view = keywordView();

    const unplayed = new KeywordTrialState(view);
    unplayed.setColour("red");
    unplayed.setDigit("7");
    unplayed.setLetter("Q");
    expect(unplayed.canSubmit()).toBe(false);
    expect(() => unplayed.payload()).toThrow(/incomplete/);

    const partial = new KeywordTrialState(view);
    partial.beginPlayback();
    partial.setColour("red");
    partial.setDigit("7");
    expect(partial.canSubmit()).toBe(false);

    const complete = answered(new KeywordTrialState(view));
    expect(complete.canSubmit()).toBe(true);
  });

  it("builds the payload with the normalized letter", () => {
    const state = answered(new KeywordTrialState(keywordView()));
    expect(state.payload()).toEqual({ colour: "blue", digit: "4", letter: "K" });
  });

  it("counts a denied playback as played for submission purposes", () => {
    const state = new KeywordTrialState(keywordView());
    state.markDenied();
    state.setColour("green");
    state.setDigit("0");
    state.setLetter("z");
    expect(state.canSubmit()).toBe(true);
  });

  it("exposes the training flag from the view", () => {
    expect(new KeywordTrialState(keywordView("t", "s", true)).training).toBe(
      true,
    );
    expect(new KeywordTrialState(keywordView()).training).toBe(false);
  });
});
