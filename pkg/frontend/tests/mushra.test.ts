import { describe, expect, it } from "vitest";

import { MushraTrialState } from "../src/mushra.js";
import { keywordView, mushraView, RATING_BANDS } from "./fixtures.js";

describe("MushraTrialState", () => {
  it("rejects non-rating trial views", () => {
    expect(() => new MushraTrialState(keywordView() as never)).toThrow(
      /not a rating trial/,
    );
  });

  it("blocks submission until every one of the 7 slots is rated", () => {
    const state = new MushraTrialState(mushraView());
    expect(state.view.slots).toHaveLength(7);
    for (let i = 0; i < 6; i += 1) {
      state.setRating(i, 10 * i);
      expect(state.canSubmit()).toBe(false);
      expect(() => state.payload()).toThrow(/still unrated/);
    }
    state.setRating(6, 95);
    expect(state.canSubmit()).toBe(true);
    expect(state.payload()).toEqual({ ratings: [0, 10, 20, 30, 40, 50, 95] });
  });

  it("reports how many slots are still unrated", () => {
    const state = new MushraTrialState(mushraView());
    state.setRating(0, 50);
    state.setRating(3, 50);
    expect(() => state.payload()).toThrow("5 slot(s) still unrated");
  });

  it("accepts every integer over the full 0-100 range", () => {
    const state = new MushraTrialState(mushraView());
    for (const value of [0, 1, 50, 99, 100]) {
      state.setRating(0, value);
      expect(state.ratingOf(0)).toBe(value);
    }
  });

  it("rejects out-of-scale and non-integer ratings", () => {
    const state = new MushraTrialState(mushraView());
    expect(() => state.setRating(0, -1)).toThrow(RangeError);
    expect(() => state.setRating(0, 101)).toThrow(RangeError);
    expect(() => state.setRating(0, 49.5)).toThrow(RangeError);
    expect(() => state.setRating(7, 50)).toThrow(RangeError);
    expect(() => state.setRating(-1, 50)).toThrow(RangeError);
    expect(state.ratingOf(0)).toBeNull();
  });

  it("labels the five bands with their 20-point gradations", () => {
    const state = new MushraTrialState(mushraView());
    const labels = state.bandLabels();
    expect(labels).toHaveLength(5);
    expect(labels.map((band) => band.label)).toEqual(RATING_BANDS);
    expect(labels.map((band) => band.lo)).toEqual([0, 20, 40, 60, 80]);
    expect(labels.map((band) => band.hi)).toEqual([20, 40, 60, 80, 100]);
  });

  it("maps values to bands with the top edge joining the last band", () => {
    const state = new MushraTrialState(mushraView());
    expect(state.bandFor(0)).toBe("bad");
    expect(state.bandFor(19)).toBe("bad");
    expect(state.bandFor(20)).toBe("poor");
    expect(state.bandFor(40)).toBe("fair");
    expect(state.bandFor(60)).toBe("good");
    expect(state.bandFor(80)).toBe("excellent");
    expect(state.bandFor(99)).toBe("excellent");
    expect(state.bandFor(100)).toBe("excellent");
    expect(() => state.bandFor(-1)).toThrow(RangeError);
    expect(() => state.bandFor(101)).toThrow(RangeError);
  });

  it("starts playback on the reference", () => {
    const state = new MushraTrialState(mushraView());
    expect(state.current).toBe("ref");
  });

  it("switches freely between stimuli, keeping ratings and playhead", () => {
    const state = new MushraTrialState(mushraView());
    state.setRating(2, 42);
    state.playheadSeconds = 3.25;
    state.switchTo("slot4");
    expect(state.current).toBe("slot4");
    state.switchTo("ref");
    state.switchTo("slot0");
    expect(state.ratingOf(2)).toBe(42);
    expect(state.playheadSeconds).toBe(3.25);
  });

  it("rejects switching to a handle the trial does not have", () => {
    const state = new MushraTrialState(mushraView());
    expect(() => state.switchTo("slot7")).toThrow(RangeError);
    expect(() => state.switchTo("anchor")).toThrow(RangeError);
    expect(state.current).toBe("ref");
  });

  it("emits ratings in slot order", () => {
    const state = new MushraTrialState(mushraView());
    const values = [70, 10, 100, 0, 55, 81, 23];
    // Rate in scrambled order; the payload must follow slot order anyway.
    for (const slot of [4, 0, 6, 2, 1, 5, 3]) {
      state.setRating(slot, values[slot]);
    }
    expect(state.payload().ratings).toEqual(values);
  });

  it("allows re-rating a slot before submission", () => {
    const state = new MushraTrialState(mushraView());
    state.setRating(0, 10);
    state.setRating(0, 90);
    expect(state.ratingOf(0)).toBe(90);
  });
});
