/** Browser entry point: start screen, trial loop, completion screen.
 *
 * The service base URL comes from the "api" query parameter and defaults
 * to the page origin, so the bundle can be served by the listening-test
 * service itself or pointed at a remote one (the service allows
 * cross-origin requests).
 */

import { ApiClient, PlaybackDeniedError } from "./api.js";
import {
  bandLegend,
  banner,
  button,
  clear,
  drawGreyFrame,
  el,
  ratingSlider,
  select,
} from "./dom.js";
import { KeywordTrialState } from "./keyword.js";
import { MushraTrialState } from "./mushra.js";
import { FramePlayer } from "./player.js";
import { SessionFlow, TRAINING_BANNER, isTrainingTrial } from "./session.js";
import { SubmissionQueuedError } from "./submit.js";
import type {
  KeywordTrialView,
  MushraTrialView,
  ResponsePayload,
  SessionKind,
  TrialView,
} from "./types.js";

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.location.origin;
}

class App {
  private readonly client: ApiClient;
  private readonly flow: SessionFlow;
  private readonly audio = new Audio();
  private objectUrl: string | null = null;

  constructor(private readonly root: HTMLElement) {
    this.client = new ApiClient(apiBase());
    this.flow = new SessionFlow(this.client);
  }

  start(): void {
    this.showStartScreen();
  }

  private show(...children: (Node | string)[]): void {
    this.audio.pause();
    clear(this.root);
    this.root.append(...children);
  }

  private playBytes(bytes: ArrayBuffer, startAt = 0): void {
    if (this.objectUrl !== null) URL.revokeObjectURL(this.objectUrl);
    this.objectUrl = URL.createObjectURL(
      new Blob([bytes], { type: "audio/wav" }),
    );
    this.audio.src = this.objectUrl;
    this.audio.currentTime = startAt;
    this.audio.volume = this.flow.volume.value;
    void this.audio.play();
  }

  private showStartScreen(): void {
    let kind: SessionKind = "mushra";
    let seed = 1;
    let subject = "anonymous";
    const seedInput = el("input", { type: "number", value: "1" });
    seedInput.addEventListener("input", () => {
      seed = Number(seedInput.value) | 0;
    });
    const subjectInput = el("input", { type: "text", value: "anonymous" });
    subjectInput.addEventListener("input", () => {
      subject = subjectInput.value || "anonymous";
    });
    this.show(
      el("h1", {}, ["Listening test"]),
      el("p", {}, [`Service: ${apiBase()}`]),
      el("label", {}, [
        "Protocol ",
        select(
          ["mushra", "intelligibility", "intelligibility_training"],
          (value) => {
            kind = value as SessionKind;
          },
          "choose a protocol",
        ),
      ]),
      el("label", {}, ["Seed ", seedInput]),
      el("label", {}, ["Subject ", subjectInput]),
      button("Begin", () => {
        void this.runSession(kind, seed, subject);
      }),
    );
  }

  private async runSession(
    kind: SessionKind,
    seed: number,
    subject: string,
  ): Promise<void> {
    try {
      await this.flow.start(kind, seed, subject);
      await this.advance();
    } catch (error) {
      this.showError(error);
    }
  }

  private async advance(): Promise<void> {
    const step = await this.flow.next();
    if (step.complete || step.trial === null) {
      this.showComplete();
      return;
    }
    this.showTrial(step.trial);
  }

  private showTrial(view: TrialView): void {
    if (view.kind === "mushra") {
      this.showMushraTrial(view);
    } else {
      this.showKeywordTrial(view);
    }
  }

  private progress(view: TrialView): HTMLElement {
    return el("p", { class: "progress" }, [
      `Trial ${view.position + 1} of ${view.n_trials}`,
    ]);
  }

  private showMushraTrial(view: MushraTrialView): void {
    const state = new MushraTrialState(view);
    const status = el("p", { class: "status" }, [""]);
    const submit = button(
      "Submit ratings",
      () => {
        void this.submitTrial(view, state.payload());
      },
      { disabled: true },
    );
    const refresh = () => {
      submit.disabled = !state.canSubmit();
    };

    const playHandle = async (handle: string) => {
      state.switchTo(handle);
      state.playheadSeconds = this.audio.currentTime || 0;
      const stimulus =
        handle === view.reference.handle
          ? view.reference
          : view.slots.find((slot) => slot.handle === handle);
      if (!stimulus) return;
      const bytes = await this.client.fetchAudio(stimulus.audio_url);
      this.playBytes(bytes, state.playheadSeconds);
      status.textContent = `Playing ${handle}`;
    };

    const rows = view.slots.map((slot, index) => {
      const slider = ratingSlider(
        state.scale.min,
        state.scale.max,
        (value) => {
          state.setRating(index, value);
          refresh();
        },
        (value) => state.bandFor(value),
      );
      return el("div", { class: "slot" }, [
        button(`Play ${String.fromCharCode(65 + index)}`, () => {
          void playHandle(slot.handle);
        }),
        slider.root,
      ]);
    });

    this.show(
      el("h1", {}, ["Rate each version against the reference"]),
      this.progress(view),
      button("Play reference", () => {
        void playHandle(view.reference.handle);
      }),
      bandLegend(state.bandLabels()),
      el("div", { class: "slots" }, rows),
      submit,
      status,
    );
  }

  private showKeywordTrial(view: KeywordTrialView): void {
    const state = new KeywordTrialState(view);
    const status = el("p", { class: "status" }, [""]);
    const canvas = el("canvas", {
      width: "96",
      height: "96",
      class: "lips",
    });
    const submit = button(
      "Submit answer",
      () => {
        void this.submitTrial(view, state.payload());
      },
      { disabled: true },
    );
    const refresh = () => {
      submit.disabled = !state.canSubmit();
    };

    const play = button("Play (once)", () => {
      void (async () => {
        if (!state.beginPlayback()) return;
        play.disabled = true;
        refresh();
        try {
          const bytes = await this.client.fetchAudio(view.stimulus.audio_url);
          this.playBytes(bytes);
          if (view.stimulus.video_url !== null) {
            const video = await this.client.fetchVideo(view.stimulus.video_url);
            canvas.width = video.width;
            canvas.height = video.height;
            const player = new FramePlayer(
              video,
              (frame) => drawGreyFrame(canvas, frame, video.width, video.height),
              () => this.audio.currentTime,
            );
            const loop = () => {
              player.tick();
              if (!this.audio.ended && !this.audio.paused) {
                window.requestAnimationFrame(loop);
              }
            };
            window.requestAnimationFrame(loop);
          }
        } catch (error) {
          if (error instanceof PlaybackDeniedError) {
            state.markDenied();
            status.textContent =
              "This stimulus was already played; answer from what you heard.";
            refresh();
            return;
          }
          throw error;
        }
      })();
    });

    const letterInput = el("input", { type: "text", maxlength: "1" });
    letterInput.addEventListener("input", () => {
      state.setLetter(letterInput.value);
      refresh();
    });

    const volume = el("input", {
      type: "range",
      min: "0",
      max: "1",
      step: "0.05",
      value: String(this.flow.volume.value),
    });
    volume.disabled = this.flow.volume.isLocked;
    volume.addEventListener("input", () => {
      if (this.flow.volume.set(Number(volume.value))) {
        this.audio.volume = this.flow.volume.value;
      } else {
        volume.value = String(this.flow.volume.value);
      }
    });

    this.show(
      el("h1", {}, ["Report the colour, digit and letter you hear"]),
      this.progress(view),
      ...(isTrainingTrial(view) ? [banner(TRAINING_BANNER, "training")] : []),
      el("div", { class: "stage" }, [canvas, play]),
      el("label", {}, [
        "Volume ",
        volume,
        this.flow.volume.isLocked ? " (locked)" : "",
      ]),
      el("label", {}, [
        "Colour ",
        select(
          view.inputs.colours,
          (value) => {
            state.setColour(value);
            refresh();
          },
          "colour",
        ),
      ]),
      el("label", {}, [
        "Digit ",
        select(
          view.inputs.digits,
          (value) => {
            state.setDigit(value);
            refresh();
          },
          "digit",
        ),
      ]),
      el("label", {}, ["Letter ", letterInput]),
      submit,
      status,
    );
  }

  private async submitTrial(
    view: TrialView,
    payload: ResponsePayload,
  ): Promise<void> {
    try {
      await this.flow.submit(view.trial_id, payload);
    } catch (error) {
      if (error instanceof SubmissionQueuedError) {
        this.showRetryScreen(view, error.pending.trialId);
        return;
      }
      this.showError(error);
      return;
    }
    await this.advance();
  }

  private showRetryScreen(view: TrialView, trialId: string): void {
    this.show(
      el("h1", {}, ["Connection lost"]),
      banner(
        `Your answer for trial ${view.position + 1} is saved locally ` +
          `(${trialId}); nothing needs to be re-entered.`,
        "warning",
      ),
      button("Retry sending", () => {
        void (async () => {
          try {
            await this.flow.retryPending();
            await this.advance();
          } catch {
            this.showRetryScreen(view, trialId);
          }
        })();
      }),
    );
  }

  private showComplete(): void {
    this.show(
      el("h1", {}, ["Session complete"]),
      el("p", {}, ["All trials are answered and stored. Thank you!"]),
      button("Start another session", () => {
        this.showStartScreen();
      }),
    );
  }

  private showError(error: unknown): void {
    const detail = error instanceof Error ? error.message : String(error);
    this.show(
      el("h1", {}, ["Something went wrong"]),
      el("pre", {}, [detail]),
      button("Back to start", () => {
        this.showStartScreen();
      }),
    );
  }
}

const root = document.getElementById("app");
if (root) new App(root).start();
