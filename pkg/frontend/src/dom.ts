/** Small DOM builders shared by the listening-test screens.
 *
 * Everything here is presentation-only; trial rules live in the state
 * machines so they stay testable without a browser.
 */

import type { BandLabel } from "./mushra.js";

type Attrs = Record<string, string | boolean>;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    if (typeof value === "boolean") {
      if (value) node.setAttribute(name, "");
    } else if (name === "class") {
      node.className = value;
    } else {
      node.setAttribute(name, value);
    }
  }
  node.append(...children);
  return node;
}

export function button(
  label: string,
  onClick: () => void,
  attrs: Attrs = {},
): HTMLButtonElement {
  const node = el("button", { type: "button", ...attrs }, [label]);
  node.addEventListener("click", onClick);
  return node;
}

export function select(
  options: string[],
  onChange: (value: string) => void,
  placeholder: string,
): HTMLSelectElement {
  const node = el("select", {}, [
    el("option", { value: "", disabled: true, selected: true }, [placeholder]),
    ...options.map((option) => el("option", { value: option }, [option])),
  ]);
  node.addEventListener("change", () => onChange(node.value));
  return node;
}

/** A 0-100 slider with a live value readout and band label. */
export function ratingSlider(
  min: number,
  max: number,
  onInput: (value: number) => void,
  describe: (value: number) => string,
): { root: HTMLElement; input: HTMLInputElement } {
  const input = el("input", {
    type: "range",
    min: String(min),
    max: String(max),
    step: "1",
    value: String(min),
  });
  const readout = el("span", { class: "readout" }, ["—"]);
  input.addEventListener("input", () => {
    const value = Number(input.value);
    onInput(value);
    readout.textContent = `${value} (${describe(value)})`;
  });
  const root = el("span", { class: "slider" }, [input, readout]);
  return { root, input };
}

/** The labelled gradations of the rating scale, highest band first. */
export function bandLegend(bands: BandLabel[]): HTMLElement {
  return el(
    "ul",
    { class: "bands" },
    [...bands]
      .reverse()
      .map(({ label, lo, hi }) => el("li", {}, [`${lo}–${hi}: ${label}`])),
  );
}

export function banner(text: string, variant: string): HTMLElement {
  return el("p", { class: `banner ${variant}` }, [text]);
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/** Paint one row-major grey frame onto a canvas. */
export function drawGreyFrame(
  canvas: HTMLCanvasElement,
  frame: Uint8Array,
  width: number,
  height: number,
): void {
  const context = canvas.getContext("2d");
  if (!context) return;
  const image = context.createImageData(width, height);
  for (let i = 0; i < frame.length; i += 1) {
    const grey = frame[i];
    image.data[4 * i] = grey;
    image.data[4 * i + 1] = grey;
    image.data[4 * i + 2] = grey;
    image.data[4 * i + 3] = 255;
  }
  context.putImageData(image, 0, 0);
}
