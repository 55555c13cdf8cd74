/** DOM rendering for the three vault interfaces.
 *
 * Level 1: digit pad with the pattern's colors plus two answer buttons.
 * Level 4: identical pad with no color information, unlabeled buttons.
 * Level 5: digit pad display plus a full-size click canvas.
 * Weight bars appear only when the view carries a weights vector.
 */

import { ClientStateView, SignalPayload } from "./types";

export const WIRE_DECIMALS = 6;

/** Normalize a click inside a rect to [0,1]^2, resolution-independent. */
export function normalizeClick(
  x: number,
  y: number,
  width: number,
  height: number
): [number, number] {
  if (width <= 0 || height <= 0) {
    throw new Error("canvas has no extent");
  }
  return [x / width, y / height];
}

export function buttonPayload(index: 0 | 1): SignalPayload {
  return { button: index };
}

export function clickPayload(
  x: number,
  y: number,
  width: number,
  height: number
): SignalPayload {
  return { point: normalizeClick(x, y, width, height) };
}

function el(
  doc: Document,
  tag: string,
  className: string,
  text = ""
): HTMLElement {
  const node = doc.createElement(tag);
  node.className = className;
  if (text) node.textContent = text;
  return node;
}

function renderPad(doc: Document, view: ClientStateView): HTMLElement {
  const pad = el(doc, "div", "digit-pad");
  const pattern = view.pattern;
  for (let digit = 0; digit < 10; digit++) {
    const key = el(doc, "div", "digit-key", String(digit));
    key.dataset.digit = String(digit);
    if (pattern && pattern.colors) {
      const group = pattern.A.includes(digit) ? "A" : "B";
      key.dataset.color = pattern.colors[group];
      key.classList.add(`color-${pattern.colors[group]}`);
    }
    pad.appendChild(key);
  }
  return pad;
}

function renderAnswerButtons(
  doc: Document,
  view: ClientStateView,
  onSignal: (p: SignalPayload) => void
): HTMLElement {
  const row = el(doc, "div", "answer-row");
  for (const index of [0, 1] as const) {
    const labelled = view.level === 1;
    const btn = el(
      doc,
      "button",
      "answer-button",
      labelled ? (view.pattern?.colors?.[index === 0 ? "A" : "B"] ?? "") : ""
    );
    btn.dataset.index = String(index);
    btn.addEventListener("click", () => onSignal(buttonPayload(index)));
    row.appendChild(btn);
  }
  return row;
}

function renderCanvas(
  doc: Document,
  onSignal: (p: SignalPayload) => void
): HTMLElement {
  const canvas = el(doc, "div", "click-canvas");
  canvas.addEventListener("click", (ev) => {
    const rect = (canvas as HTMLElement).getBoundingClientRect();
    const mouse = ev as MouseEvent;
    onSignal(
      clickPayload(
        mouse.clientX - rect.left,
        mouse.clientY - rect.top,
        rect.width,
        rect.height
      )
    );
  });
  return canvas;
}

export function renderWeights(doc: Document, weights: number[]): HTMLElement {
  const chart = el(doc, "div", "weights-chart");
  for (let digit = 0; digit < weights.length; digit++) {
    const bar = el(doc, "div", "weight-bar");
    bar.dataset.digit = String(digit);
    bar.dataset.weight = weights[digit].toFixed(WIRE_DECIMALS);
    bar.style.height = `${weights[digit] * 100}%`;
    chart.appendChild(bar);
  }
  return chart;
}

function renderStatusScreen(doc: Document, view: ClientStateView): HTMLElement {
  if (view.status === "Opened") {
    return el(doc, "div", "vault-open-screen", "The vault is open!");
  }
  return el(doc, "div", "vault-failed-screen", "Wrong code — the vault stays shut.");
}

/**
 * Render one view into `root`.  Signals produced by user interaction are
 * passed to `onSignal`; after a terminal view no interactive elements
 * are rendered at all, so no payload can be produced.
 */
export function renderLevel(
  root: HTMLElement,
  view: ClientStateView,
  onSignal: (p: SignalPayload) => void
): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  if (![1, 4, 5].includes(view.level)) {
    root.appendChild(
      el(doc, "div", "error-panel", `unknown level ${view.level}`)
    );
    return;
  }

  const progress = el(
    doc,
    "div",
    "progress",
    `digits accepted: ${view.digits_accepted}/4`
  );
  root.appendChild(progress);

  if (view.status !== "InProgress") {
    root.appendChild(renderStatusScreen(doc, view));
    return;
  }

  root.appendChild(renderPad(doc, view));
  if (view.level === 5) {
    root.appendChild(renderCanvas(doc, onSignal));
  } else {
    root.appendChild(renderAnswerButtons(doc, view, onSignal));
  }
  if (Array.isArray(view.weights)) {
    root.appendChild(renderWeights(doc, view.weights));
  }
}
