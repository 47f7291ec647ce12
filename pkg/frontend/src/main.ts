/** DOM wiring for the progressive-retrieval console.
 *
 * Layout: an image gallery on the left; the active session on the right
 * with a fixed-size preview canvas (nearest-neighbor upscaled so the
 * operator sees the true resolution blockiness), live cost/gain/PSNR
 * counters, a per-layer cost history, and advance / early-stop buttons
 * gated by the session state.
 */

import {
  advanceSession,
  listImages,
  ServiceError,
  startSession,
  stopSession,
  subscribeEvents,
} from "./api.js";
import {
  applyEvent,
  controlsFor,
  formatCost,
  formatGain,
  formatPsnr,
  initialView,
  stateBadge,
  type SessionView,
} from "./viewModel.js";
import type { SessionEventPayload } from "./types.js";

const SERVICE_BASE = "";
const CANVAS_SIZE = 512;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let view: SessionView | null = null;
let unsubscribe: (() => void) | null = null;

function showBanner(message: string): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = message;
  banner.hidden = false;
}

function surface(err: unknown): void {
  if (err instanceof ServiceError) {
    showBanner(`service error ${err.status}: ${err.message}`);
  } else {
    showBanner(`connection error: ${String(err)}`);
  }
}

function drawPreview(v: SessionView): void {
  if (!v.previewBase64) return;
  const canvas = el<HTMLCanvasElement>("preview");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const img = new Image();
  img.onload = () => {
    const scale = Math.max(
      1,
      Math.floor(Math.min(CANVAS_SIZE / img.width, CANVAS_SIZE / img.height)),
    );
    canvas.width = img.width * scale;
    canvas.height = img.height * scale;
    ctx.imageSmoothingEnabled = false; // nearest-neighbor: show the blockiness
    ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
  };
  img.src = `data:image/png;base64,${v.previewBase64}`;
}

function render(): void {
  const panel = el<HTMLDivElement>("session-panel");
  if (!view) {
    panel.hidden = true;
    return;
  }
  panel.hidden = false;
  el<HTMLSpanElement>("session-image").textContent = view.imageId;
  el<HTMLSpanElement>("state-badge").textContent = stateBadge(view.state);
  el<HTMLSpanElement>("state-badge").dataset.state = view.state;
  el<HTMLSpanElement>("cost").textContent = formatCost(view.costNt);
  el<HTMLSpanElement>("gain").textContent = formatGain(view.gainEstimate);
  el<HTMLSpanElement>("psnr").textContent =
    view.currentLayer >= 0 ? formatPsnr(view.psnrDb) : "—";
  el<HTMLSpanElement>("layer").textContent =
    view.currentLayer >= 0 ? `L${view.currentLayer}` : "—";
  el<HTMLSpanElement>("dims").textContent = view.previewBase64
    ? `${view.previewWidth}×${view.previewHeight}`
    : "—";

  const history = el<HTMLUListElement>("history");
  history.replaceChildren(
    ...view.history.map((rec) => {
      const item = document.createElement("li");
      item.textContent =
        `L${rec.layer}: ${formatCost(rec.costNt)}, ` +
        `${formatPsnr(rec.psnrDb)}, remaining gain ${formatGain(rec.gainEstimate)}`;
      return item;
    }),
  );

  const controls = controlsFor(view.state);
  el<HTMLButtonElement>("advance").disabled = !controls.advanceEnabled;
  el<HTMLButtonElement>("stop").disabled = !controls.stopEnabled;
  drawPreview(view);
}

function onEvent(event: SessionEventPayload): void {
  if (!view) return;
  view = applyEvent(view, event);
  render();
}

async function openSession(imageId: string): Promise<void> {
  unsubscribe?.();
  try {
    const sessionId = await startSession(SERVICE_BASE, imageId);
    view = initialView(sessionId, imageId);
    render();
    unsubscribe = subscribeEvents(SERVICE_BASE, sessionId, onEvent, showBanner);
  } catch (err) {
    view = null;
    render();
    surface(err);
  }
}

async function buildGallery(): Promise<void> {
  const gallery = el<HTMLUListElement>("gallery");
  try {
    const images = await listImages(SERVICE_BASE);
    gallery.replaceChildren(
      ...images.map((info) => {
        const item = document.createElement("li");
        const button = document.createElement("button");
        button.textContent = `${info.image_id} (${info.n_levels} layers)`;
        button.addEventListener("click", () => void openSession(info.image_id));
        item.appendChild(button);
        return item;
      }),
    );
  } catch (err) {
    surface(err);
  }
}

function wireControls(): void {
  el<HTMLButtonElement>("advance").addEventListener("click", async () => {
    if (!view) return;
    try {
      await advanceSession(SERVICE_BASE, view.sessionId);
      // the resulting event also arrives via the stream; no local mutation
    } catch (err) {
      surface(err);
    }
  });
  el<HTMLButtonElement>("stop").addEventListener("click", async () => {
    if (!view) return;
    try {
      await stopSession(SERVICE_BASE, view.sessionId);
    } catch (err) {
      surface(err);
    }
  });
  el<HTMLDivElement>("banner").addEventListener("click", (ev) => {
    (ev.currentTarget as HTMLDivElement).hidden = true;
  });
}

void buildGallery();
wireControls();
render();
