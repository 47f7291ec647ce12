/** Pure view-model over the session event log.
 *
 * The rendered view is a pure function of the events received so far:
 * replaying a recorded event log reproduces the identical model. Nothing
 * here touches the DOM or the network, and no value is ever extrapolated
 * between events — costs, gains, and PSNR come verbatim from the service.
 */

import type { SessionEventPayload, SessionState } from "./types.js";

export interface LayerRecord {
  layer: number;
  costNt: number;
  psnrDb: number | null;
  gainEstimate: number;
}

export interface SessionView {
  sessionId: string;
  imageId: string;
  state: SessionState;
  /** Latest preview, base64 PNG, with its true decoded dimensions. */
  previewBase64: string | null;
  previewWidth: number;
  previewHeight: number;
  /** One record per event, in arrival order (the cost sparkline). */
  history: LayerRecord[];
  /** Accumulated sequenced nucleotides as last reported by the service. */
  costNt: number;
  gainEstimate: number;
  psnrDb: number | null;
  currentLayer: number;
}

export interface Controls {
  advanceEnabled: boolean;
  stopEnabled: boolean;
}

export function initialView(sessionId: string, imageId: string): SessionView {
  return {
    sessionId,
    imageId,
    state: "running",
    previewBase64: null,
    previewWidth: 0,
    previewHeight: 0,
    history: [],
    costNt: 0,
    gainEstimate: 0,
    psnrDb: null,
    currentLayer: -1,
  };
}

export function applyEvent(
  view: SessionView,
  event: SessionEventPayload,
): SessionView {
  return {
    ...view,
    state: event.state,
    previewBase64: event.preview_raster_base64,
    previewWidth: event.width,
    previewHeight: event.height,
    history: [
      ...view.history,
      {
        layer: event.layer,
        costNt: event.cost_nt,
        psnrDb: event.psnr_db,
        gainEstimate: event.gain_estimate,
      },
    ],
    costNt: event.cost_nt,
    gainEstimate: event.gain_estimate,
    psnrDb: event.psnr_db,
    currentLayer: event.layer,
  };
}

export function replay(
  sessionId: string,
  imageId: string,
  events: SessionEventPayload[],
): SessionView {
  return events.reduce(applyEvent, initialView(sessionId, imageId));
}

/** Commands are only legal while the service awaits a decision. */
export function controlsFor(state: SessionState): Controls {
  const awaiting = state === "awaiting_decision";
  return { advanceEnabled: awaiting, stopEnabled: awaiting };
}

export function stateBadge(state: SessionState): string {
  switch (state) {
    case "running":
      return "sequencing…";
    case "awaiting_decision":
      return "awaiting decision";
    case "stopped":
      return "stopped (early)";
    case "complete":
      return "complete";
  }
}

export function formatCost(costNt: number): string {
  if (costNt >= 1_000_000) return `${(costNt / 1_000_000).toFixed(2)} Mnt`;
  if (costNt >= 1_000) return `${(costNt / 1_000).toFixed(1)} knt`;
  return `${costNt} nt`;
}

export function formatPsnr(psnrDb: number | null): string {
  return psnrDb === null ? "∞ dB (lossless)" : `${psnrDb.toFixed(2)} dB`;
}

export function formatGain(gain: number): string {
  return `${gain.toFixed(2)}×`;
}

/** The service guarantees cost only accumulates; surface any violation. */
export function costIsMonotone(history: LayerRecord[]): boolean {
  for (let i = 1; i < history.length; i++) {
    if (history[i].costNt < history[i - 1].costNt) return false;
  }
  return true;
}
