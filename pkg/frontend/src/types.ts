/** Wire types: exactly the JSON payloads the retrieval service emits. */

export type SessionState =
  | "running"
  | "awaiting_decision"
  | "stopped"
  | "complete";

export interface SessionEventPayload {
  layer: number;
  preview_raster_base64: string;
  width: number;
  height: number;
  psnr_db: number | null;
  cost_nt: number;
  gain_estimate: number;
  state: SessionState;
}

export interface ImageInfo {
  image_id: string;
  n_levels: number;
}
