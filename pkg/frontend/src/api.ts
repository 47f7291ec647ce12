/** Thin client over the retrieval service's HTTP + SSE endpoints. */

import type { ImageInfo, SessionEventPayload } from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function check(resp: Response): Promise<Response> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (typeof body.detail === "string") detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ServiceError(resp.status, detail);
  }
  return resp;
}

export async function listImages(base: string): Promise<ImageInfo[]> {
  const resp = await check(await fetch(`${base}/images`));
  return resp.json();
}

export async function startSession(
  base: string,
  imageId: string,
): Promise<string> {
  const resp = await check(
    await fetch(`${base}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ image_id: imageId }),
    }),
  );
  const body = await resp.json();
  return body.session_id;
}

export async function advanceSession(
  base: string,
  sessionId: string,
): Promise<SessionEventPayload> {
  const resp = await check(
    await fetch(`${base}/sessions/${sessionId}/advance`, { method: "POST" }),
  );
  return resp.json();
}

export async function stopSession(
  base: string,
  sessionId: string,
): Promise<SessionEventPayload> {
  const resp = await check(
    await fetch(`${base}/sessions/${sessionId}/stop`, { method: "POST" }),
  );
  return resp.json();
}

/** Subscribe to the session's event stream; the service replays history to
 * late subscribers, so this is the single source of truth for the view. */
export function subscribeEvents(
  base: string,
  sessionId: string,
  onEvent: (event: SessionEventPayload) => void,
  onError: (message: string) => void,
): () => void {
  const source = new EventSource(`${base}/sessions/${sessionId}/events`);
  source.onmessage = (msg) => {
    onEvent(JSON.parse(msg.data) as SessionEventPayload);
  };
  source.onerror = () => {
    // the stream closes normally once the session is stopped/complete;
    // only a stream that never opened is a real connection failure
    if (source.readyState === EventSource.CONNECTING) {
      onError("lost connection to the retrieval service");
    }
    source.close();
  };
  return () => source.close();
}
