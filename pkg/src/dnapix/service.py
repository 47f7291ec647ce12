"""HTTP + server-sent-events facade over retrieval sessions.

Endpoints (all JSON):
  POST /sessions {image_id}        -> {session_id}
  GET  /sessions/{id}/events       -> SSE stream of session events
  POST /sessions/{id}/advance      -> next layer
  POST /sessions/{id}/stop         -> freeze the session
  GET  /images                     -> registered image ids with layer counts

Sessions live in memory; the pool and dictionary are shared read-only
state loaded at startup.  Event streams replay the session's full history
to late subscribers, so the stream is the session's source of truth.
"""

import asyncio
import base64
import json

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .exceptions import DnapixError, NotFound, SessionComplete, SessionStopped
from .orchestrator import STATE_COMPLETE, STATE_STOPPED, RetrievalSession

_POLL_SECONDS = 0.1


class SessionRequest(BaseModel):
    image_id: str


def event_payload(event):
    return {
        "layer": event.layer,
        "preview_raster_base64": base64.b64encode(event.preview_png).decode(),
        "width": event.width,
        "height": event.height,
        "psnr_db": event.psnr_db,
        "cost_nt": event.cost_nt,
        "gain_estimate": event.gain_estimate,
        "state": event.state,
    }


def create_app(
    pool,
    dictionary,
    manifest,
    params=None,
    model=None,
    seed=0,
    originals=None,
):
    """Build the FastAPI app over shared read-only pool state.

    ``originals`` optionally maps image_id -> Image so events carry PSNR.
    """
    app = FastAPI(title="progressive retrieval service")
    sessions = {}
    originals = originals or {}

    def get_session(session_id):
        try:
            return sessions[session_id]
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id}") from None

    @app.get("/images")
    def list_images():
        return [
            {"image_id": img, "n_levels": len(dictionary.layers_of(img))}
            for img in dictionary.image_ids()
        ]

    @app.post("/sessions")
    def start_session(req: SessionRequest):
        try:
            session = RetrievalSession(
                pool,
                dictionary,
                manifest,
                req.image_id,
                params=params,
                model=model,
                seed=seed,
                original=originals.get(req.image_id),
            )
        except NotFound as exc:
            raise HTTPException(404, str(exc)) from None
        sessions[session.session_id] = session
        session.start()
        return {"session_id": session.session_id}

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str):
        session = get_session(session_id)
        try:
            event = session.advance()
        except (SessionStopped, SessionComplete, DnapixError) as exc:
            raise HTTPException(409, str(exc)) from None
        return event_payload(event)

    @app.post("/sessions/{session_id}/stop")
    def stop(session_id: str):
        session = get_session(session_id)
        try:
            event = session.stop()
        except SessionStopped as exc:
            raise HTTPException(409, str(exc)) from None
        return event_payload(event)

    @app.get("/sessions/{session_id}/events")
    async def events(session_id: str):
        session = get_session(session_id)

        async def stream():
            sent = 0
            while True:
                while sent < len(session.events):
                    payload = event_payload(session.events[sent])
                    sent += 1
                    yield f"data: {json.dumps(payload)}\n\n"
                if session.state in (STATE_STOPPED, STATE_COMPLETE):
                    return
                await asyncio.sleep(_POLL_SECONDS)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
