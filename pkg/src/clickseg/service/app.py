"""HTTP annotation service around a single loaded model.

One POST opens a session (stage 1 runs once, features are cached); each click
then costs only a stage-2 forward.  Sessions are serialized individually but
independent sessions proceed concurrently.
"""

from __future__ import annotations

import base64
import binascii
import io
import json
import threading
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

from clickseg.engine import InteractionConfig, create_session, run_interaction_step
from clickseg.model import SegmentationModel
from clickseg.service.rle import encode_rle
from clickseg.service.store import SessionRecord, SessionStore
from clickseg.types import ClickPoint, ImageTensor

MAX_SIDE = 4096
MIN_SIDE = 32

_FALLBACK_PAGE = """<!doctype html>
<html>
  <head><meta charset="utf-8"><title>clickseg</title></head>
  <body>
    <h1>clickseg annotation service</h1>
    <p>The browser client is not bundled in this build. The JSON API is live:
    open a session with <code>POST /sessions</code>, then send clicks to
    <code>POST /sessions/{id}/clicks</code>.</p>
  </body>
</html>
"""


class OpenSessionRequest(BaseModel):
    image: str  # base64-encoded PNG or JPEG


class ClickRequest(BaseModel):
    x: int
    y: int
    polarity: Literal["positive", "negative"]


def _decode_image(b64: str) -> ImageTensor:
    try:
        raw = base64.b64decode(b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"invalid base64 image: {exc}")
    try:
        with Image.open(io.BytesIO(raw)) as img:
            img = img.convert("RGB")
            array = np.asarray(img, dtype=np.uint8)
    except Exception as exc:  # PIL raises a small zoo of decode errors
        raise HTTPException(status_code=400, detail=f"cannot decode image: {exc}")
    height, width = array.shape[:2]
    if height > MAX_SIDE or width > MAX_SIDE:
        raise HTTPException(
            status_code=413,
            detail=f"image {width}x{height} exceeds the {MAX_SIDE}px side limit",
        )
    if height < MIN_SIDE or width < MIN_SIDE:
        raise HTTPException(
            status_code=400,
            detail=f"image {width}x{height} is smaller than {MIN_SIDE}px per side",
        )
    return ImageTensor.from_array(array)


def _mask_payload(record: SessionRecord) -> dict:
    return encode_rle(record.state.mask.binarize())


def create_app(
    model: SegmentationModel,
    *,
    store: SessionStore | None = None,
    interaction: InteractionConfig | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """Build the FastAPI app serving ``model``."""
    store = store if store is not None else SessionStore()
    interaction = interaction if interaction is not None else InteractionConfig()
    app = FastAPI(title="clickseg", docs_url=None, redoc_url=None)
    # Stage 1 runs under one lock: it is the heavy call, and serializing it
    # keeps the shared model's invocation counter coherent.
    stage1_lock = threading.Lock()

    def _get_or_404(session_id: str) -> SessionRecord:
        record = store.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return record

    @app.post("/sessions")
    def open_session(body: OpenSessionRequest) -> dict:
        image = _decode_image(body.image)
        with stage1_lock:
            state = create_session(model, image)
        record = store.create(state)
        return {
            "session_id": record.session_id,
            "t_f1_ms": round(state.stage1_ms, 3),
            "width": image.width,
            "height": image.height,
        }

    @app.post("/sessions/{session_id}/clicks")
    def add_click(session_id: str, body: ClickRequest) -> dict:
        record = _get_or_404(session_id)
        with record.lock:
            image = record.state.image
            if not (0 <= body.x < image.width and 0 <= body.y < image.height):
                raise HTTPException(
                    status_code=422,
                    detail=(
                        f"click ({body.x}, {body.y}) outside image "
                        f"{image.width}x{image.height}"
                    ),
                )
            record.snapshot(store.max_undo)
            click = ClickPoint(
                row=body.y,
                col=body.x,
                polarity=body.polarity,
                index=len(record.state.history) + 1,
            )
            run_interaction_step(record.state, model, click, interaction)
            return {
                "mask_rle": _mask_payload(record),
                "iou_hint": None,
                "t_f2_ms": round(record.state.stage2_ms[-1], 3),
            }

    @app.post("/sessions/{session_id}/undo")
    def undo_click(session_id: str) -> dict:
        record = _get_or_404(session_id)
        with record.lock:
            if not record.undo():
                return {"status": "noop"}
            return {"status": "ok", "mask_rle": _mask_payload(record)}

    @app.get("/sessions/{session_id}/mask")
    def export_mask(
        session_id: str, format: Literal["png", "rle"] = Query("rle")
    ) -> Response:
        record = _get_or_404(session_id)
        with record.lock:
            if len(record.state.history) == 0:
                raise HTTPException(
                    status_code=409, detail="no prediction yet; send a click first"
                )
            mask = record.state.mask.binarize()
            if format == "rle":
                payload = encode_rle(mask)
                return Response(
                    content=json.dumps(payload), media_type="application/json"
                )
            buf = io.BytesIO()
            Image.fromarray(mask.astype(np.uint8) * 255, mode="L").save(buf, format="PNG")
            return Response(content=buf.getvalue(), media_type="image/png")

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str) -> dict:
        if not store.delete(session_id):
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return {"status": "deleted"}

    static_root = Path(static_dir) if static_dir is not None else None
    if static_root is not None and static_root.is_dir():
        app.mount("/", StaticFiles(directory=static_root, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return _FALLBACK_PAGE

    return app
