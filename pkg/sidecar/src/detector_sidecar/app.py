"""FastAPI application exposing the detect wire protocol.

Error mapping: 400 malformed body (bad JSON, wrong field shapes, empty
classes, out-of-range threshold), 422 undecodable image, 503 model not
loaded. Field names on the wire are fixed: image_b64 / classes /
conf_threshold in, detections / image_size out.
"""

from __future__ import annotations

import base64
import binascii
import io
import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image
from pydantic import BaseModel, Field

from .detector import ColorKeyDetector, load_weights

WEIGHTS_ENV = "SANEVAL_DETECTOR_WEIGHTS"
PORT_ENV = "SANEVAL_DETECTOR_PORT"
DEFAULT_PORT = 8008


class DetectRequest(BaseModel):
    image_b64: str
    classes: list[str]
    conf_threshold: float = Field(ge=0.0, le=1.0)


def create_app(weights_path: str | Path | None = None) -> FastAPI:
    """Build the service; with no weights path (argument or environment),
    the app starts but reports 503 until one is provided."""
    app = FastAPI(title="saneval-detector-sidecar")
    app.state.detector = None

    path = weights_path or os.environ.get(WEIGHTS_ENV)
    if path:
        app.state.detector = ColorKeyDetector(load_weights(path))

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"detail": "malformed body"})

    @app.get("/healthz")
    def healthz():
        detector = app.state.detector
        if detector is None:
            return JSONResponse(status_code=503,
                                content={"status": "loading"})
        return {"status": "ok", "model_id": detector.model_id}

    @app.post("/detect")
    def detect(body: DetectRequest):
        detector = app.state.detector
        if detector is None:
            return JSONResponse(status_code=503,
                                content={"detail": "model not loaded"})
        if not body.classes:
            return JSONResponse(status_code=400,
                                content={"detail": "classes must be nonempty"})
        try:
            raw = base64.b64decode(body.image_b64, validate=True)
            image = Image.open(io.BytesIO(raw))
            image.load()
        except (binascii.Error, ValueError, OSError):
            return JSONResponse(status_code=422,
                                content={"detail": "undecodable image"})
        detections = detector.detect(image, body.classes, body.conf_threshold)
        return {"detections": detections,
                "image_size": [image.size[0], image.size[1]]}

    return app
