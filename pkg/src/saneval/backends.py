"""Uniform access to text completion, visual question answering, and
open-vocabulary detection, with a record/replay cassette for offline runs.

Requests are canonicalized (key-sorted, metadata-free) and addressed by
sha256 digest, so a cassette hit survives field reordering and reruns.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol

import requests as _requests

from .errors import (
    BackendUnavailable,
    BadImage,
    CassetteConflict,
    CassetteMiss,
    ConfigError,
    ProtocolError,
)
from .geometry import BBox, Detection
from .images import ImageStore

KINDS = ("text", "visual", "detect")

DEFAULT_CONF_THRESHOLD = 0.25


@dataclass(frozen=True)
class BackendRequest:
    kind: str
    model_id: str
    prompt_text: str = ""
    image_ref: Optional[str] = None
    class_queries: Optional[tuple[str, ...]] = None
    decode_params: tuple[tuple[str, float | int | str], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown request kind {self.kind!r}")
        if self.kind == "visual" and not self.image_ref:
            raise ConfigError("visual request requires image_ref")
        if self.kind == "detect" and (not self.class_queries or not self.image_ref):
            raise ConfigError("detect request requires class_queries and image_ref")

    @classmethod
    def text(cls, model_id: str, prompt_text: str, **decode_params) -> "BackendRequest":
        return cls(kind="text", model_id=model_id, prompt_text=prompt_text,
                   decode_params=tuple(sorted(decode_params.items())))

    @classmethod
    def visual(cls, model_id: str, prompt_text: str, image_ref: str,
               **decode_params) -> "BackendRequest":
        return cls(kind="visual", model_id=model_id, prompt_text=prompt_text,
                   image_ref=image_ref,
                   decode_params=tuple(sorted(decode_params.items())))

    @classmethod
    def detect(cls, model_id: str, image_ref: str, class_queries: list[str],
               conf_threshold: float) -> "BackendRequest":
        queries = tuple(sorted(set(class_queries)))
        return cls(kind="detect", model_id=model_id, image_ref=image_ref,
                   class_queries=queries,
                   decode_params=(("conf_threshold", conf_threshold),))


def canonical_form(req: BackendRequest) -> str:
    """Total canonicalization: identical semantic content yields identical
    strings regardless of field or decode-param ordering."""
    doc = {
        "kind": req.kind,
        "model_id": req.model_id,
        "prompt_text": req.prompt_text,
        "image_ref": req.image_ref,
        "class_queries": sorted(req.class_queries) if req.class_queries else None,
        "decode_params": {k: v for k, v in sorted(req.decode_params)},
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def request_digest(req: BackendRequest) -> str:
    import hashlib

    return hashlib.sha256(canonical_form(req).encode("utf-8")).hexdigest()


@dataclass
class BackendResponse:
    text: str
    latency_ms: float
    from_cache: bool = False

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be nonnegative")


class Cassette:
    """Append-only map from canonical request digest to recorded response.

    Modes: "off" (pass-through), "record" (store live responses),
    "replay" (serve only recorded responses; a miss is an error).
    """

    MODES = ("off", "record", "replay")

    def __init__(self, mode: str = "off", path: str | Path | None = None) -> None:
        if mode not in self.MODES:
            raise ConfigError(f"unknown cassette mode {mode!r}")
        self.mode = mode
        self.path = Path(path) if path else None
        self.entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self.entries = json.loads(self.path.read_text(encoding="utf-8"))

    def lookup(self, req: BackendRequest) -> Optional[BackendResponse]:
        entry = self.entries.get(request_digest(req))
        if entry is None:
            return None
        return BackendResponse(text=entry["text"],
                               latency_ms=float(entry["latency_ms"]),
                               from_cache=True)

    def store(self, req: BackendRequest, resp: BackendResponse) -> None:
        if self.mode != "record":
            raise CassetteConflict("store is only legal in record mode")
        digest = request_digest(req)
        payload = {"text": resp.text, "latency_ms": resp.latency_ms}
        with self._lock:
            existing = self.entries.get(digest)
            if existing is not None:
                if existing["text"] != payload["text"]:
                    raise CassetteConflict(
                        f"digest {digest} already recorded with different payload")
                return
            self.entries[digest] = payload

    def save(self) -> None:
        if self.path is None:
            raise ConfigError("cassette has no path to save to")
        with self._lock:
            doc = json.dumps(self.entries, sort_keys=True, indent=2)
        self.path.write_text(doc + "\n", encoding="utf-8")


class DetectorTransport(Protocol):
    def detect(self, image_bytes: bytes, classes: list[str],
               conf_threshold: float) -> dict: ...


class HTTPDetector:
    """Client for the detector sidecar wire protocol (POST /detect)."""

    def __init__(self, endpoint: str, timeout: float = 60.0) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def detect(self, image_bytes: bytes, classes: list[str],
               conf_threshold: float) -> dict:
        import base64

        body = {
            "image_b64": base64.b64encode(image_bytes).decode("ascii"),
            "classes": classes,
            "conf_threshold": conf_threshold,
        }
        try:
            resp = _requests.post(f"{self.endpoint}/detect", json=body,
                                  timeout=self.timeout)
        except _requests.RequestException as exc:
            raise BackendUnavailable(f"detector sidecar unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(
                f"detector sidecar returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ProtocolError(f"detector reply is not valid JSON: {exc}") from exc


class BackendHub:
    """Front door for all external capability, cassette-aware.

    Live transports are plain callables (request -> reply text) so tests can
    substitute scripted oracles or egress-asserting stubs.
    """

    def __init__(
        self,
        store: ImageStore,
        text_transport: Callable[[BackendRequest], str] | None = None,
        visual_transport: Callable[[BackendRequest], str] | None = None,
        detector: DetectorTransport | None = None,
        cassette: Cassette | None = None,
        retries: int = 2,
        backoff_s: float = 0.5,
    ) -> None:
        self.store = store
        self.text_transport = text_transport
        self.visual_transport = visual_transport
        self.detector = detector
        self.cassette = cassette or Cassette(mode="off")
        self.retries = retries
        self.backoff_s = backoff_s

    # -- internals ---------------------------------------------------------

    def _serve(self, req: BackendRequest,
               live: Callable[[], str]) -> BackendResponse:
        if self.cassette.mode == "replay":
            resp = self.cassette.lookup(req)
            if resp is None:
                raise CassetteMiss(
                    f"replay miss for {req.kind} request digest {request_digest(req)}")
            return resp
        start = time.monotonic()
        text = self._with_retries(live)
        resp = BackendResponse(text=text,
                               latency_ms=(time.monotonic() - start) * 1000.0)
        if self.cassette.mode == "record":
            self.cassette.store(req, resp)
        return resp

    def _with_retries(self, live: Callable[[], str]) -> str:
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                return live()
            except (BadImage, ProtocolError):
                raise
            except Exception as exc:  # transport failure; retry with backoff
                last = exc
                if attempt < self.retries:
                    time.sleep(self.backoff_s * (2 ** attempt))
        raise BackendUnavailable(f"backend call failed after retries: {last}") from last

    # -- operations --------------------------------------------------------

    def complete_text(self, req: BackendRequest) -> BackendResponse:
        if req.kind != "text":
            raise ConfigError("complete_text requires a text request")
        if not req.prompt_text:
            raise ConfigError("prompt_text must be nonempty")

        def live() -> str:
            if self.text_transport is None:
                raise ConfigError("no text transport configured")
            return self.text_transport(req)

        return self._serve(req, live)

    def answer_visual(self, req: BackendRequest) -> BackendResponse:
        if req.kind != "visual":
            raise ConfigError("answer_visual requires a visual request")
        if self.cassette.mode != "replay":
            self.store.open(req.image_ref)  # raises BadImage if undecodable

        def live() -> str:
            if self.visual_transport is None:
                raise ConfigError("no visual transport configured")
            return self.visual_transport(req)

        return self._serve(req, live)

    def detect(self, image_ref: str, class_queries: list[str],
               conf_threshold: float = DEFAULT_CONF_THRESHOLD,
               model_id: str = "detector") -> list[Detection]:
        if not class_queries:
            raise ConfigError("class_queries must be nonempty")
        if not 0.0 <= conf_threshold <= 1.0:
            raise ConfigError("conf_threshold must be within [0, 1]")
        req = BackendRequest.detect(model_id, image_ref, class_queries,
                                    conf_threshold)

        def live() -> str:
            if self.detector is None:
                raise ConfigError("no detector configured")
            reply = self.detector.detect(self.store.get_bytes(image_ref),
                                         list(req.class_queries), conf_threshold)
            return json.dumps(reply, sort_keys=True, separators=(",", ":"))

        resp = self._serve(req, live)
        return self._parse_detections(resp.text, req, conf_threshold)

    def _parse_detections(self, text: str, req: BackendRequest,
                          conf_threshold: float) -> list[Detection]:
        try:
            doc = json.loads(text)
            width, height = doc["image_size"]
            raw = doc["detections"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed detector reply: {exc}") from exc
        allowed = {q.lower() for q in req.class_queries}
        detections = []
        for d in raw:
            try:
                det = Detection.from_dict(d)
            except Exception as exc:
                raise ProtocolError(f"malformed detection entry: {exc}") from exc
            if det.label.lower() not in allowed:
                raise ProtocolError(f"label {det.label!r} outside query set")
            if det.confidence < conf_threshold:
                raise ProtocolError(
                    f"confidence {det.confidence} below threshold {conf_threshold}")
            if not det.bbox.within(width, height):
                raise ProtocolError(f"box {det.bbox} outside image {width}x{height}")
            detections.append(det)
        return detections
