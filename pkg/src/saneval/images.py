"""Content-addressed image storage.

Images are referenced by the sha256 hex digest of their encoded bytes, so
cassettes and fixture manifests stay portable across directory layouts.
"""

from __future__ import annotations

import hashlib
import io
from pathlib import Path

from PIL import Image

from .errors import BadImage


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ImageStore:
    """In-memory map from content digest to encoded image bytes."""

    def __init__(self) -> None:
        self._blobs: dict[str, bytes] = {}

    def put_bytes(self, data: bytes) -> str:
        ref = digest_bytes(data)
        self._blobs[ref] = data
        return ref

    def put_file(self, path: str | Path) -> str:
        return self.put_bytes(Path(path).read_bytes())

    def put_image(self, image: Image.Image) -> str:
        buf = io.BytesIO()
        image.save(buf, format="PNG")
        return self.put_bytes(buf.getvalue())

    def __contains__(self, ref: str) -> bool:
        return ref in self._blobs

    def get_bytes(self, ref: str) -> bytes:
        if ref not in self._blobs:
            raise BadImage(f"unknown image ref {ref!r}")
        return self._blobs[ref]

    def open(self, ref: str) -> Image.Image:
        try:
            img = Image.open(io.BytesIO(self.get_bytes(ref)))
            img.load()
        except BadImage:
            raise
        except Exception as exc:
            raise BadImage(f"image ref {ref!r} is not decodable: {exc}") from exc
        return img

    def size(self, ref: str) -> tuple[int, int]:
        return self.open(ref).size
