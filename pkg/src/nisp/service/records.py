"""Annotation records: the persisted output of the white-patch workflow.

One record per image, stored as one JSON file. The illuminant is always
derived server-side from the rectangle on linear image data, never taken
from a client, so a stored record can be re-verified against the pixels.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import FormatError
from ..imaging import Illuminant, PatchRect

PAYLOAD_FIELDS = ("image_id", "rect", "illuminant", "annotator", "timestamp", "version")

# Dataset directory layout, shared by the annotation service and the
# training-side loader.
RAW_DIR = "raw"
TARGET_DIR = "target"
ANNOTATION_DIR = "annotations"


@dataclass(frozen=True)
class AnnotationRecord:
    image_id: str
    rect: PatchRect
    illuminant: Illuminant
    annotator: str
    timestamp: int  # UTC seconds
    version: int = 1

    def to_payload(self) -> dict:
        return {
            "image_id": self.image_id,
            "rect": {"x": self.rect.x, "y": self.rect.y, "w": self.rect.w, "h": self.rect.h},
            "illuminant": [self.illuminant.r, self.illuminant.g, self.illuminant.b],
            "annotator": self.annotator,
            "timestamp": self.timestamp,
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_payload(), sort_keys=True)

    @classmethod
    def from_payload(cls, raw) -> "AnnotationRecord":
        if not isinstance(raw, dict):
            raise FormatError(f"annotation payload must be an object, got {type(raw).__name__}")
        missing = [f for f in PAYLOAD_FIELDS if f not in raw]
        if missing:
            raise FormatError(f"annotation payload missing fields {missing}")
        try:
            rect = PatchRect(**{k: int(raw["rect"][k]) for k in ("x", "y", "w", "h")})
            illum = Illuminant.from_vector([float(v) for v in raw["illuminant"]])
            return cls(
                image_id=str(raw["image_id"]),
                rect=rect,
                illuminant=illum,
                annotator=str(raw["annotator"]),
                timestamp=int(raw["timestamp"]),
                version=int(raw["version"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed annotation payload: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "AnnotationRecord":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"annotation is not valid JSON: {exc}") from exc
        return cls.from_payload(raw)
