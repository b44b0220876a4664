"""White-patch annotation over HTTP.

The server shows annotators a gamma-encoded preview but always derives
illuminants from the linear demosaiced mosaic, so stored ground truth is
independent of how the preview happens to be graded. Records land as one
JSON file per image, written to a temp file and renamed, so a killed
process never leaves a partial record. Writes to one image are serialized
by a per-id lock; the version counter makes concurrent posts last-writer-
wins instead of interleaved.
"""
from __future__ import annotations

import json
import os
import tempfile
import threading
import time
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..errors import NispError
from ..imaging import (
    BayerImage,
    LinearRgbImage,
    PatchRect,
    apply_ccm,
    apply_white_balance,
    demosaic_bilinear,
    encode_png,
    estimate_illuminant_grayworld,
    estimate_illuminant_whitepatch,
    load_bayer,
    srgb_encode,
    xyz_to_linear_srgb,
)
from .records import ANNOTATION_DIR, RAW_DIR, AnnotationRecord

# Stamped into every preview PNG so stored annotations can be traced to
# the exact rendering recipe the annotator was looking at.
PREVIEW_PIPELINE = "demosaic-grayworld-ccm-srgb/1"


def _encode_display(rgb: LinearRgbImage, raw: BayerImage) -> bytes:
    xyz = apply_ccm(rgb, raw.meta.ccm)
    display = srgb_encode(xyz_to_linear_srgb(xyz))
    return encode_png(display.planes, text={"pipeline": PREVIEW_PIPELINE})


def preview_png(raw: BayerImage) -> bytes:
    """Gamma-encoded annotation preview: gray-world balanced, color corrected."""
    rgb = demosaic_bilinear(raw)
    return _encode_display(apply_white_balance(rgb, estimate_illuminant_grayworld(rgb)), raw)


def wb_preview_png(raw: BayerImage, rect: PatchRect) -> bytes:
    """Preview balanced against the patch estimate instead of gray world.

    A good patch choice neutralizes the cast here; that visual check is the
    annotator's feedback loop.
    """
    rgb = demosaic_bilinear(raw)
    rect.require_within(rgb.width, rgb.height)
    illum = estimate_illuminant_whitepatch(rgb, rect)
    return _encode_display(apply_white_balance(rgb, illum), raw)


class RectBody(BaseModel):
    x: int
    y: int
    w: int
    h: int


class AnnotationBody(BaseModel):
    rect: RectBody
    annotator: str = "anonymous"


def _not_found(image_id: str) -> JSONResponse:
    return JSONResponse(status_code=404, content={"error": f"unknown image id {image_id!r}"})


def _rect_error(where: str, exc: Exception) -> JSONResponse:
    detail = [{"loc": [where, "rect"], "msg": str(exc), "type": "value_error"}]
    return JSONResponse(status_code=422, content={"detail": detail})


def create_app(dataset_dir, static_dir=None) -> FastAPI:
    """Annotation service over a dataset directory; UI assets served at /."""
    root = Path(dataset_dir)
    ann_dir = root / ANNOTATION_DIR
    ann_dir.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="white patch annotation")

    locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def lock_for(image_id: str) -> threading.Lock:
        with locks_guard:
            return locks.setdefault(image_id, threading.Lock())

    def raw_path(image_id: str) -> Path:
        return root / RAW_DIR / f"{image_id}.pgm"

    def ann_path(image_id: str) -> Path:
        return ann_dir / f"{image_id}.json"

    def list_ids() -> list[str]:
        raw = root / RAW_DIR
        if not raw.is_dir():
            return []
        return sorted(p.stem for p in raw.glob("*.pgm"))

    @app.get("/api/images")
    def images():
        return [
            {"image_id": i, "annotated": ann_path(i).exists()}
            for i in list_ids()
        ]

    @app.get("/api/images/{image_id}/preview")
    def preview(image_id: str):
        path = raw_path(image_id)
        if not path.exists():
            return _not_found(image_id)
        return Response(content=preview_png(load_bayer(path)), media_type="image/png")

    @app.get("/api/images/{image_id}/wb-preview")
    def wb_preview(image_id: str, rect: str):
        path = raw_path(image_id)
        if not path.exists():
            return _not_found(image_id)
        try:
            parts = [int(v) for v in rect.split(",")]
            if len(parts) != 4:
                raise ValueError(f"rect wants x,y,w,h, got {len(parts)} values")
            patch = PatchRect(*parts)
            png = wb_preview_png(load_bayer(path), patch)
        except (ValueError, NispError) as exc:
            return _rect_error("query", exc)
        return Response(content=png, media_type="image/png")

    @app.get("/api/images/{image_id}/annotation")
    def get_annotation(image_id: str):
        path = ann_path(image_id)
        if not path.exists():
            return _not_found(image_id)
        return json.loads(path.read_text())

    @app.post("/api/images/{image_id}/annotation")
    def post_annotation(image_id: str, body: AnnotationBody):
        path = raw_path(image_id)
        if not path.exists():
            return _not_found(image_id)
        with lock_for(image_id):
            target = ann_path(image_id)
            version = 1
            if target.exists():
                version = AnnotationRecord.from_json(target.read_text()).version + 1
            rgb = demosaic_bilinear(load_bayer(path))
            try:
                rect = PatchRect(body.rect.x, body.rect.y, body.rect.w, body.rect.h)
                rect.require_within(rgb.width, rgb.height)
                illum = estimate_illuminant_whitepatch(rgb, rect)
            except NispError as exc:
                return _rect_error("body", exc)
            record = AnnotationRecord(
                image_id=image_id,
                rect=rect,
                illuminant=illum,
                annotator=body.annotator,
                timestamp=int(time.time()),
                version=version,
            )
            fd, tmp = tempfile.mkstemp(dir=ann_dir, suffix=".tmp")
            try:
                with os.fdopen(fd, "w") as fh:
                    fh.write(record.to_json())
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp, target)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
            return json.loads(target.read_text())

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
