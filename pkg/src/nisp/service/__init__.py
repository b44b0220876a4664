"""HTTP annotation service and its persisted record types."""
from .records import (
    ANNOTATION_DIR,
    PAYLOAD_FIELDS,
    RAW_DIR,
    TARGET_DIR,
    AnnotationRecord,
)
from .jobs import JobStatus
from .annotation import PREVIEW_PIPELINE, create_app, preview_png, wb_preview_png

__all__ = [
    "ANNOTATION_DIR",
    "AnnotationRecord",
    "JobStatus",
    "PAYLOAD_FIELDS",
    "PREVIEW_PIPELINE",
    "RAW_DIR",
    "TARGET_DIR",
    "create_app",
    "preview_png",
    "wb_preview_png",
]
