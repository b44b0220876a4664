"""Dataset layout, sample loading, and the deterministic train/test split.

On disk a dataset root holds `raw/<id>.pgm` with `raw/<id>.meta.json`
sidecars, `target/<id>.png` ground-truth renders, and
`annotations/<id>.json` illuminant records.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError, DimensionError, NispError, ParameterError
from ..imaging import BayerImage, load_bayer, read_png
from ..service import ANNOTATION_DIR, RAW_DIR, TARGET_DIR, AnnotationRecord


@dataclass
class SamplePair:
    """One training sample: mosaic plus target render plus illuminant truth."""

    image_id: str
    raw: BayerImage
    target: np.ndarray  # (3, H, W) uint8 display-referred
    annotation: AnnotationRecord

    def __post_init__(self):
        t = np.asarray(self.target)
        if t.ndim != 3 or t.shape[0] != 3 or t.dtype != np.uint8:
            raise DimensionError(f"target must be (3,H,W) uint8, got {t.shape} {t.dtype}")
        if t.shape[1:] != self.raw.data.shape:
            raise DimensionError(
                f"target dims {t.shape[1:]} do not match mosaic dims {self.raw.data.shape}"
            )
        self.target = t


@dataclass(frozen=True)
class DatasetIndex:
    ids: tuple[str, ...]
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]

    def __post_init__(self):
        if set(self.train_ids) & set(self.test_ids):
            raise ParameterError("train and test splits overlap")
        if set(self.train_ids) | set(self.test_ids) != set(self.ids):
            raise ParameterError("splits do not cover the id list")


def split_dataset(ids, train_count: int) -> DatasetIndex:
    """Deterministic split: ids sorted lexicographically, first `train_count` train."""
    ordered = tuple(sorted(ids))
    if train_count >= len(ordered):
        raise ParameterError(
            f"train_count {train_count} must be below the dataset size {len(ordered)}"
        )
    if train_count < 1:
        raise ParameterError(f"train_count must be positive, got {train_count}")
    return DatasetIndex(ordered, ordered[:train_count], ordered[train_count:])


def scan_ids(root) -> list[str]:
    raw = Path(root) / RAW_DIR
    if not raw.is_dir():
        raise DataError(f"dataset has no {RAW_DIR}/ directory under {root}")
    return sorted(p.stem for p in raw.glob("*.pgm"))


def load_pair(root, image_id: str) -> SamplePair:
    root = Path(root)
    pgm = root / RAW_DIR / f"{image_id}.pgm"
    target_path = root / TARGET_DIR / f"{image_id}.png"
    ann_path = root / ANNOTATION_DIR / f"{image_id}.json"
    if not pgm.exists():
        raise DataError(f"missing raw mosaic {pgm}")
    if not target_path.exists():
        raise DataError(f"missing target render {target_path}")
    if not ann_path.exists():
        raise DataError(f"missing annotation {ann_path}")
    raw = load_bayer(pgm)
    planes, _ = read_png(target_path)
    if planes.dtype != np.uint8:
        raise DataError(f"target {target_path} must be 8-bit, got {planes.dtype}")
    annotation = AnnotationRecord.from_json(ann_path.read_text())
    return SamplePair(image_id=image_id, raw=raw, target=planes, annotation=annotation)


def load_dataset(root, ids=None) -> list[SamplePair]:
    return [load_pair(root, i) for i in (scan_ids(root) if ids is None else ids)]


def validate_dataset(root) -> list[str]:
    """Every problem found, one message per offending file. Empty means valid."""
    problems = []
    root = Path(root)
    try:
        ids = scan_ids(root)
    except DataError as exc:
        return [str(exc)]
    if not ids:
        return [f"no .pgm mosaics under {root / RAW_DIR}"]
    for image_id in ids:
        try:
            load_pair(root, image_id)
        except NispError as exc:
            problems.append(f"{image_id}: {exc}")
    return problems
