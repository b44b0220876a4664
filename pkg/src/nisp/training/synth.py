"""Bundled synthetic dataset: small mosaics with exactly known illuminants.

Each scene is a dim, smoothly textured tinted field with one constant
bright patch, mimicking a night shot with a reference card in it. The
patch's camera RGB values are chosen so ADC quantization is exact
(value times the 4000-count span is an integer), which makes the stored
annotation illuminant reproducible from the pixels to float precision.
Targets are classical renders using the true illuminant plus a fixed
global tone boost, so the whole dataset is deterministic end to end.

The background stays dim on purpose: it keeps the rendered targets in
the value range where 8-bit quantization steps are finer than the
256-bin histogram resolution, so the histogram loss sees smooth
distributions instead of isolated spikes and desk-scale training on
these pairs converges.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ParameterError
from ..imaging import (
    BayerImage,
    CameraMeta,
    ColorMatrix,
    Illuminant,
    PatchRect,
    SRGB_TO_XYZ,
    apply_ccm,
    apply_white_balance,
    cfa_site_masks,
    demosaic_bilinear,
    normalize_raw,
    save_camera_meta,
    srgb_encode,
    tone_baseline_global,
    write_pgm,
    write_png,
    xyz_to_linear_srgb,
)
from ..service import AnnotationRecord
from .dataset import ANNOTATION_DIR, RAW_DIR, TARGET_DIR

BLACK_LEVEL = 48
WHITE_LEVEL = 4048
SPAN = WHITE_LEVEL - BLACK_LEVEL

TONE_GAMMA = 1.6

# Observed camera RGB of each neutral patch. All entries quantize exactly
# at the 4000-count span; the first normalizes to (1/3, 2/3, 2/3).
PATCH_VALUES = (
    (0.1, 0.2, 0.2),
    (0.2, 0.2, 0.1),
    (0.1, 0.25, 0.3),
    (0.3, 0.25, 0.1),
)


def synthetic_meta() -> CameraMeta:
    return CameraMeta(
        black_level=BLACK_LEVEL,
        white_level=WHITE_LEVEL,
        ccm=ColorMatrix(SRGB_TO_XYZ.copy()),
        cfa="RGGB",
    )


ALBEDO_LO = 0.006
ALBEDO_HI = 0.08


def _scene(patch_value, height, width, rng) -> tuple[np.ndarray, PatchRect]:
    """Camera-linear (3,H,W) scene and the safe annotation rect inside its patch."""
    tint = np.asarray(patch_value, dtype=np.float64)
    tint = tint / tint.max()
    ys, xs = np.mgrid[0:height, 0:width]
    ramp = (xs + ys) / max(height + width - 2, 1)
    ph = rng.uniform(0, 2 * np.pi, size=3)
    waves = 0.6 * np.sin(2 * np.pi * xs / 11.3 + ph[0]) * np.cos(2 * np.pi * ys / 7.7 + ph[1])
    waves += 0.4 * np.sin(2 * np.pi * (2 * xs + 3 * ys) / 23.1 + ph[2])
    # Coefficients sum below 0.5 so the mix never clips; clipping would pile
    # mass at the range ends and put spikes back into the value histogram.
    mix = 0.5 + 0.30 * (2.0 * ramp - 1.0) + 0.19 * waves
    albedo = ALBEDO_LO + (ALBEDO_HI - ALBEDO_LO) * mix
    scene = albedo[np.newaxis] * tint[:, np.newaxis, np.newaxis]

    side = 12
    px = int(rng.integers(2, width - side - 2))
    py = int(rng.integers(2, height - side - 2))
    scene[:, py : py + side, px : px + side] = np.asarray(patch_value)[:, None, None]
    # Inset so every demosaic window at annotation pixels stays inside the patch.
    return scene, PatchRect(px + 3, py + 3, side - 6, side - 6)


def _mosaic_adc(scene: np.ndarray, cfa: str) -> np.ndarray:
    masks = cfa_site_masks(cfa, scene.shape[1], scene.shape[2])
    mosaic = (scene * masks).sum(axis=0)
    return (np.rint(mosaic * SPAN) + BLACK_LEVEL).clip(0, 65535).astype(np.uint16)


def generate_synthetic_dataset(root, count: int = 4, height: int = 64, width: int = 64,
                               seed: int = 0) -> list[str]:
    """Write `count` pairs under `root` in dataset layout; returns the ids."""
    if count < 1 or count > len(PATCH_VALUES):
        raise ParameterError(f"count must be in 1..{len(PATCH_VALUES)}, got {count}")
    if height < 32 or width < 32 or height % 2 or width % 2:
        raise ParameterError(f"dims must be even and at least 32x32, got {width}x{height}")
    root = Path(root)
    for sub in (RAW_DIR, TARGET_DIR, ANNOTATION_DIR):
        (root / sub).mkdir(parents=True, exist_ok=True)
    meta = synthetic_meta()
    ids = []
    for i in range(count):
        image_id = f"synth{i}"
        rng = np.random.default_rng(seed * 1000 + i)
        patch = PATCH_VALUES[i]
        scene, rect = _scene(patch, height, width, rng)
        adc = _mosaic_adc(scene, meta.cfa)
        write_pgm(root / RAW_DIR / f"{image_id}.pgm", adc)
        save_camera_meta(root / RAW_DIR / f"{image_id}.meta.json", meta)

        illum = Illuminant.from_vector(patch)
        raw = BayerImage(normalize_raw(adc, BLACK_LEVEL, WHITE_LEVEL), meta.cfa, meta)
        xyz = apply_ccm(apply_white_balance(demosaic_bilinear(raw), illum), meta.ccm)
        toned = tone_baseline_global(xyz, TONE_GAMMA)
        encoded = srgb_encode(xyz_to_linear_srgb(toned))
        write_png(root / TARGET_DIR / f"{image_id}.png", encoded.planes)

        record = AnnotationRecord(
            image_id=image_id,
            rect=rect,
            illuminant=illum,
            annotator="synth",
            timestamp=0,
            version=1,
        )
        (root / ANNOTATION_DIR / f"{image_id}.json").write_text(record.to_json() + "\n")
        ids.append(image_id)
    return ids
