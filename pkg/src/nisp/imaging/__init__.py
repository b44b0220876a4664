from .types import (
    CFA_PATTERNS,
    CFA_TILE,
    BayerImage,
    CameraMeta,
    ColorMatrix,
    EncodedImage,
    GrayImage,
    HistogramVector,
    Illuminant,
    LinearRgbImage,
    PatchRect,
    XyzImage,
)
from .pgm import (
    load_bayer,
    load_camera_meta,
    meta_sidecar_path,
    read_pgm,
    save_camera_meta,
    write_pgm,
)
from .png import decode_png, encode_png, read_png, write_png
from .ops import (
    EPS,
    SRGB_TO_XYZ,
    XYZ_TO_SRGB,
    apply_ccm,
    apply_white_balance,
    cfa_site_masks,
    demosaic_bilinear,
    denoise_bilateral,
    estimate_illuminant_grayworld,
    estimate_illuminant_whitepatch,
    grayscale,
    histogram_256,
    normalize_raw,
    recolorize_xyz,
    srgb_decode_u8,
    srgb_encode,
    srgb_encode_16bit,
    srgb_inverse_transfer,
    srgb_transfer,
    tone_baseline_global,
    xyz_to_linear_srgb,
)

__all__ = [
    "CFA_PATTERNS",
    "CFA_TILE",
    "BayerImage",
    "CameraMeta",
    "ColorMatrix",
    "EncodedImage",
    "GrayImage",
    "HistogramVector",
    "Illuminant",
    "LinearRgbImage",
    "PatchRect",
    "XyzImage",
    "EPS",
    "SRGB_TO_XYZ",
    "XYZ_TO_SRGB",
    "apply_ccm",
    "apply_white_balance",
    "cfa_site_masks",
    "demosaic_bilinear",
    "denoise_bilateral",
    "estimate_illuminant_grayworld",
    "estimate_illuminant_whitepatch",
    "grayscale",
    "histogram_256",
    "normalize_raw",
    "recolorize_xyz",
    "srgb_decode_u8",
    "srgb_encode",
    "srgb_encode_16bit",
    "srgb_inverse_transfer",
    "srgb_transfer",
    "tone_baseline_global",
    "xyz_to_linear_srgb",
    "load_bayer",
    "load_camera_meta",
    "meta_sidecar_path",
    "read_pgm",
    "save_camera_meta",
    "write_pgm",
    "decode_png",
    "encode_png",
    "read_png",
    "write_png",
]
