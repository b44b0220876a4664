"""Image and color domain types for the RAW-to-RGB pipelines.

Floating image data is stored planar (channels first) as float64 in
normalized units. Validation happens at construction; the operations in
:mod:`nisp.imaging.ops` treat instances as immutable and return new ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    BoundsError,
    DegenerateInputError,
    DimensionError,
    ParameterError,
)

CFA_PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")

# Channel id (0=R, 1=G, 2=B) of each cell in the 2x2 CFA tile, row-major.
CFA_TILE = {
    "RGGB": ((0, 1), (1, 2)),
    "BGGR": ((2, 1), (1, 0)),
    "GRBG": ((1, 0), (2, 1)),
    "GBRG": ((1, 2), (0, 1)),
}

UNIT_NORM_TOL = 1e-6


@dataclass
class ColorMatrix:
    """Invertible 3x3 matrix mapping camera RGB to CIE-XYZ."""

    values: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.values, dtype=np.float64)
        if m.shape != (3, 3):
            raise ParameterError(f"color matrix must be 3x3, got {m.shape}")
        if abs(np.linalg.det(m)) <= 1e-9:
            raise ParameterError("color matrix is singular")
        self.values = m

    @classmethod
    def identity(cls) -> "ColorMatrix":
        return cls(np.eye(3))

    def inverse(self) -> "ColorMatrix":
        return ColorMatrix(np.linalg.inv(self.values))


@dataclass
class CameraMeta:
    """Sensor calibration needed to normalize and color-correct a mosaic."""

    black_level: int
    white_level: int
    ccm: ColorMatrix
    cfa: str = "RGGB"

    def __post_init__(self):
        if self.cfa not in CFA_PATTERNS:
            raise ParameterError(f"unknown CFA pattern {self.cfa!r}")
        if self.white_level <= self.black_level:
            raise ParameterError(
                f"white_level {self.white_level} must exceed black_level {self.black_level}"
            )


@dataclass
class BayerImage:
    """Single-channel mosaic frame, normalized to [0, 1]."""

    data: np.ndarray
    cfa: str = "RGGB"
    meta: CameraMeta | None = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise DimensionError(f"mosaic must be 2-D, got shape {d.shape}")
        h, w = d.shape
        if h % 2 or w % 2:
            raise DimensionError(f"mosaic dimensions must be even, got {w}x{h}")
        if self.cfa not in CFA_PATTERNS:
            raise ParameterError(f"unknown CFA pattern {self.cfa!r}")
        if d.size and (not np.all(np.isfinite(d)) or d.min() < 0.0 or d.max() > 1.0):
            raise ParameterError("mosaic samples must lie in [0, 1]")
        self.data = d

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def _check_planes(planes: np.ndarray, nplanes: int, what: str) -> np.ndarray:
    p = np.asarray(planes, dtype=np.float64)
    want = 3 if nplanes == 3 else 2
    if p.ndim != want or (nplanes == 3 and p.shape[0] != 3):
        raise DimensionError(f"{what} expects shape {'(3,H,W)' if nplanes == 3 else '(H,W)'}, got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ParameterError(f"{what} contains non-finite samples")
    return p


@dataclass
class LinearRgbImage:
    """Camera-native linear RGB, three planes in [0, 1]."""

    planes: np.ndarray

    def __post_init__(self):
        p = _check_planes(self.planes, 3, "LinearRgbImage")
        if p.size and (p.min() < 0.0 or p.max() > 1.0):
            raise ParameterError("linear RGB samples must lie in [0, 1]")
        self.planes = p

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]


@dataclass
class XyzImage:
    """CIE-XYZ linear image, three nonnegative planes."""

    planes: np.ndarray

    def __post_init__(self):
        p = _check_planes(self.planes, 3, "XyzImage")
        if p.size and p.min() < 0.0:
            raise ParameterError("XYZ samples must be nonnegative")
        self.planes = p

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]


@dataclass
class GrayImage:
    """Single nonnegative plane."""

    plane: np.ndarray

    def __post_init__(self):
        p = _check_planes(self.plane, 1, "GrayImage")
        if p.size and p.min() < 0.0:
            raise ParameterError("gray samples must be nonnegative")
        self.plane = p

    @property
    def height(self) -> int:
        return self.plane.shape[0]

    @property
    def width(self) -> int:
        return self.plane.shape[1]


@dataclass
class EncodedImage:
    """Display-referred 8-bit RGB."""

    planes: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.planes)
        if p.ndim != 3 or p.shape[0] != 3:
            raise DimensionError(f"EncodedImage expects shape (3,H,W), got {p.shape}")
        if p.dtype != np.uint8:
            raise ParameterError(f"EncodedImage expects uint8 samples, got {p.dtype}")
        self.planes = p

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]


@dataclass(frozen=True)
class Illuminant:
    """Scene light color as a unit-norm RGB direction with positive components."""

    r: float
    g: float
    b: float

    def __post_init__(self):
        v = np.array([self.r, self.g, self.b], dtype=np.float64)
        if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
            raise DegenerateInputError(f"illuminant components must be positive, got {tuple(v)}")
        n = float(np.linalg.norm(v))
        if abs(n - 1.0) > UNIT_NORM_TOL:
            raise ParameterError(f"illuminant must be unit-norm, |v| = {n}")

    @classmethod
    def from_vector(cls, vec) -> "Illuminant":
        """Normalize an arbitrary positive RGB triple into an Illuminant."""
        v = np.asarray(vec, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
            raise DegenerateInputError(f"cannot normalize degenerate illuminant {tuple(v)}")
        n = float(np.linalg.norm(v))
        if n <= 0.0:
            raise DegenerateInputError("cannot normalize zero illuminant")
        v = v / n
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.g, self.b], dtype=np.float64)


@dataclass
class HistogramVector:
    """Normalized 256-bin intensity histogram."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (256,):
            raise DimensionError(f"histogram must have 256 bins, got {v.shape}")
        if v.min() < 0.0:
            raise ParameterError("histogram entries must be nonnegative")
        if abs(float(v.sum()) - 1.0) > UNIT_NORM_TOL:
            raise ParameterError(f"histogram mass must sum to 1, got {v.sum()}")
        self.values = v


@dataclass(frozen=True)
class PatchRect:
    """Axis-aligned rectangle in image pixel coordinates."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 4 or self.h < 4:
            raise ParameterError(f"patch must be at least 4x4, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise BoundsError(f"patch origin must be nonnegative, got ({self.x}, {self.y})")

    def require_within(self, width: int, height: int) -> None:
        if self.x + self.w > width or self.y + self.h > height:
            raise BoundsError(
                f"patch {self.w}x{self.h}+{self.x}+{self.y} exceeds image {width}x{height}"
            )
