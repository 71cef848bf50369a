"""Texture quality gate: rust-coverage and clutter scoring, per-class acceptance.

Generated textures can come out with the wrong amount of rust or contaminated
by text, watermarks, and embedded objects. Coverage is the fraction of pixels
whose HSV values sit in a rust hue band; clutter is the fraction of pixels
with a large Laplacian response, a cheap proxy for dense high-frequency junk.
All thresholds are exposed so they can be calibrated per texture source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .texture import RustClass, TextureImage

RUST_HUE_MIN_DEG = 5.0
RUST_HUE_MAX_DEG = 45.0
RUST_SATURATION_MIN = 0.30
RUST_VALUE_MIN = 0.10
RUST_VALUE_MAX = 0.90

LAPLACIAN_THRESHOLD = 32.0
DEFAULT_CLUTTER_MAX = 0.25


class RejectReason(Enum):
    COVERAGE_BELOW_BAND = "CoverageBelowBand"
    COVERAGE_ABOVE_BAND = "CoverageAboveBand"
    TOO_CLUTTERED = "TooCluttered"


@dataclass(frozen=True)
class CoverageBands:
    """Acceptable rust-coverage interval per class (inclusive bounds)."""

    bands: dict[RustClass, tuple[float, float]] = field(
        default_factory=lambda: {
            RustClass.DEFAULT: (0.0, 0.05),
            RustClass.RUST_STREAKS: (0.05, 0.50),
            RustClass.COMPLETE_RUST: (0.60, 1.0),
        }
    )

    def __post_init__(self):
        for cls, (lo, hi) in self.bands.items():
            if lo > hi:
                raise ValueError(f"band for {cls.canonical_name!r} has min {lo} > max {hi}")

    def band(self, rust_class: RustClass) -> tuple[float, float]:
        return self.bands[rust_class]


DEFAULT_BANDS = CoverageBands()


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    coverage: float
    clutter: float
    reasons: tuple[RejectReason, ...]


def _rust_mask(pixels: np.ndarray) -> np.ndarray:
    rgb = pixels.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    delta = maxc - minc

    value = maxc / 255.0
    with np.errstate(invalid="ignore", divide="ignore"):
        sat = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
        safe_delta = np.where(delta > 0, delta, 1.0)
        hue = np.select(
            [delta == 0, maxc == r, maxc == g],
            [
                0.0,
                60.0 * (((g - b) / safe_delta) % 6.0),
                60.0 * ((b - r) / safe_delta + 2.0),
            ],
            default=60.0 * ((r - g) / safe_delta + 4.0),
        )

    return (
        (hue >= RUST_HUE_MIN_DEG)
        & (hue <= RUST_HUE_MAX_DEG)
        & (sat >= RUST_SATURATION_MIN)
        & (value >= RUST_VALUE_MIN)
        & (value <= RUST_VALUE_MAX)
    )


def rust_coverage(img: TextureImage) -> float:
    """Fraction of pixels classified as rust by the HSV band."""
    mask = _rust_mask(img.pixels)
    return float(mask.mean())


def clutter_score(img: TextureImage) -> float:
    """Fraction of interior pixels with |4-neighbor Laplacian| above threshold.

    Luminance is the Rec.601 weighting 0.299 R + 0.587 G + 0.114 B on the
    8-bit scale.

    Raises:
        ValueError: image smaller than 3x3.
    """
    if img.width < 3 or img.height < 3:
        raise ValueError(f"clutter_score needs at least a 3x3 image, got {img.width}x{img.height}")
    rgb = img.pixels.astype(np.float64)
    lum = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    lap = (
        4.0 * lum[1:-1, 1:-1]
        - lum[:-2, 1:-1]
        - lum[2:, 1:-1]
        - lum[1:-1, :-2]
        - lum[1:-1, 2:]
    )
    return float((np.abs(lap) > LAPLACIAN_THRESHOLD).mean())


def accept_texture(
    img: TextureImage,
    rust_class: RustClass,
    bands: CoverageBands = DEFAULT_BANDS,
    clutter_max: float = DEFAULT_CLUTTER_MAX,
) -> Verdict:
    """Accept or reject a texture for its class; reasons list every violated bound."""
    coverage = rust_coverage(img)
    clutter = clutter_score(img)
    lo, hi = bands.band(rust_class)
    reasons = []
    if coverage < lo:
        reasons.append(RejectReason.COVERAGE_BELOW_BAND)
    if coverage > hi:
        reasons.append(RejectReason.COVERAGE_ABOVE_BAND)
    if clutter > clutter_max:
        reasons.append(RejectReason.TOO_CLUTTERED)
    return Verdict(accepted=not reasons, coverage=coverage, clutter=clutter, reasons=tuple(reasons))
