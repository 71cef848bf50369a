"""Statistics-based style transfer that keeps the content image's fine detail.

Per RGB channel the content is remapped so its mean and standard deviation
match the style image, then a high-pass detail layer (content minus its box
blur) is added back. This recolors the base texture toward the rust palette
without destroying printed patterns, seams, and labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .texture import TextureImage


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean and population standard deviation, 0-255 scale."""

    mean: np.ndarray
    stddev: np.ndarray


@dataclass(frozen=True)
class StylizeParams:
    strength: float = 1.0
    detail_weight: float = 0.6
    blur_radius: int = 2
    epsilon: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength must be in [0, 1], got {self.strength}")
        if self.detail_weight < 0:
            raise ValueError(f"detail_weight must be >= 0, got {self.detail_weight}")
        if self.blur_radius < 1:
            raise ValueError(f"blur_radius must be >= 1, got {self.blur_radius}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


DEFAULT_STYLIZE_PARAMS = StylizeParams()


def channel_stats(img: TextureImage) -> ChannelStats:
    """Arithmetic mean and population standard deviation per RGB channel."""
    px = img.pixels.reshape(-1, 3).astype(np.float64)
    return ChannelStats(mean=px.mean(axis=0), stddev=px.std(axis=0))


def box_blur(img, radius: int, passes: int = 2) -> np.ndarray:
    """Separable box filter with clamp-to-edge handling; float output.

    The window is (2*radius + 1) wide and the filter is applied ``passes``
    times (two passes approximate a Gaussian). Accepts a TextureImage or a
    float array shaped (H, W, C) or (H, W).
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    if passes < 1:
        raise ValueError(f"passes must be >= 1, got {passes}")
    data = img.pixels if isinstance(img, TextureImage) else img
    out = np.asarray(data, dtype=np.float64)
    size = 2 * radius + 1
    for _ in range(passes):
        out = uniform_filter1d(out, size=size, axis=1, mode="nearest")
        out = uniform_filter1d(out, size=size, axis=0, mode="nearest")
    return out


def stylize(
    content: TextureImage,
    style: TextureImage,
    params: StylizeParams = DEFAULT_STYLIZE_PARAMS,
) -> TextureImage:
    """Transfer the style image's channel statistics onto the content image.

    Per channel: ``transferred = (content - mu_c) * (sigma_s / max(sigma_c,
    epsilon)) + mu_s``. The output blends content and transferred by
    ``strength`` and adds ``detail_weight * strength`` times the content
    high-pass layer, clamped to [0, 255]. Dimensions follow the content image;
    the style image only contributes global statistics, so its size is free.
    """
    c_stats = channel_stats(content)
    s_stats = channel_stats(style)
    content_f = content.pixels.astype(np.float64)

    scale = s_stats.stddev / np.maximum(c_stats.stddev, params.epsilon)
    transferred = (content_f - c_stats.mean) * scale + s_stats.mean

    s = params.strength
    out = (1.0 - s) * content_f + s * transferred
    if params.detail_weight > 0 and s > 0:
        detail = content_f - box_blur(content_f, params.blur_radius, passes=2)
        out = out + params.detail_weight * s * detail
    out = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return TextureImage(out)
