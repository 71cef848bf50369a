"""Raster images, PNG I/O, bilinear sampling, and procedural rust textures.

Rust textures come in three severity classes. The two rusty classes are
synthesized from fractal gradient noise pushed through a color ramp; the
default class is the untouched base texture. Externally produced textures
(e.g. from a generative model) can be imported from a directory instead.

All generators are pure functions of their arguments: same inputs, identical
output bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ._hash import mix64, mix64_np
from .errors import FormatError

_HASH_X = np.uint64(0x9E3779B97F4A7C15)
_HASH_Y = np.uint64(0xC2B2AE3D27D4EB4F)


@dataclass
class TextureImage:
    """RGB8 raster image. ``pixels`` is (height, width, 3) uint8, row-major, row 0 on top."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {self.pixels.dtype}")
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"pixels must have shape (H, W, 3), got {self.pixels.shape}")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError("image dimensions must be at least 1x1")

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    def __eq__(self, other) -> bool:
        return isinstance(other, TextureImage) and np.array_equal(self.pixels, other.pixels)

    @staticmethod
    def filled(width: int, height: int, rgb: tuple[int, int, int]) -> "TextureImage":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:, :] = rgb
        return TextureImage(px)


class RustClass(IntEnum):
    """Rust severity classes; the integer values are the YOLO class ids."""

    DEFAULT = 0
    RUST_STREAKS = 1
    COMPLETE_RUST = 2

    @property
    def canonical_name(self) -> str:
        return _CLASS_NAMES[self.value]

    @property
    def slug(self) -> str:
        return _CLASS_SLUGS[self.value]

    @staticmethod
    def from_name(name: str) -> "RustClass":
        key = name.strip().lower().replace("-", " ").replace("_", " ")
        for cls in RustClass:
            if key == cls.canonical_name:
                return cls
        raise ValueError(f"unknown rust class {name!r}; expected one of {list(_CLASS_NAMES)}")


_CLASS_NAMES = ("default", "rust streaks", "complete rust")
_CLASS_SLUGS = ("default", "rust-streaks", "complete-rust")

# Default ramp colors: plausible rust oranges/browns. The first stop takes
# the per-pixel base color so sub-threshold pixels keep the original texture.
_DEFAULT_RAMP: tuple[tuple[float, tuple[int, int, int] | None], ...] = (
    (0.0, None),
    (0.45, (120, 60, 30)),
    (0.7, (160, 80, 35)),
    (1.0, (90, 45, 25)),
)


@dataclass(frozen=True)
class RustParams:
    """Knobs for the procedural rust generators.

    ``ramp`` is a list of (threshold, RGB8) stops with strictly increasing
    thresholds from 0.0 to 1.0; a ``None`` color means "base texture pixel".
    ``coverage_bias`` shifts how much of the field turns to rust (higher is
    more rust); 0.5 is neutral.
    """

    octaves: int = 5
    lacunarity: float = 2.0
    gain: float = 0.5
    ramp: tuple[tuple[float, tuple[int, int, int] | None], ...] = _DEFAULT_RAMP
    anisotropy: float = 8.0
    coverage_bias: float = 0.5

    def __post_init__(self):
        if self.octaves < 1:
            raise ValueError(f"octaves must be >= 1, got {self.octaves}")
        if self.anisotropy < 1:
            raise ValueError(f"anisotropy must be >= 1, got {self.anisotropy}")
        if not 0.0 <= self.coverage_bias <= 1.0:
            raise ValueError(f"coverage_bias must be in [0, 1], got {self.coverage_bias}")
        thresholds = [t for t, _ in self.ramp]
        if len(thresholds) < 2 or thresholds[0] != 0.0 or thresholds[-1] != 1.0:
            raise ValueError("ramp must start at 0.0 and end at 1.0")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("ramp thresholds must be strictly increasing")


DEFAULT_RUST_PARAMS = RustParams()


def _lattice_angle(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Pseudo-random gradient angle in [0, 2*pi) for each lattice point."""
    seed_mixed = np.uint64(mix64(seed))
    h = mix64_np(
        ix.astype(np.int64).view(np.uint64) * _HASH_X
        ^ iy.astype(np.int64).view(np.uint64) * _HASH_Y
        ^ seed_mixed
    )
    return h.astype(np.float64) * (2.0 * np.pi / 2.0**64)


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def gradient_noise(x, y, seed: int):
    """Perlin-style 2D gradient noise in [-1, 1].

    Zero at every integer lattice point, continuous everywhere, and a pure
    function of (x, y, seed). Lattice gradients are unit vectors whose angle
    comes from a SplitMix64-finalized hash of (lattice point, seed).

    ``x`` and ``y`` may be scalars or broadcastable arrays; the result follows
    numpy broadcasting (scalar in, float out).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x, y = np.broadcast_arrays(x, y)
    ix = np.floor(x).astype(np.int64)
    iy = np.floor(y).astype(np.int64)
    fx = x - ix
    fy = y - iy

    with np.errstate(over="ignore"):
        dots = []
        for ox, oy in ((0, 0), (1, 0), (0, 1), (1, 1)):
            angle = _lattice_angle(ix + ox, iy + oy, seed)
            dots.append(np.cos(angle) * (fx - ox) + np.sin(angle) * (fy - oy))

    wx = _fade(fx)
    wy = _fade(fy)
    nx0 = dots[0] + wx * (dots[1] - dots[0])
    nx1 = dots[2] + wx * (dots[3] - dots[2])
    value = nx0 + wy * (nx1 - nx0)
    if value.ndim == 0:
        return float(value)
    return value


def fbm(x, y, seed: int, octaves: int = 5, lacunarity: float = 2.0, gain: float = 0.5):
    """Fractal sum of gradient-noise octaves, remapped to [0, 1].

    Octave ``i`` samples gradient_noise at coordinates scaled by
    ``lacunarity**i`` with seed ``seed XOR i`` and weight ``gain**i``; the
    weighted sum is normalized by the total weight and mapped affinely from
    [-1, 1] to [0, 1].

    Raises:
        ValueError: octaves < 1.
    """
    if octaves < 1:
        raise ValueError(f"octaves must be >= 1, got {octaves}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    total = 0.0
    weight_sum = 0.0
    freq = 1.0
    amp = 1.0
    for i in range(octaves):
        total = total + amp * gradient_noise(x * freq, y * freq, seed ^ i)
        weight_sum += amp
        freq *= lacunarity
        amp *= gain
    value = total / weight_sum
    out = 0.5 * (value + 1.0)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _evaluate_ramp(field_vals: np.ndarray, base: np.ndarray, ramp) -> np.ndarray:
    """Piecewise-linear color ramp; a None stop color means the base pixel.

    ``field_vals`` is (H, W) in [0, 1], ``base`` is (H, W, 3) float. Returns
    (H, W, 3) float.
    """
    thresholds = np.array([t for t, _ in ramp])
    seg = np.clip(np.searchsorted(thresholds, field_vals, side="right") - 1, 0, len(ramp) - 2)
    t0 = thresholds[seg]
    t1 = thresholds[seg + 1]
    w = ((field_vals - t0) / (t1 - t0))[..., None]

    def stop_color(idx: np.ndarray) -> np.ndarray:
        out = np.empty(base.shape, dtype=np.float64)
        for k, (_, color) in enumerate(ramp):
            mask = idx == k
            if not mask.any():
                continue
            out[mask] = base[mask] if color is None else np.asarray(color, dtype=np.float64)
        return out

    return (1.0 - w) * stop_color(seg) + w * stop_color(seg + 1)


# Field-to-ramp windows per class, tuned so default parameters land mid-band:
# complete rust covers most of the texture, streaks stay sparse. The window
# shifts down (more rust) as coverage_bias grows.
_COMPLETE_BASE_FREQ = 4.0
_STREAK_BASE_FREQ = 3.0
_COMPLETE_WINDOW = (0.42, 0.30, 0.28)  # (lo at bias 0, bias range, window width)
_STREAK_WINDOW = (0.62, 0.24, 0.18)


def _rust_field(width: int, height: int, seed: int, params: RustParams, rust_class: RustClass) -> np.ndarray:
    xs = (np.arange(width) + 0.5) / width
    ys = (np.arange(height) + 0.5) / height
    u, v = np.meshgrid(xs, ys)
    if rust_class is RustClass.COMPLETE_RUST:
        fx = u * _COMPLETE_BASE_FREQ
        fy = v * _COMPLETE_BASE_FREQ
        lo0, bias_span, width_ = _COMPLETE_WINDOW
    else:
        # Compress the noise horizontally so thresholded features come out
        # taller than wide: vertical streaks, the way rust runs down a tank.
        # The horizontal frequency is capped so one noise cycle spans at
        # least ~8 texels; denser streaks alias into Laplacian clutter.
        freq_x = max(_STREAK_BASE_FREQ, min(_STREAK_BASE_FREQ * params.anisotropy, width / 8.0))
        fx = u * freq_x
        fy = v * _STREAK_BASE_FREQ
        lo0, bias_span, width_ = _STREAK_WINDOW
    f = fbm(fx, fy, seed, params.octaves, params.lacunarity, params.gain)
    lo = lo0 - bias_span * params.coverage_bias
    return np.clip((f - lo) / width_, 0.0, 1.0)


def generate_rust_texture(
    base: TextureImage,
    rust_class: RustClass,
    seed: int,
    params: RustParams = DEFAULT_RUST_PARAMS,
) -> TextureImage:
    """Synthesize a rust texture of the given class over a base texture.

    DEFAULT returns the base unchanged. COMPLETE_RUST thresholds a fractal
    noise field so most pixels take ramp colors; RUST_STREAKS uses an
    anisotropically squeezed field thresholded to sparse, vertically
    elongated patches. Pixels below threshold keep the base color exactly.
    Output dimensions always equal the base dimensions.
    """
    if rust_class is RustClass.DEFAULT:
        return base
    g = _rust_field(base.width, base.height, seed, params, rust_class)
    base_f = base.pixels.astype(np.float64)
    colors = _evaluate_ramp(g, base_f, params.ramp)
    out = np.clip(np.floor(colors + 0.5), 0, 255).astype(np.uint8)
    # exact base retention below threshold, immune to ramp rounding
    untouched = g <= 0.0
    out[untouched] = base.pixels[untouched]
    return TextureImage(out)


def sample_bilinear(tex: TextureImage, u, v):
    """Bilinearly sample a texture with repeat wrapping.

    Texel centers sit at ((i + 0.5) / W, (j + 0.5) / H); v = 0 is the TOP
    image row. Coordinates wrap via u - floor(u). Returns float RGB (no
    quantization): a (3,) array for scalar inputs, else shape (*uv, 3).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    scalar = u.ndim == 0 and v.ndim == 0
    u, v = np.broadcast_arrays(u, v)

    w, h = tex.width, tex.height
    x = (u - np.floor(u)) * w - 0.5
    y = (v - np.floor(v)) * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    x0m, x1m = x0 % w, (x0 + 1) % w
    y0m, y1m = y0 % h, (y0 + 1) % h

    px = tex.pixels.astype(np.float64)
    c00 = px[y0m, x0m]
    c10 = px[y0m, x1m]
    c01 = px[y1m, x0m]
    c11 = px[y1m, x1m]
    top = c00 + fx * (c10 - c00)
    bot = c01 + fx * (c11 - c01)
    out = top + fy * (bot - top)
    return out[0] if scalar and out.ndim == 2 else out


_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _check_png_header(data: bytes, name: str) -> None:
    if len(data) < 26 or data[:8] != _PNG_SIGNATURE:
        raise FormatError(f"{name}: not a PNG file")
    bit_depth, color_type = struct.unpack_from("BB", data, 24)
    if bit_depth != 8 or color_type not in (2, 6):
        raise FormatError(
            f"{name}: unsupported PNG (bit depth {bit_depth}, color type {color_type}); need 8-bit RGB or RGBA"
        )


def read_png(path) -> TextureImage:
    """Read an 8-bit RGB or RGBA PNG; alpha is dropped.

    Raises:
        FormatError: not a PNG, or unsupported bit depth / color type.
        OSError: the file cannot be read.
    """
    path = Path(path)
    data = path.read_bytes()
    _check_png_header(data, path.name)
    try:
        with Image.open(path) as img:
            img.load()
            arr = np.asarray(img)
    except (UnidentifiedImageError, SyntaxError, ValueError) as exc:
        raise FormatError(f"{path.name}: undecodable PNG ({exc})") from exc
    return TextureImage(np.ascontiguousarray(arr[:, :, :3]))


def write_png(image: TextureImage, path) -> None:
    """Write an 8-bit RGB non-interlaced PNG. read_png(write_png(x)) is pixel-exact."""
    Image.fromarray(image.pixels, mode="RGB").save(path, format="PNG")


@dataclass(frozen=True)
class ImportRecord:
    """Provenance of an imported texture file."""

    file_name: str
    rust_class: RustClass


@dataclass(frozen=True)
class ImportFailure:
    file_name: str
    reason: str


def import_textures(directory, rust_class: RustClass) -> tuple[list[tuple[TextureImage, ImportRecord]], list[ImportFailure]]:
    """Load every PNG in a directory (non-recursive, sorted by file name).

    Unreadable or undecodable files land in the failure list instead of
    aborting the import. An empty directory yields an empty list.

    Raises:
        OSError: the directory does not exist or cannot be listed.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"texture import directory not found: {directory}")
    items: list[tuple[TextureImage, ImportRecord]] = []
    failures: list[ImportFailure] = []
    for path in sorted(directory.iterdir(), key=lambda p: p.name):
        if not path.is_file() or path.suffix.lower() != ".png":
            continue
        try:
            tex = read_png(path)
        except (FormatError, OSError) as exc:
            failures.append(ImportFailure(path.name, str(exc)))
            continue
        items.append((tex, ImportRecord(path.name, rust_class)))
    return items, failures
