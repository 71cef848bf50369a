"""End-to-end dataset generation: seeded randomization, rendering, labels, manifest.

Every random draw comes from a SplitMix64 stream derived from (seed, stream
tag, index), so each image slot is a pure function of the configuration and
the whole dataset is byte-reproducible. Per image the draw order is fixed:
camera distance, azimuth, elevation, light yaw, pitch, intensity, ambient,
then texture seeds (one per generation attempt).

Output layout::

    out/images/{train,val}/<stem>.png
    out/labels/{train,val}/<stem>.txt
    out/classes.txt
    out/manifest.json
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._hash import GAMMA, MASK64, fnv1a64, mix64, mix64_np
from .annotate import bbox_from_idmap, to_yolo, visible_pixel_count, write_label_file
from .errors import ConfigError, GenerationError
from .geometry import Transform, Vec3, load_obj_file, make_cylinder, mesh_aabb
from .metrics import GtBox
from .quality import DEFAULT_CLUTTER_MAX, CoverageBands, Verdict, accept_texture
from .render import Camera, DirectionalLight, SceneObject, render
from .stylize import StylizeParams, stylize
from .texture import (
    DEFAULT_RUST_PARAMS,
    RustClass,
    RustParams,
    TextureImage,
    generate_rust_texture,
    import_textures,
    read_png,
    write_png,
)

CAMERA_VFOV_DEG = 50.0
CAMERA_NEAR = 0.05
CAMERA_FAR = 100.0
OBJECT_ID = 1
MAX_TEXTURE_ATTEMPTS = 16
BUILTIN_CYLINDER = "builtin:cylinder"
_CYLINDER_RADIUS = 0.5
_CYLINDER_HEIGHT = 1.0
_CYLINDER_SEGMENTS = 48
_BASE_TEXTURE_SIZE = 256


class SplitMix64:
    """Counter-based SplitMix64 stream; scalar and bulk draws agree exactly."""

    def __init__(self, state: int):
        self._base = state & MASK64
        self._count = 0

    def next_u64(self) -> int:
        self._count += 1
        return mix64((self._base + self._count * GAMMA) & MASK64)

    def next_u64_array(self, n: int) -> np.ndarray:
        counts = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            states = np.uint64(self._base) + np.uint64(GAMMA) * counts
            return mix64_np(states)

    def uniform(self, lo: float, hi: float) -> float:
        u = (self.next_u64() >> 11) * 2.0**-53  # in [0, 1)
        return lo + (hi - lo) * u

    def uniform_array(self, lo: float, hi: float, n: int) -> np.ndarray:
        u = (self.next_u64_array(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return lo + (hi - lo) * u


def derive_rng(seed: int, tag: str, index: int) -> SplitMix64:
    """Deterministic sub-stream for (seed, tag, index); distinct pairs are independent."""
    h = mix64((seed & MASK64) ^ fnv1a64(tag))
    h = mix64(h ^ ((index * GAMMA) & MASK64))
    return SplitMix64(h)


@dataclass(frozen=True)
class RangeSpec:
    """Closed numeric range; degenerate (min == max) pins the value exactly."""

    min: float
    max: float

    def __post_init__(self):
        if self.min > self.max:
            raise ValueError(f"range min {self.min} > max {self.max}")

    def sample(self, rng: SplitMix64) -> float:
        return rng.uniform(self.min, self.max)

    @staticmethod
    def parse(value, key: str) -> "RangeSpec":
        if isinstance(value, (int, float)):
            return RangeSpec(float(value), float(value))
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return RangeSpec(float(value[0]), float(value[1]))
        raise ConfigError(f"config key {key!r} must be a number or a [min, max] pair")


@dataclass(frozen=True)
class ForgeConfig:
    """Everything a forge run needs; see README for the JSON schema."""

    seed: int = 0
    images_per_class: int = 667
    resolution: tuple[int, int] = (640, 480)
    camera_distance: RangeSpec = RangeSpec(2.0, 3.5)
    camera_azimuth: RangeSpec = RangeSpec(0.0, 360.0)
    camera_elevation: RangeSpec = RangeSpec(5.0, 55.0)
    light_yaw: RangeSpec = RangeSpec(0.0, 360.0)
    light_pitch: RangeSpec = RangeSpec(20.0, 70.0)
    light_intensity: RangeSpec = RangeSpec(0.6, 1.0)
    ambient: RangeSpec = RangeSpec(0.25, 0.45)
    model: str = BUILTIN_CYLINDER
    base_texture: str | None = None
    texture_mode: str = "procedural"  # or "import"
    import_dir: str | None = None
    bands: CoverageBands = field(default_factory=CoverageBands)
    clutter_max: float = DEFAULT_CLUTTER_MAX
    background: tuple[int, int, int] = (110, 110, 110)
    output_dir: str = "out"
    train_fraction: float = 0.9
    val_fraction: float = 0.1
    min_label_pixels: int = 9

    def validate(self) -> "ForgeConfig":
        if self.images_per_class < 1:
            raise ConfigError(f"images_per_class must be a positive integer, got {self.images_per_class}")
        w, h = self.resolution
        if w < 1 or h < 1:
            raise ConfigError(f"resolution must be positive, got {self.resolution}")
        if abs(self.train_fraction + self.val_fraction - 1.0) > 1e-9:
            raise ConfigError("split fractions must sum to 1")
        if not 0.0 <= self.train_fraction <= 1.0:
            raise ConfigError("train fraction must be in [0, 1]")
        if self.texture_mode not in ("procedural", "import"):
            raise ConfigError(f"texture mode must be 'procedural' or 'import', got {self.texture_mode!r}")
        if self.texture_mode == "import" and not self.import_dir:
            raise ConfigError("texture mode 'import' requires an import directory")
        if abs(self.camera_elevation.min) >= 89.9 or abs(self.camera_elevation.max) >= 89.9:
            raise ConfigError("camera elevation must stay within (-89.9, 89.9) degrees")
        if self.min_label_pixels < 1:
            raise ConfigError("min_label_pixels must be >= 1")
        return self


def _take(data: dict, key: str, default):
    return data.pop(key) if key in data else default


def _no_leftovers(data: dict, context: str) -> None:
    if data:
        raise ConfigError(f"unknown config key {next(iter(data))!r} in {context}")


def config_from_json_dict(data: dict) -> ForgeConfig:
    """Build a ForgeConfig from parsed JSON; unknown keys are an error."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    data = dict(data)

    camera = dict(_take(data, "camera", {}))
    light = dict(_take(data, "light", {}))
    textures = dict(_take(data, "textures", {}))
    quality = dict(_take(data, "quality", {}))
    split = dict(_take(data, "split", {}))

    bands_raw = _take(quality, "bands", None)
    if bands_raw is None:
        bands = CoverageBands()
    else:
        band_map = {}
        for name, pair in dict(bands_raw).items():
            cls = RustClass.from_name(name)
            band_map[cls] = (float(pair[0]), float(pair[1]))
        missing = [c for c in RustClass if c not in band_map]
        if missing:
            raise ConfigError(f"quality.bands is missing class {missing[0].canonical_name!r}")
        bands = CoverageBands(band_map)

    resolution = _take(data, "resolution", [640, 480])
    if not (isinstance(resolution, (list, tuple)) and len(resolution) == 2):
        raise ConfigError("resolution must be a [width, height] pair")
    background = _take(data, "background", [110, 110, 110])
    if not (isinstance(background, (list, tuple)) and len(background) == 3):
        raise ConfigError("background must be an [r, g, b] triple")

    config = ForgeConfig(
        seed=int(_take(data, "seed", 0)),
        images_per_class=int(_take(data, "images_per_class", 667)),
        resolution=(int(resolution[0]), int(resolution[1])),
        camera_distance=RangeSpec.parse(_take(camera, "distance", [2.0, 3.5]), "camera.distance"),
        camera_azimuth=RangeSpec.parse(_take(camera, "azimuth", [0.0, 360.0]), "camera.azimuth"),
        camera_elevation=RangeSpec.parse(_take(camera, "elevation", [5.0, 55.0]), "camera.elevation"),
        light_yaw=RangeSpec.parse(_take(light, "yaw", [0.0, 360.0]), "light.yaw"),
        light_pitch=RangeSpec.parse(_take(light, "pitch", [20.0, 70.0]), "light.pitch"),
        light_intensity=RangeSpec.parse(_take(light, "intensity", [0.6, 1.0]), "light.intensity"),
        ambient=RangeSpec.parse(_take(light, "ambient", [0.25, 0.45]), "light.ambient"),
        model=str(_take(data, "model", BUILTIN_CYLINDER)),
        base_texture=_take(data, "base_texture", None),
        texture_mode=str(_take(textures, "mode", "procedural")),
        import_dir=_take(textures, "dir", None),
        bands=bands,
        clutter_max=float(_take(quality, "clutter_max", DEFAULT_CLUTTER_MAX)),
        background=(int(background[0]), int(background[1]), int(background[2])),
        output_dir=str(_take(data, "output_dir", "out")),
        train_fraction=float(_take(split, "train", 0.9)),
        val_fraction=float(_take(split, "val", 0.1)),
        min_label_pixels=int(_take(data, "min_label_pixels", 9)),
    )
    _no_leftovers(camera, "camera")
    _no_leftovers(light, "light")
    _no_leftovers(textures, "textures")
    _no_leftovers(quality, "quality")
    _no_leftovers(split, "split")
    _no_leftovers(data, "config root")
    return config.validate()


def load_config(path) -> ForgeConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_json_dict(data)


def default_base_texture(size: int = _BASE_TEXTURE_SIZE) -> TextureImage:
    """Built-in base texture: light gray with faint horizontal banding.

    The bands give the style-transfer detail layer some structure to keep;
    the contrast stays below the clutter Laplacian threshold.
    """
    px = np.full((size, size, 3), 175, dtype=np.uint8)
    rows = (np.arange(size) // 16) % 4 == 0
    px[rows] = 160
    return TextureImage(px)


class _Assets:
    """Mesh, base texture, and accepted texture imports for one config."""

    def __init__(self, config: ForgeConfig):
        if config.model == BUILTIN_CYLINDER:
            self.mesh = make_cylinder(_CYLINDER_RADIUS, _CYLINDER_HEIGHT, _CYLINDER_SEGMENTS)
        else:
            self.mesh = load_obj_file(config.model)
        self.center = mesh_aabb(self.mesh, Transform()).center
        self.base = read_png(config.base_texture) if config.base_texture else default_base_texture()
        self._config = config
        self._imports: dict[RustClass, list] = {}

    def accepted_imports(self, rust_class: RustClass) -> list[tuple[TextureImage, str, Verdict]]:
        """Imports for a class that pass the quality gate, in file-name order."""
        if rust_class not in self._imports:
            class_dir = Path(self._config.import_dir) / rust_class.canonical_name
            items, _failures = import_textures(class_dir, rust_class)
            accepted = []
            for tex, record in items:
                verdict = accept_texture(tex, rust_class, self._config.bands, self._config.clutter_max)
                if verdict.accepted:
                    accepted.append((tex, record.file_name, verdict))
            self._imports[rust_class] = accepted
        pool = self._imports[rust_class]
        if not pool:
            raise ConfigError(
                f"no accepted textures for class {rust_class.canonical_name!r} in import mode"
            )
        return pool


@dataclass
class SceneSample:
    """A fully determined scene for one (class, index) slot."""

    camera: Camera
    light: DirectionalLight
    scene_object: SceneObject
    rust_texture: TextureImage
    provenance: dict


def _verdict_json(verdict: Verdict) -> dict:
    return {
        "accepted": verdict.accepted,
        "coverage": verdict.coverage,
        "clutter": verdict.clutter,
        "reasons": [r.value for r in verdict.reasons],
    }


def _select_texture(
    config: ForgeConfig,
    rust_class: RustClass,
    index: int,
    rng: SplitMix64,
    assets: _Assets,
    params: RustParams,
) -> tuple[TextureImage, dict]:
    if config.texture_mode == "import":
        pool = assets.accepted_imports(rust_class)
        tex, file_name, verdict = pool[index % len(pool)]
        return tex, {
            "mode": "import",
            "file": file_name,
            "pool_size": len(pool),
            "verdict": _verdict_json(verdict),
        }

    attempts = []
    for _ in range(MAX_TEXTURE_ATTEMPTS):
        tex_seed = rng.next_u64()
        tex = generate_rust_texture(assets.base, rust_class, tex_seed, params)
        verdict = accept_texture(tex, rust_class, config.bands, config.clutter_max)
        attempts.append({"seed": tex_seed, **_verdict_json(verdict)})
        if verdict.accepted:
            return tex, {"mode": "procedural", "attempts": attempts}
    raise GenerationError(
        f"class {rust_class.canonical_name!r} index {index}: "
        f"{MAX_TEXTURE_ATTEMPTS} texture attempts all rejected"
    )


def sample_scene(
    config: ForgeConfig,
    rust_class: RustClass,
    index: int,
    _assets: _Assets | None = None,
    stylize_params: StylizeParams = StylizeParams(),
    rust_params: RustParams = DEFAULT_RUST_PARAMS,
) -> SceneSample:
    """Deterministically sample camera, light, and texture for one image slot.

    The camera sits on a sphere around the object's bounds center at the drawn
    distance/azimuth/elevation and looks at that center. In procedural mode
    the rust texture is regenerated with follow-up seeds until the quality
    gate accepts it (up to 16 attempts); in import mode textures rotate
    round-robin through the accepted pool.

    Raises:
        GenerationError: 16 consecutive texture rejections for this slot.
        ConfigError: import mode with no accepted textures for the class.
    """
    assets = _assets if _assets is not None else _Assets(config)
    rng = derive_rng(config.seed, f"scene:{int(rust_class)}", index)

    distance = config.camera_distance.sample(rng)
    azimuth = config.camera_azimuth.sample(rng)
    elevation = config.camera_elevation.sample(rng)
    light_yaw = config.light_yaw.sample(rng)
    light_pitch = config.light_pitch.sample(rng)
    intensity = config.light_intensity.sample(rng)
    ambient = config.ambient.sample(rng)

    az, el = math.radians(azimuth), math.radians(elevation)
    offset = Vec3(
        distance * math.cos(el) * math.cos(az),
        distance * math.sin(el),
        distance * math.cos(el) * math.sin(az),
    )
    camera = Camera(
        position=assets.center + offset,
        look_at=assets.center,
        vfov_deg=CAMERA_VFOV_DEG,
        near=CAMERA_NEAR,
        far=CAMERA_FAR,
    )
    light = DirectionalLight.from_angles(light_yaw, light_pitch, intensity, ambient)

    rust_tex, provenance = _select_texture(config, rust_class, index, rng, assets, rust_params)
    applied = stylize(assets.base, rust_tex, stylize_params)
    obj = SceneObject(
        mesh=assets.mesh,
        texture=applied,
        transform=Transform(),
        rust_class=rust_class,
        object_id=OBJECT_ID,
    )
    provenance = {
        "camera": {"distance": distance, "azimuth": azimuth, "elevation": elevation},
        "light": {"yaw": light_yaw, "pitch": light_pitch, "intensity": intensity, "ambient": ambient},
        "texture": provenance,
    }
    return SceneSample(camera=camera, light=light, scene_object=obj, rust_texture=rust_tex, provenance=provenance)


@dataclass(frozen=True)
class ManifestEntry:
    image: str
    label: str
    class_id: int
    class_name: str
    scene: dict

    def to_json_dict(self) -> dict:
        return {
            "image": self.image,
            "label": self.label,
            "class_id": self.class_id,
            "class_name": self.class_name,
            "scene": self.scene,
        }


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    output_dir: Path

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump([e.to_json_dict() for e in self.entries], fh, indent=2)
            fh.write("\n")


def generate_dataset(config: ForgeConfig, log=None) -> Manifest:
    """Generate the full annotated dataset for a config; see module docstring.

    ``log`` is an optional callable receiving one progress string per image.

    Raises:
        ConfigError: invalid configuration (including images_per_class < 1).
        GenerationError: a slot exhausted its texture attempts.
        OSError: output files cannot be written.
    """
    config.validate()
    assets = _Assets(config)
    out = Path(config.output_dir)
    for split in ("train", "val"):
        (out / "images" / split).mkdir(parents=True, exist_ok=True)
        (out / "labels" / split).mkdir(parents=True, exist_ok=True)

    entries: list[ManifestEntry] = []
    for rust_class in RustClass:
        for index in range(config.images_per_class):
            sample = sample_scene(config, rust_class, index, _assets=assets)
            frame = render(
                [sample.scene_object],
                sample.camera,
                sample.light,
                config.resolution,
                config.background,
            )
            slot = int(rust_class) * config.images_per_class + index
            split_draw = derive_rng(config.seed, "split", slot).uniform(0.0, 1.0)
            split = "train" if split_draw < config.train_fraction else "val"
            stem = f"{rust_class.slug}_{index:05d}"
            image_rel = f"images/{split}/{stem}.png"
            label_rel = f"labels/{split}/{stem}.txt"

            write_png(frame.color, out / image_rel)
            annotations = []
            if visible_pixel_count(frame, OBJECT_ID) >= config.min_label_pixels:
                box = bbox_from_idmap(frame, OBJECT_ID)
                annotations.append(to_yolo(box, config.resolution, int(rust_class)))
            with open(out / label_rel, "w", encoding="utf-8", newline="") as fh:
                write_label_file(annotations, fh)

            entries.append(
                ManifestEntry(
                    image=image_rel,
                    label=label_rel,
                    class_id=int(rust_class),
                    class_name=rust_class.canonical_name,
                    scene=sample.provenance,
                )
            )
            if log is not None:
                log(f"{stem} -> {split} ({len(annotations)} box)")

    with open(out / "classes.txt", "w", encoding="utf-8", newline="") as fh:
        for cls in RustClass:
            fh.write(cls.canonical_name + "\n")
    manifest = Manifest(entries=entries, output_dir=out)
    manifest.write_json(out / "manifest.json")
    return manifest


def load_ground_truth(dataset_dir) -> list[GtBox]:
    """Read every label file in a generated dataset back as ground-truth boxes."""
    from .annotate import parse_label_file

    dataset_dir = Path(dataset_dir)
    labels_root = dataset_dir / "labels"
    if not labels_root.is_dir():
        raise FileNotFoundError(f"no labels directory under {dataset_dir}")
    gts: list[GtBox] = []
    for label_path in sorted(labels_root.glob("*/*.txt")):
        with open(label_path, "r", encoding="utf-8") as fh:
            for anno in parse_label_file(fh):
                gts.append(GtBox(image_id=label_path.stem, class_id=anno.class_id, box=(anno.cx, anno.cy, anno.w, anno.h)))
    return gts
