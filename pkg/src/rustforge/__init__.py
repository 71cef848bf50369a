"""rustforge: deterministic synthetic training data for industrial rust detection.

Generates per-class rust textures, composites them onto base textures with
detail-preserving style transfer, filters unusable textures, renders
randomized scenes with a built-in software rasterizer, writes YOLO-format
annotations, and evaluates detector outputs (per-class P/R/AP50 and mAP50).
"""

from .annotate import PixelBox, YoloAnnotation, bbox_from_idmap, to_pixel_box, to_yolo
from .errors import (
    ConfigError,
    EmptyMeshError,
    ForgeError,
    FormatError,
    GenerationError,
    MissingUvError,
    ParseError,
    SceneError,
)
from .geometry import Aabb, Mesh, Transform, Vec3, load_obj, load_obj_file, make_cylinder, mesh_aabb
from .metrics import Detection, GtBox, MetricsReport, average_precision, evaluate, iou, match_detections
from .pipeline import ForgeConfig, Manifest, RangeSpec, derive_rng, generate_dataset, load_config, sample_scene
from .quality import CoverageBands, RejectReason, Verdict, accept_texture, clutter_score, rust_coverage
from .render import Camera, DirectionalLight, Frame, SceneObject, project, render
from .stylize import ChannelStats, StylizeParams, box_blur, channel_stats, stylize
from .texture import (
    RustClass,
    RustParams,
    TextureImage,
    fbm,
    generate_rust_texture,
    gradient_noise,
    import_textures,
    read_png,
    sample_bilinear,
    write_png,
)

__version__ = "0.1.0"
