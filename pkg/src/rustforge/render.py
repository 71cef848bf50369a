"""Headless software rasterizer with a per-pixel object-id map.

Z-buffered triangle rasterization, near-plane clipping, perspective-correct
UV interpolation, bilinear texturing, flat (face-normal) directional shading.
Screen coordinates are snapped to 1/256-pixel integers so that edge functions
are exact: two triangles sharing an edge never double-write or leave a gap
(top-left fill rule), and output is bit-identical across runs.

The id map records which object won each pixel; it is what makes bounding-box
annotation exact under occlusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SceneError
from .geometry import Mesh, Transform, Vec3
from .texture import RustClass, TextureImage, sample_bilinear

SUBPIXEL = 256  # screen coords are snapped to 1/256 px before edge tests
ID_EMPTY = -1
DEFAULT_BACKGROUND = (110, 110, 110)


@dataclass(frozen=True)
class Camera:
    """Perspective camera defined by a look-at pose.

    ``vfov_deg`` is the vertical field of view; the horizontal one follows
    from the render aspect ratio. The view basis is right-handed.
    """

    position: Vec3
    look_at: Vec3
    up: Vec3 = Vec3(0.0, 1.0, 0.0)
    vfov_deg: float = 50.0
    near: float = 0.05
    far: float = 100.0

    def __post_init__(self):
        if (self.position - self.look_at).norm() == 0.0:
            raise ValueError("camera position must differ from look_at")
        if not 0.0 < self.vfov_deg < 180.0:
            raise ValueError(f"vertical FOV must be in (0, 180), got {self.vfov_deg}")
        if not 0.0 < self.near < self.far:
            raise ValueError(f"need 0 < near < far, got near={self.near}, far={self.far}")
        forward = (self.look_at - self.position).normalized()
        if forward.cross(self.up).norm() < 1e-9:
            raise ValueError("camera up vector is parallel to the view direction")

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (right, up, forward) unit axes as float64 arrays."""
        forward = (self.look_at - self.position).normalized()
        right = forward.cross(self.up).normalized()
        up = right.cross(forward)
        return right.as_array(), up.as_array(), forward.as_array()


@dataclass(frozen=True)
class DirectionalLight:
    """Directional light; ``direction`` points from the light toward the scene."""

    direction: Vec3
    intensity: float = 1.0
    ambient: float = 0.3

    def __post_init__(self):
        if abs(self.direction.norm() - 1.0) > 1e-4:
            raise ValueError("light direction must be a unit vector (within 1e-4)")
        if self.intensity < 0:
            raise ValueError(f"light intensity must be >= 0, got {self.intensity}")
        if not 0.0 <= self.ambient <= 1.0:
            raise ValueError(f"ambient must be in [0, 1], got {self.ambient}")

    @staticmethod
    def from_angles(yaw_deg: float, pitch_deg: float, intensity: float = 1.0, ambient: float = 0.3) -> "DirectionalLight":
        """Light shining down from azimuth ``yaw_deg`` at elevation ``pitch_deg``."""
        yaw, pitch = math.radians(yaw_deg), math.radians(pitch_deg)
        toward_scene = Vec3(
            -math.cos(pitch) * math.cos(yaw),
            -math.sin(pitch),
            -math.cos(pitch) * math.sin(yaw),
        ).normalized()
        return DirectionalLight(toward_scene, intensity, ambient)


@dataclass(frozen=True)
class SceneObject:
    mesh: Mesh
    texture: TextureImage
    transform: Transform = Transform()
    rust_class: RustClass = RustClass.DEFAULT
    object_id: int = 0


@dataclass
class Frame:
    """Rendered output: color image, object-id map, and the internal depth buffer.

    ``id_map`` is (H, W) int32 with -1 where no object covers the pixel.
    """

    color: TextureImage
    id_map: np.ndarray
    depth: np.ndarray = field(repr=False, default=None)


def project(camera: Camera, resolution: tuple[int, int], p: Vec3):
    """Project a world point to screen coordinates.

    Returns (x, y, depth) with (0, 0) at the top-left pixel corner, y growing
    downward, and depth measured along the view axis; None when the point is
    behind the near plane.
    """
    w, h = resolution
    right, up, forward = camera.basis()
    d = p.as_array() - camera.position.as_array()
    x_v, y_v, z_v = float(d @ right), float(d @ up), float(d @ forward)
    if z_v < camera.near:
        return None
    t = math.tan(math.radians(camera.vfov_deg) / 2.0)
    aspect = w / h
    x_s = (1.0 + x_v / (z_v * t * aspect)) * w / 2.0
    y_s = (1.0 - y_v / (z_v * t)) * h / 2.0
    return x_s, y_s, z_v


def _clip_near(poly: list[tuple[np.ndarray, np.ndarray]], near: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Sutherland-Hodgman clip of a (view-space position, uv) polygon to z >= near."""
    out = []
    n = len(poly)
    for i in range(n):
        (p0, uv0), (p1, uv1) = poly[i], poly[(i + 1) % n]
        in0, in1 = p0[2] >= near, p1[2] >= near
        if in0:
            out.append((p0, uv0))
        if in0 != in1:
            s = (near - p0[2]) / (p1[2] - p0[2])
            out.append((p0 + s * (p1 - p0), uv0 + s * (uv1 - uv0)))
    return out


def _orient2d_grid(ax, ay, bx, by, qx, qy):
    return (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)


def _is_top_left(ax: int, ay: int, bx: int, by: int) -> bool:
    # For positive-area winding in y-down coordinates: a top edge is
    # horizontal with the interior below it, a left edge goes up the screen.
    return (ay == by and bx > ax) or (by < ay)


def render(
    scene: list[SceneObject],
    camera: Camera,
    light: DirectionalLight,
    resolution: tuple[int, int],
    background: tuple[int, int, int] = DEFAULT_BACKGROUND,
) -> Frame:
    """Rasterize a scene into a color frame plus per-pixel object ids.

    Shading per triangle is ``texel * clamp(ambient + intensity * max(0,
    N dot L), 0, 1)`` with N the face normal from the triangle winding and L
    pointing toward the light. Nearest depth wins per pixel; exact depth ties
    go to the lower object id, so output is independent of draw order.

    Raises:
        SceneError: missing mesh/texture references or duplicate object ids.
    """
    w, h = resolution
    if w < 1 or h < 1:
        raise ValueError(f"resolution must be positive, got {resolution}")

    seen_ids = set()
    for obj in scene:
        if obj.mesh is None or obj.texture is None:
            raise SceneError(f"scene object {obj.object_id} has an unresolvable mesh or texture reference")
        if obj.object_id in seen_ids:
            raise SceneError(f"duplicate object id {obj.object_id}")
        if not 0 <= obj.object_id < 2**31:
            raise SceneError(f"object id {obj.object_id} out of range")
        seen_ids.add(obj.object_id)

    color = np.empty((h, w, 3), dtype=np.uint8)
    color[:, :] = background
    depth = np.full((h, w), np.inf, dtype=np.float64)
    id_map = np.full((h, w), ID_EMPTY, dtype=np.int32)

    right, up, forward = camera.basis()
    cam_pos = camera.position.as_array()
    t = math.tan(math.radians(camera.vfov_deg) / 2.0)
    aspect = w / h
    l_toward_light = -light.direction.as_array()

    for obj in scene:
        mesh = obj.mesh
        world = obj.transform.apply(mesh.positions)
        d = world - cam_pos
        view = np.stack([d @ right, d @ up, d @ forward], axis=1)

        for tri in mesh.triangles:
            p_idx = tri[:, 0]
            uv_idx = tri[:, 1]
            w0, w1v, w2v = world[p_idx[0]], world[p_idx[1]], world[p_idx[2]]
            n = np.cross(w1v - w0, w2v - w0)
            n_len = np.linalg.norm(n)
            if n_len == 0.0:
                continue
            lambert = max(0.0, float(n @ l_toward_light) / n_len)
            shade = min(1.0, max(0.0, light.ambient + light.intensity * lambert))

            poly = [(view[p_idx[k]].copy(), mesh.uvs[uv_idx[k]].copy()) for k in range(3)]
            poly = _clip_near(poly, camera.near)
            if len(poly) < 3:
                continue
            for k in range(2, len(poly)):
                fan = (poly[0], poly[k - 1], poly[k])
                _raster_one(fan, shade, obj.texture, obj.object_id, (w, h), t, aspect, color, depth, id_map)

    return Frame(color=TextureImage(color), id_map=id_map, depth=depth)


def _raster_one(corners, shade, tex, oid, resolution, tan_half, aspect, color, depth, id_map):
    w, h = resolution
    xq = np.empty(3, dtype=np.int64)
    yq = np.empty(3, dtype=np.int64)
    z = np.empty(3, dtype=np.float64)
    uv = np.empty((3, 2), dtype=np.float64)
    for i, (p, pt_uv) in enumerate(corners):
        zs = p[2]
        x_s = (1.0 + p[0] / (zs * tan_half * aspect)) * w / 2.0
        y_s = (1.0 - p[1] / (zs * tan_half)) * h / 2.0
        xq[i] = int(round(x_s * SUBPIXEL))
        yq[i] = int(round(y_s * SUBPIXEL))
        z[i] = zs
        uv[i] = pt_uv

    area2 = int((xq[1] - xq[0]) * (yq[2] - yq[0]) - (yq[1] - yq[0]) * (xq[2] - xq[0]))
    if area2 == 0:
        return
    if area2 < 0:
        xq[1], xq[2] = xq[2], xq[1]
        yq[1], yq[2] = yq[2], yq[1]
        z[1], z[2] = z[2], z[1]
        uv[[1, 2]] = uv[[2, 1]]
        area2 = -area2

    # pixel-bounding box intersected with the screen
    px_min = max(0, (int(xq.min()) - SUBPIXEL // 2) // SUBPIXEL)
    px_max = min(w - 1, (int(xq.max()) + SUBPIXEL // 2) // SUBPIXEL)
    py_min = max(0, (int(yq.min()) - SUBPIXEL // 2) // SUBPIXEL)
    py_max = min(h - 1, (int(yq.max()) + SUBPIXEL // 2) // SUBPIXEL)
    if px_min > px_max or py_min > py_max:
        return

    qx = (np.arange(px_min, px_max + 1, dtype=np.int64) * SUBPIXEL + SUBPIXEL // 2)[None, :]
    qy = (np.arange(py_min, py_max + 1, dtype=np.int64) * SUBPIXEL + SUBPIXEL // 2)[:, None]

    e0 = _orient2d_grid(xq[1], yq[1], xq[2], yq[2], qx, qy)
    e1 = _orient2d_grid(xq[2], yq[2], xq[0], yq[0], qx, qy)
    e2 = _orient2d_grid(xq[0], yq[0], xq[1], yq[1], qx, qy)
    tl0 = _is_top_left(xq[1], yq[1], xq[2], yq[2])
    tl1 = _is_top_left(xq[2], yq[2], xq[0], yq[0])
    tl2 = _is_top_left(xq[0], yq[0], xq[1], yq[1])
    inside = (
        ((e0 > 0) | ((e0 == 0) & tl0))
        & ((e1 > 0) | ((e1 == 0) & tl1))
        & ((e2 > 0) | ((e2 == 0) & tl2))
    )
    if not inside.any():
        return

    lam0 = e0.astype(np.float64) / area2
    lam1 = e1.astype(np.float64) / area2
    lam2 = e2.astype(np.float64) / area2
    iz = 1.0 / z
    inv_z = lam0 * iz[0] + lam1 * iz[1] + lam2 * iz[2]
    frag_z = 1.0 / inv_z
    u_val = (lam0 * uv[0, 0] * iz[0] + lam1 * uv[1, 0] * iz[1] + lam2 * uv[2, 0] * iz[2]) / inv_z
    v_val = (lam0 * uv[0, 1] * iz[0] + lam1 * uv[1, 1] * iz[1] + lam2 * uv[2, 1] * iz[2]) / inv_z

    d_box = depth[py_min : py_max + 1, px_min : px_max + 1]
    i_box = id_map[py_min : py_max + 1, px_min : px_max + 1]
    c_box = color[py_min : py_max + 1, px_min : px_max + 1]
    wins = inside & ((frag_z < d_box) | ((frag_z == d_box) & (oid < i_box)))
    if not wins.any():
        return

    texel = sample_bilinear(tex, u_val[wins], v_val[wins])
    rgb = np.clip(np.floor(texel * shade + 0.5), 0, 255).astype(np.uint8)
    d_box[wins] = frag_z[wins]
    i_box[wins] = oid
    c_box[wins] = rgb
