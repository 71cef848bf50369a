"""Triangle meshes with UV coordinates: OBJ loading, primitives, transforms, bounds.

Conventions fixed here and relied on everywhere else:

* Scene units are meters by convention; +Y is up.
* Euler rotation order is roll (Z), then pitch (X), then yaw (Y), angles in
  degrees; a ``Transform`` applies uniform scale, then rotation, then
  translation.
* Triangle corners store ``(position index, uv index, normal index)`` with
  ``-1`` marking an absent normal. UV indices are mandatory: texturing drives
  this pipeline, so a corner without texture coordinates is a hard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMeshError, MissingUvError, ParseError

NORMAL_UNIT_TOL = 1e-4


@dataclass(frozen=True)
class Vec3:
    """Immutable 3D vector with finite components."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for c in (self.x, self.y, self.z):
            if not math.isfinite(c):
                raise ValueError(f"non-finite component in Vec3({self.x}, {self.y}, {self.z})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return self.scaled(1.0 / n)


@dataclass
class Mesh:
    """Indexed triangle mesh.

    Attributes:
        positions: (N, 3) float64 vertex positions.
        uvs: (M, 2) float64 texture coordinates.
        normals: (K, 3) float64 unit normals; may be empty.
        triangles: (T, 3, 3) int64; ``triangles[t, corner]`` is
            ``(position index, uv index, normal index)``, normal index -1
            when absent.
    """

    positions: np.ndarray
    uvs: np.ndarray
    normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.float64))
    triangles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3, 3), dtype=np.int64))

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.uvs = np.asarray(self.uvs, dtype=np.float64).reshape(-1, 2)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3, 3)

    @property
    def triangle_count(self) -> int:
        return int(self.triangles.shape[0])

    def validate(self) -> "Mesh":
        """Check all mesh invariants; raises ValueError on violation."""
        if not np.isfinite(self.positions).all():
            raise ValueError("mesh positions contain non-finite values")
        if not np.isfinite(self.uvs).all():
            raise ValueError("mesh uvs contain non-finite values")
        tri = self.triangles
        if tri.size:
            pos_idx, uv_idx, n_idx = tri[:, :, 0], tri[:, :, 1], tri[:, :, 2]
            if pos_idx.min() < 0 or pos_idx.max() >= len(self.positions):
                raise ValueError("triangle position index out of range")
            if uv_idx.min() < 0 or uv_idx.max() >= len(self.uvs):
                raise ValueError("triangle uv index out of range (every corner needs a uv)")
            used = n_idx[n_idx >= 0]
            if used.size and used.max() >= len(self.normals):
                raise ValueError("triangle normal index out of range")
        if len(self.normals):
            lengths = np.linalg.norm(self.normals, axis=1)
            if np.abs(lengths - 1.0).max() > NORMAL_UNIT_TOL:
                raise ValueError("mesh normals must have unit length within 1e-4")
        return self


@dataclass(frozen=True)
class Transform:
    """Uniform scale, then Euler rotation (roll Z, pitch X, yaw Y, degrees), then translation."""

    translation: Vec3 = Vec3(0.0, 0.0, 0.0)
    rotation_deg: tuple[float, float, float] = (0.0, 0.0, 0.0)  # (yaw, pitch, roll)
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def rotation_matrix(self) -> np.ndarray:
        yaw, pitch, roll = (math.radians(a) for a in self.rotation_deg)
        cy, sy = math.cos(yaw), math.sin(yaw)
        cp, sp = math.cos(pitch), math.sin(pitch)
        cr, sr = math.cos(roll), math.sin(roll)
        rz = np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]])
        rx = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
        ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
        return ry @ rx @ rz

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array of points into world space."""
        pts = np.asarray(points, dtype=np.float64) * self.scale
        pts = pts @ self.rotation_matrix().T
        return pts + self.translation.as_array()


IDENTITY = Transform()


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box, min <= max componentwise."""

    min: Vec3
    max: Vec3

    def __post_init__(self):
        if self.min.x > self.max.x or self.min.y > self.max.y or self.min.z > self.max.z:
            raise ValueError("Aabb min must not exceed max componentwise")

    @property
    def center(self) -> Vec3:
        return Vec3(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
            0.5 * (self.min.z + self.max.z),
        )


def _parse_floats(fields: list[str], count: int, line_no: int, record: str) -> list[float]:
    if len(fields) < count:
        raise ParseError(f"'{record}' record needs {count} values, got {len(fields)}", line_no)
    values = []
    for f in fields[:count]:
        try:
            v = float(f)
        except ValueError:
            raise ParseError(f"malformed numeric field {f!r} in '{record}' record", line_no) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value {f!r} in '{record}' record", line_no)
        values.append(v)
    return values


def _resolve_index(raw: str, length: int, line_no: int, kind: str) -> int:
    try:
        idx = int(raw)
    except ValueError:
        raise ParseError(f"malformed {kind} index {raw!r}", line_no) from None
    if idx == 0:
        raise IndexError(f"line {line_no}: {kind} index 0 is invalid (OBJ indices are 1-based)")
    resolved = idx - 1 if idx > 0 else length + idx
    if resolved < 0 or resolved >= length:
        raise IndexError(f"line {line_no}: {kind} index {idx} out of range ({length} defined)")
    return resolved


def load_obj(source) -> Mesh:
    """Parse a Wavefront OBJ text stream into a Mesh.

    Supported records: ``v``, ``vt``, ``vn``, and ``f`` with ``v/vt`` or
    ``v/vt/vn`` corners. Faces with more than three corners are
    fan-triangulated as (c0, c1, c2), (c0, c2, c3), ... Negative indices are
    resolved against the list length at the point of use. Any other record
    type is skipped silently. Normals are renormalized on load.

    Args:
        source: iterable of text lines (an open file or io.StringIO).

    Raises:
        ParseError: malformed numeric fields or truncated records.
        MissingUvError: a face corner without a ``vt`` index.
        IndexError: a face corner index outside the defined lists.
    """
    positions: list[list[float]] = []
    uvs: list[list[float]] = []
    normals: list[list[float]] = []
    triangles: list[list[tuple[int, int, int]]] = []

    for line_no, raw_line in enumerate(source, start=1):
        fields = raw_line.split()
        if not fields or fields[0].startswith("#"):
            continue
        record, rest = fields[0], fields[1:]
        if record == "v":
            positions.append(_parse_floats(rest, 3, line_no, "v"))
        elif record == "vt":
            uvs.append(_parse_floats(rest, 2, line_no, "vt"))
        elif record == "vn":
            n = _parse_floats(rest, 3, line_no, "vn")
            length = math.sqrt(n[0] ** 2 + n[1] ** 2 + n[2] ** 2)
            if length == 0.0:
                raise ParseError("zero-length normal", line_no)
            normals.append([c / length for c in n])
        elif record == "f":
            if len(rest) < 3:
                raise ParseError(f"face needs at least 3 corners, got {len(rest)}", line_no)
            corners = []
            for token in rest:
                parts = token.split("/")
                # Accepted corner syntax: v/vt or v/vt/vn. A lone index or
                # the v//vn form has no uv and cannot be textured.
                if len(parts) < 2 or parts[1] == "":
                    raise MissingUvError(f"face corner {token!r} lacks a 'vt' index", line_no)
                p = _resolve_index(parts[0], len(positions), line_no, "vertex")
                t = _resolve_index(parts[1], len(uvs), line_no, "uv")
                n = -1
                if len(parts) >= 3 and parts[2] != "":
                    n = _resolve_index(parts[2], len(normals), line_no, "normal")
                corners.append((p, t, n))
            for i in range(2, len(corners)):
                triangles.append([corners[0], corners[i - 1], corners[i]])
        # anything else (mtllib, usemtl, g, s, o, ...) is skipped

    mesh = Mesh(
        positions=np.array(positions, dtype=np.float64).reshape(-1, 3),
        uvs=np.array(uvs, dtype=np.float64).reshape(-1, 2),
        normals=np.array(normals, dtype=np.float64).reshape(-1, 3),
        triangles=np.array(triangles, dtype=np.int64).reshape(-1, 3, 3),
    )
    return mesh.validate()


def load_obj_file(path) -> Mesh:
    """Open ``path`` as UTF-8 text and parse it with load_obj."""
    with open(path, "r", encoding="utf-8") as fh:
        return load_obj(fh)


def make_cylinder(radius: float, height: float, segments: int) -> Mesh:
    """Closed cylinder centered at the origin with axis +Y.

    The side is 2*segments triangles, each cap is a fan of ``segments``
    triangles to its center, 4*segments total. Side UVs wrap u in [0, 1]
    around the circumference (seam duplicated at u=1) and run v in [0, 1]
    bottom to top; cap UVs map the rim onto a disk. All normals face outward.

    Raises:
        ValueError: radius or height not positive, or segments < 3.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not height > 0:
        raise ValueError(f"height must be positive, got {height}")
    if segments < 3:
        raise ValueError(f"segments must be >= 3, got {segments}")

    h = height / 2.0
    theta = 2.0 * np.pi * np.arange(segments) / segments
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    # positions: bottom ring [0, s), top ring [s, 2s), bottom center, top center
    bottom = np.stack([radius * cos_t, np.full(segments, -h), radius * sin_t], axis=1)
    top = np.stack([radius * cos_t, np.full(segments, h), radius * sin_t], axis=1)
    positions = np.vstack([bottom, top, [[0.0, -h, 0.0]], [[0.0, h, 0.0]]])
    c_bot, c_top = 2 * segments, 2 * segments + 1

    # uvs: side grid rows [0, s] bottom then top, disk rim, disk center
    u = np.arange(segments + 1) / segments
    side_bot = np.stack([u, np.zeros(segments + 1)], axis=1)
    side_top = np.stack([u, np.ones(segments + 1)], axis=1)
    disk = np.stack([0.5 + 0.5 * cos_t, 0.5 + 0.5 * sin_t], axis=1)
    uvs = np.vstack([side_bot, side_top, disk, [[0.5, 0.5]]])
    uv_top_row = segments + 1
    uv_disk = 2 * (segments + 1)
    uv_disk_center = uv_disk + segments

    # normals: radial ring, +Y, -Y
    normals = np.vstack([np.stack([cos_t, np.zeros(segments), sin_t], axis=1), [[0.0, 1.0, 0.0]], [[0.0, -1.0, 0.0]]])
    n_up, n_down = segments, segments + 1

    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        bl = (i, i, i)
        br = (j, i + 1, j)
        tl = (segments + i, uv_top_row + i, i)
        tr = (segments + j, uv_top_row + i + 1, j)
        # wound so the face normal points away from the axis
        tris.append([bl, tr, br])
        tris.append([bl, tl, tr])
    for i in range(segments):
        j = (i + 1) % segments
        # top cap: +Y normal; bottom cap: -Y normal
        tris.append([(c_top, uv_disk_center, n_up), (segments + j, uv_disk + j, n_up), (segments + i, uv_disk + i, n_up)])
        tris.append([(c_bot, uv_disk_center, n_down), (i, uv_disk + i, n_down), (j, uv_disk + j, n_down)])

    mesh = Mesh(positions=positions, uvs=uvs, normals=normals, triangles=np.array(tris, dtype=np.int64))
    return mesh.validate()


def mesh_aabb(mesh: Mesh, transform: Transform = IDENTITY) -> Aabb:
    """Componentwise bounds of all transformed mesh positions.

    Raises:
        EmptyMeshError: the mesh has no positions.
    """
    if len(mesh.positions) == 0:
        raise EmptyMeshError("cannot compute bounds of a mesh with no positions")
    pts = transform.apply(mesh.positions)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    return Aabb(Vec3.from_array(lo), Vec3.from_array(hi))
