"""Procedural multi-LoD buildings and a small z-buffer rasterizer.

The three levels share their mass boxes exactly: LoD1 is the boxes, LoD2
adds roof prisms, LoD3 additionally cuts recessed windows and doors into
the walls. Renders are flat shaded with a headlight so every planar face
has one uniform color.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capture import CameraPose
from .sketchpipe import parse_level

BACKGROUND_RGB = (255, 255, 255)
DEPTH_BACKGROUND = 65535
DEPTH_MAX_SURFACE = 65534

WALL_COLORS = [(205, 185, 150), (170, 185, 200), (195, 165, 160), (180, 195, 160)]
ROOF_COLOR = (150, 70, 60)
GLASS_COLOR = (60, 80, 125)
DOOR_COLOR = (110, 70, 40)


@dataclass(frozen=True)
class Roof:
    kind: str = "none"  # none | gable | hip
    height: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gable", "hip"):
            raise ValueError(f"unknown roof kind {self.kind!r}")
        if self.kind != "none" and self.height <= 0:
            raise ValueError("roof height must be positive")


@dataclass(frozen=True)
class WindowGrid:
    rows: int
    cols: int
    inset: float = 0.3
    width_frac: float = 0.5
    height_frac: float = 0.5

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("window grid needs at least one row and column")
        if not (0 < self.width_frac < 1 and 0 < self.height_frac < 1):
            raise ValueError("window fractions must lie in (0, 1)")
        if self.inset <= 0:
            raise ValueError("window inset must be positive")


@dataclass(frozen=True)
class Door:
    width: float
    height: float
    inset: float = 0.3

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.inset <= 0:
            raise ValueError("door dimensions must be positive")


@dataclass(frozen=True)
class Mass:
    origin: tuple[float, float, float]
    extent: tuple[float, float, float]
    roof: Roof = Roof()
    windows: WindowGrid | None = None
    door: Door | None = None
    color: tuple[int, int, int] = WALL_COLORS[0]

    def __post_init__(self):
        if min(self.extent) <= 0:
            raise ValueError(f"mass extents must be positive, got {self.extent}")
        if self.door is not None:
            dx = self.extent[0]
            if self.door.width >= dx or self.door.height >= self.extent[2]:
                raise ValueError("door does not fit in the front facade")
        for inset in ([self.windows.inset] if self.windows else []) + ([self.door.inset] if self.door else []):
            if inset >= 0.5 * min(self.extent[0], self.extent[1]):
                raise ValueError("opening inset deeper than half the mass")


@dataclass(frozen=True)
class BuildingSpec:
    seed: int
    masses: tuple[Mass, ...]

    def __post_init__(self):
        if not self.masses:
            raise ValueError("a building needs at least one mass")

    @classmethod
    def from_seed(cls, seed: int) -> "BuildingSpec":
        """Deterministic random building: 1-3 boxes side by side with setbacks."""
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        masses = []
        x = 0.0
        base_height = float(rng.uniform(6.0, 10.0))
        for i in range(n):
            dx = float(rng.uniform(5.0, 9.0))
            dy = float(rng.uniform(4.0, 7.0))
            dz = base_height * float(rng.uniform(0.6, 1.0)) if i else base_height
            y0 = float(rng.uniform(-1.5, 1.5)) if i else 0.0
            kind = ("gable", "hip", "none")[int(rng.integers(0, 3))]
            roof = Roof(kind, 0.1 * base_height * float(rng.uniform(0.6, 1.0))) if kind != "none" else Roof()
            rows = max(1, int(dz // 3))
            cols = max(1, int(dx // 2.5))
            windows = WindowGrid(rows, cols, inset=0.3, width_frac=float(rng.uniform(0.4, 0.6)),
                                 height_frac=float(rng.uniform(0.4, 0.6)))
            door = Door(width=min(1.4, 0.2 * dx), height=min(2.2, 0.7 * dz / rows)) if i == 0 else None
            masses.append(Mass((x, y0, 0.0), (dx, dy, dz), roof, windows, door, WALL_COLORS[i % len(WALL_COLORS)]))
            x += dx
        # center the footprint on the origin
        xs = [m.origin[0] for m in masses] + [m.origin[0] + m.extent[0] for m in masses]
        ys = [m.origin[1] for m in masses] + [m.origin[1] + m.extent[1] for m in masses]
        cx, cy = (min(xs) + max(xs)) / 2, (min(ys) + max(ys)) / 2
        masses = [Mass((m.origin[0] - cx, m.origin[1] - cy, 0.0), m.extent, m.roof, m.windows, m.door, m.color)
                  for m in masses]
        return cls(seed, tuple(masses))


@dataclass
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    face_color: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.face_color = np.asarray(self.face_color, dtype=np.uint8).reshape(-1, 3)
        if len(self.triangles) != len(self.face_color):
            raise ValueError("one color per triangle required")
        if len(self.triangles) and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise ValueError("triangle index out of range")

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bounding_sphere(self) -> tuple[np.ndarray, float]:
        lo, hi = self.bounds()
        center = (lo + hi) / 2
        return center, float(np.linalg.norm(self.vertices - center, axis=1).max())


class _MeshBuilder:
    def __init__(self):
        self.vertices: list = []
        self.triangles: list = []
        self.colors: list = []

    def tri(self, a, b, c, color):
        a, b, c = (np.asarray(p, dtype=np.float64) for p in (a, b, c))
        if np.linalg.norm(np.cross(b - a, c - a)) < 1e-12:
            return
        base = len(self.vertices)
        self.vertices.extend([a, b, c])
        self.triangles.append((base, base + 1, base + 2))
        self.colors.append(color)

    def quad(self, a, b, c, d, color):
        self.tri(a, b, c, color)
        self.tri(a, c, d, color)

    def build(self) -> Mesh:
        if not self.triangles:
            return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3), dtype=np.uint8))
        return Mesh(np.array(self.vertices), np.array(self.triangles), np.array(self.colors))


def _walls(m: Mass):
    (x0, y0, z0), (dx, dy, dz) = m.origin, m.extent
    x1, y1 = x0 + dx, y0 + dy
    # (origin, u axis, outward normal, length); v axis is +Z
    return [
        ("front", np.array([x0, y0, z0]), np.array([1.0, 0, 0]), np.array([0, -1.0, 0]), dx),
        ("right", np.array([x1, y0, z0]), np.array([0, 1.0, 0]), np.array([1.0, 0, 0]), dy),
        ("back", np.array([x1, y1, z0]), np.array([-1.0, 0, 0]), np.array([0, 1.0, 0]), dx),
        ("left", np.array([x0, y1, z0]), np.array([0, -1.0, 0]), np.array([-1.0, 0, 0]), dy),
    ]


def _openings(m: Mass, wall: str, length: float) -> list[tuple[float, float, float, float, float, tuple]]:
    """Holes as (u0, u1, v0, v1, inset, color) in wall coordinates."""
    holes = []
    door_rect = None
    if m.door is not None and wall == "front":
        u0 = (length - m.door.width) / 2
        door_rect = (u0, u0 + m.door.width, 0.0, m.door.height)
        holes.append(door_rect + (m.door.inset, DOOR_COLOR))
    if m.windows is not None:
        g = m.windows
        cw, ch = length / g.cols, m.extent[2] / g.rows
        for r in range(g.rows):
            for c in range(g.cols):
                uc, vc = (c + 0.5) * cw, (r + 0.5) * ch
                w2, h2 = g.width_frac * cw / 2, g.height_frac * ch / 2
                rect = (uc - w2, uc + w2, vc - h2, vc + h2)
                if door_rect and rect[0] < door_rect[1] and rect[1] > door_rect[0] and rect[2] < door_rect[3]:
                    continue
                holes.append(rect + (g.inset, GLASS_COLOR))
    return holes


def _emit_wall(b: _MeshBuilder, origin, u, n, length, height, color, holes):
    v = np.array([0.0, 0.0, 1.0])

    def P(uu, vv, depth=0.0):
        return origin + uu * u + vv * v - depth * n

    us = sorted({0.0, length, *[h[0] for h in holes], *[h[1] for h in holes]})
    vs = sorted({0.0, height, *[h[2] for h in holes], *[h[3] for h in holes]})
    for j in range(len(vs) - 1):
        run_start = None
        for i in range(len(us) - 1):
            uc, vc = (us[i] + us[i + 1]) / 2, (vs[j] + vs[j + 1]) / 2
            solid = not any(h[0] < uc < h[1] and h[2] < vc < h[3] for h in holes)
            if solid and run_start is None:
                run_start = us[i]
            if run_start is not None and (not solid or i == len(us) - 2):
                end = us[i + 1] if solid else us[i]
                b.quad(P(run_start, vs[j]), P(end, vs[j]), P(end, vs[j + 1]), P(run_start, vs[j + 1]), color)
                run_start = None
    for u0, u1, v0, v1, inset, hole_color in holes:
        b.quad(P(u0, v0, inset), P(u1, v0, inset), P(u1, v1, inset), P(u0, v1, inset), hole_color)
        # reveals
        b.quad(P(u0, v0), P(u0, v0, inset), P(u0, v1, inset), P(u0, v1), color)
        b.quad(P(u1, v0), P(u1, v1), P(u1, v1, inset), P(u1, v0, inset), color)
        b.quad(P(u0, v0), P(u1, v0), P(u1, v0, inset), P(u0, v0, inset), color)
        b.quad(P(u0, v1), P(u0, v1, inset), P(u1, v1, inset), P(u1, v1), color)


def _emit_box(b: _MeshBuilder, m: Mass, with_openings: bool):
    (x0, y0, z0), (dx, dy, dz) = m.origin, m.extent
    x1, y1, z1 = x0 + dx, y0 + dy, z0 + dz
    for wall, origin, u, n, length in _walls(m):
        holes = _openings(m, wall, length) if with_openings else []
        _emit_wall(b, origin, u, n, length, dz, m.color, holes)
    b.quad((x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1), m.color)
    b.quad((x0, y0, z0), (x0, y1, z0), (x1, y1, z0), (x1, y0, z0), m.color)


def _emit_roof(b: _MeshBuilder, m: Mass):
    if m.roof.kind == "none":
        return
    (x0, y0, z0), (dx, dy, dz) = m.origin, m.extent
    x1, y1, z = x0 + dx, y0 + dy, z0 + dz
    top = z + m.roof.height
    along_x = dx >= dy
    if not along_x:
        # work in a frame where the ridge runs along the first axis
        def P(a, c, zz):
            return (x0 + c, y0 + a, zz)
        la, lc = dy, dx
    else:
        def P(a, c, zz):
            return (x0 + a, y0 + c, zz)
        la, lc = dx, dy
    mid = lc / 2
    s = 0.0 if m.roof.kind == "gable" else 0.4 * lc
    r0, r1 = P(s, mid, top), P(la - s, mid, top)
    b.quad(P(0, 0, z), P(la, 0, z), r1, r0, ROOF_COLOR)
    b.quad(P(la, lc, z), P(0, lc, z), r0, r1, ROOF_COLOR)
    b.tri(P(0, lc, z), P(0, 0, z), r0, ROOF_COLOR)
    b.tri(P(la, 0, z), P(la, lc, z), r1, ROOF_COLOR)


def generate_building(spec: BuildingSpec, level) -> Mesh:
    """Mesh for LoD 1, 2 or 3 of ``spec``; higher levels only add geometry."""
    level = parse_level(level)
    b = _MeshBuilder()
    for m in spec.masses:
        _emit_box(b, m, with_openings=level >= 3)
    if level >= 2:
        for m in spec.masses:
            _emit_roof(b, m)
    return b.build()


@dataclass
class RenderResult:
    rgb: np.ndarray
    depth: np.ndarray
    face_ids: np.ndarray = field(repr=False)
    eye_depth: np.ndarray = field(repr=False)


def _clip_near(poly: list[np.ndarray], near: float) -> list[np.ndarray]:
    """Clip a camera-space polygon (camera looks along -Z) to z <= -near."""
    out = []
    for i in range(len(poly)):
        a, b = poly[i], poly[(i + 1) % len(poly)]
        ina, inb = -a[2] >= near, -b[2] >= near
        if ina:
            out.append(a)
        if ina != inb:
            t = (-near - a[2]) / (b[2] - a[2])
            out.append(a + t * (b - a))
    return out


def render(mesh: Mesh, pose: CameraPose, fov: float = 50.0, w: int = 128, h: int = 128,
           near: float = 0.1, far: float = 100.0) -> RenderResult:
    """Rasterize with a z-buffer; triangles are drawn in index order, ties keep the first."""
    if w < 1 or h < 1:
        raise ValueError("image size must be positive")
    if not 0 < near < far:
        raise ValueError("need 0 < near < far")
    rgb = np.empty((h, w, 3), dtype=np.uint8)
    rgb[:] = BACKGROUND_RGB
    zbuf = np.full((h, w), np.inf)
    ids = np.full((h, w), -1, dtype=np.int32)
    f = 1.0 / math.tan(math.radians(fov) / 2)
    aspect = w / h
    R = pose.rotation
    forward = pose.forward
    cam = (mesh.vertices - pose.position) @ R
    px_x = (np.arange(w) + 0.5)
    px_y = (np.arange(h) + 0.5)
    for t, (i0, i1, i2) in enumerate(mesh.triangles):
        a, b, c = mesh.vertices[i0], mesh.vertices[i1], mesh.vertices[i2]
        normal = np.cross(b - a, c - a)
        normal /= np.linalg.norm(normal)
        shade = 0.35 + 0.65 * abs(float(normal @ forward))
        color = np.clip(np.floor(mesh.face_color[t] * shade + 0.5), 0, 255).astype(np.uint8)
        poly = _clip_near([cam[i0], cam[i1], cam[i2]], near)
        if len(poly) < 3:
            continue
        for k in range(1, len(poly) - 1):
            tri = np.array([poly[0], poly[k], poly[k + 1]])
            z = -tri[:, 2]
            sx = (f * tri[:, 0] / (z * aspect) + 1) * w / 2
            sy = (1 - f * tri[:, 1] / z) * h / 2
            area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sx[2] - sx[0]) * (sy[1] - sy[0])
            if abs(area) < 1e-12:
                continue
            c0 = max(int(math.floor(sx.min() - 0.5)), 0)
            c1 = min(int(math.ceil(sx.max() - 0.5)), w - 1)
            r0 = max(int(math.floor(sy.min() - 0.5)), 0)
            r1 = min(int(math.ceil(sy.max() - 0.5)), h - 1)
            if c0 > c1 or r0 > r1:
                continue
            X, Y = np.meshgrid(px_x[c0:c1 + 1], px_y[r0:r1 + 1])
            w0 = ((sx[2] - sx[1]) * (Y - sy[1]) - (sy[2] - sy[1]) * (X - sx[1])) / area
            w1 = ((sx[0] - sx[2]) * (Y - sy[2]) - (sy[0] - sy[2]) * (X - sx[2])) / area
            w2 = 1.0 - w0 - w1
            inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
            if not inside.any():
                continue
            inv_z = w0 / z[0] + w1 / z[1] + w2 / z[2]
            depth = 1.0 / np.where(inside, inv_z, 1.0)
            region = zbuf[r0:r1 + 1, c0:c1 + 1]
            win = inside & (depth < region) & (depth <= far)
            if not win.any():
                continue
            region[win] = depth[win]
            ids[r0:r1 + 1, c0:c1 + 1][win] = t
            rgb[r0:r1 + 1, c0:c1 + 1][win] = color
    depth16 = np.full((h, w), DEPTH_BACKGROUND, dtype=np.uint16)
    hit = ids >= 0
    q = np.floor((zbuf[hit] - near) / (far - near) * DEPTH_MAX_SURFACE + 0.5)
    depth16[hit] = np.clip(q, 0, DEPTH_MAX_SURFACE).astype(np.uint16)
    return RenderResult(rgb, depth16, ids, zbuf)


def rasterize(mesh: Mesh, pose: CameraPose, fov: float = 50.0, w: int = 128, h: int = 128,
              near: float = 0.1, far: float = 100.0) -> tuple[np.ndarray, np.ndarray]:
    """RGB image and 16-bit linear depth (0 = near plane, 65535 = background)."""
    r = render(mesh, pose, fov, w, h, near, far)
    return r.rgb, r.depth


def camera_setup(spec: BuildingSpec, margin: float = 2.5) -> dict:
    """Shared orbit target, radius and depth range for every LoD of ``spec``."""
    center, rad = generate_building(spec, 3).bounding_sphere()
    radius = margin * rad
    return {
        "target": tuple(float(v) for v in center),
        "radius": radius,
        "near": max(1e-3, radius - 1.2 * rad),
        "far": radius + 1.2 * rad,
    }


def silhouette(rgb: np.ndarray, background=BACKGROUND_RGB) -> np.ndarray:
    return np.any(np.asarray(rgb) != np.asarray(background, dtype=np.uint8), axis=-1)


def bbox_iou(a: np.ndarray, b: np.ndarray) -> float:
    """IoU of the axis-aligned bounding boxes of two masks; 0 when either is empty."""
    def box(m):
        rows, cols = np.nonzero(m)
        return rows.min(), rows.max() + 1, cols.min(), cols.max() + 1
    if not np.any(a) or not np.any(b):
        return 0.0
    ar0, ar1, ac0, ac1 = box(a)
    br0, br1, bc0, bc1 = box(b)
    ih = max(0, min(ar1, br1) - max(ar0, br0))
    iw = max(0, min(ac1, bc1) - max(ac0, bc0))
    inter = ih * iw
    union = (ar1 - ar0) * (ac1 - ac0) + (br1 - br0) * (bc1 - bc0) - inter
    return float(inter / union)
