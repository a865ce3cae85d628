"""Classical stand-ins for the generative detail-reduction models.

None of this is learned. LoD3 -> LoD2 repaints small flat-colored regions
(windows, doors, their reveals) with the surrounding facade color.
LoD2 -> LoD1 replaces the line work with one bounding box per depth layer.
"""
from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np
from scipy import ndimage

from ..imagecore import EIGHT_CONNECTED, binarize, remove_small_components, to_grayscale
from ..synthrender import BACKGROUND_RGB, DEPTH_BACKGROUND

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def proxy_remove_small_components(mask: np.ndarray, min_area: int) -> np.ndarray:
    return remove_small_components(mask, min_area)


# -- contour simplification ---------------------------------------------------

def _perp_dist(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    n = np.hypot(d[0], d[1])
    if n == 0:
        return np.hypot(points[:, 0] - a[0], points[:, 1] - a[1])
    return np.abs(d[0] * (points[:, 1] - a[1]) - d[1] * (points[:, 0] - a[0])) / n


def rdp(points: np.ndarray, epsilon: float) -> np.ndarray:
    """Ramer-Douglas-Peucker on an open polyline; endpoints always kept."""
    points = np.asarray(points, dtype=np.float64)
    if len(points) < 3:
        return points.copy()
    keep = np.zeros(len(points), dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, len(points) - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        d = _perp_dist(points[i + 1:j], points[i], points[j])
        k = int(np.argmax(d))
        if d[k] > epsilon:
            m = i + 1 + k
            keep[m] = True
            stack.append((i, m))
            stack.append((m, j))
    return points[keep]


def simplify_closed(points: np.ndarray, epsilon: float) -> np.ndarray:
    """RDP on a closed ring, anchored at the point farthest from the centroid
    and the point farthest from that one (corners, for box-like shapes)."""
    points = np.asarray(points, dtype=np.float64)
    if len(points) < 4:
        return points.copy()
    c = points.mean(axis=0)
    a = int(np.argmax(np.hypot(*(points - c).T)))
    ring = np.roll(points, -a, axis=0)
    b = int(np.argmax(np.hypot(*(ring - ring[0]).T)))
    first = rdp(ring[:b + 1], epsilon)
    second = rdp(np.vstack([ring[b:], ring[:1]]), epsilon)
    return np.vstack([first, second[1:-1]])


def trace_contours(mask: np.ndarray) -> list[np.ndarray]:
    """Closed boundary rings of every component as (x, y) pixel coordinates."""
    img = np.ascontiguousarray(np.asarray(mask, dtype=np.uint8))
    contours, _ = cv2.findContours(img, cv2.RETR_LIST, cv2.CHAIN_APPROX_NONE)
    return [c.reshape(-1, 2).astype(np.float64) for c in contours]


def draw_polygon(mask: np.ndarray, poly: np.ndarray) -> None:
    pts = np.round(poly).astype(np.int32).reshape(-1, 1, 2)
    canvas = mask.view(np.uint8)
    cv2.polylines(canvas, [pts], isClosed=True, color=1, thickness=1, lineType=cv2.LINE_8)


def proxy_simplify_contours(mask: np.ndarray, epsilon: float) -> np.ndarray:
    """Trace component outlines, RDP-simplify each with tolerance ``epsilon``, redraw."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros(mask.shape, dtype=bool)
    for ring in trace_contours(mask):
        poly = ring if epsilon == 0 else simplify_closed(ring, epsilon)
        draw_polygon(out, poly)
    return out


# -- mass boxing ----------------------------------------------------------------

@dataclass(frozen=True)
class MassBox:
    """Bounding rectangle (inclusive pixel bounds) of one depth layer."""

    row0: int
    row1: int
    col0: int
    col1: int
    layer: int
    mean_depth: float
    pixels: int

    def outline(self, shape) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        m[self.row0, self.col0:self.col1 + 1] = True
        m[self.row1, self.col0:self.col1 + 1] = True
        m[self.row0:self.row1 + 1, self.col0] = True
        m[self.row0:self.row1 + 1, self.col1] = True
        return m


def _box(rows, cols, layer, depth_vals):
    return MassBox(int(rows.min()), int(rows.max()), int(cols.min()), int(cols.max()), layer,
                   float(np.mean(depth_vals)) if depth_vals is not None else 0.0, int(len(rows)))


def _mask_depths(mask: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """Depth under each mask pixel; pixels on background borrow the nearest surface depth."""
    surface = depth != DEPTH_BACKGROUND
    _, (ir, ic) = ndimage.distance_transform_edt(~surface, return_indices=True)
    rows, cols = np.nonzero(mask)
    return depth[ir[rows, cols], ic[rows, cols]].astype(np.float64)


def mass_boxes(mask: np.ndarray, depth: np.ndarray | None = None, layers: int = 3) -> list[MassBox]:
    """Per-depth-layer bounding boxes, ordered near to far.

    Depth is split into ``layers`` equal-width bins over the range occupied
    by the mask; without usable depth the whole mask is one box.
    """
    if layers < 1:
        raise ValueError(f"layers must be >= 1, got {layers}")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return []
    rows, cols = np.nonzero(mask)
    if depth is None or not np.any(np.asarray(depth) != DEPTH_BACKGROUND):
        return [_box(rows, cols, 0, None)]
    depth = np.asarray(depth)
    if depth.shape != mask.shape:
        raise ValueError(f"depth shape {depth.shape} differs from mask {mask.shape}")
    d = _mask_depths(mask, depth)
    lo, hi = d.min(), d.max()
    if hi == lo:
        bins = np.zeros(len(d), dtype=np.int64)
    else:
        bins = np.minimum(((d - lo) / (hi - lo) * layers).astype(np.int64), layers - 1)
    boxes = []
    for k in range(layers):
        sel = bins == k
        if sel.any():
            boxes.append(_box(rows[sel], cols[sel], k, d[sel]))
    boxes.sort(key=lambda b: (b.mean_depth, b.layer))
    return boxes


def proxy_mass_boxing(mask: np.ndarray, depth: np.ndarray | None = None, layers: int = 3) -> np.ndarray:
    """Union of the rectangle outlines from :func:`mass_boxes`."""
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros(mask.shape, dtype=bool)
    for b in mass_boxes(mask, depth, layers):
        out |= b.outline(mask.shape)
    return out


def massing_gray_levels(n: int) -> list[int]:
    if n <= 1:
        return [20] * n
    return [int(round(20 + 160 * k / (n - 1))) for k in range(n)]


def render_massing(boxes: list[MassBox], shape) -> np.ndarray:
    """Flat massing image: white background, boxes filled far-to-near, nearer boxes darker."""
    img = np.full(shape, 255, dtype=np.uint8)
    levels = massing_gray_levels(len(boxes))
    for b, g in reversed(list(zip(boxes, levels))):
        img[b.row0:b.row1 + 1, b.col0:b.col1 + 1] = g
    return img


# -- LoD3 -> LoD2 image repainting ----------------------------------------------

def _pack(rgb: np.ndarray) -> np.ndarray:
    rgb = rgb.astype(np.int64)
    return (rgb[..., 0] << 16) | (rgb[..., 1] << 8) | rgb[..., 2]


def color_regions(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """4-connected regions of identical color. Returns (labels, packed color per label)."""
    packed = _pack(rgb)
    labels = np.zeros(packed.shape, dtype=np.int64)
    colors = [0]
    for c in np.unique(packed):
        lab, n = ndimage.label(packed == c, structure=FOUR_CONNECTED)
        sel = lab > 0
        labels[sel] = lab[sel] + len(colors) - 1
        colors.extend([int(c)] * n)
    return labels, np.array(colors, dtype=np.int64)


def proxy_lod2_image(rgb: np.ndarray, area_frac: float = 0.01, background=BACKGROUND_RGB) -> np.ndarray:
    """Repaint every small flat region with the dominant color around it.

    A region is small when it covers less than ``area_frac`` of the image.
    Background is only used as fill when nothing else borders the region,
    which keeps the building silhouette in place.
    """
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3:
        raise ValueError("proxy LoD2 reduction expects an RGB image")
    h, w, _ = rgb.shape
    labels, colors = color_regions(rgb)
    sizes = np.bincount(labels.ravel(), minlength=len(colors))
    bg = (background[0] << 16) | (background[1] << 8) | background[2]
    small_label = (sizes < area_frac * h * w) & (colors != bg)
    small_label[0] = False
    small = small_label[labels]
    if not small.any():
        return rgb.copy()
    out = rgb.copy()
    packed = _pack(rgb)
    blobs, n = ndimage.label(small, structure=EIGHT_CONNECTED)
    objects = ndimage.find_objects(blobs)
    for i, sl in enumerate(objects, start=1):
        r0, r1 = max(sl[0].start - 1, 0), min(sl[0].stop + 1, h)
        c0, c1 = max(sl[1].start - 1, 0), min(sl[1].stop + 1, w)
        blob = blobs[r0:r1, c0:c1] == i
        ring = ndimage.binary_dilation(blob, structure=EIGHT_CONNECTED) & ~blob & ~small[r0:r1, c0:c1]
        neighbours = packed[r0:r1, c0:c1][ring]
        if neighbours.size == 0:
            continue
        non_bg = neighbours[neighbours != bg]
        if non_bg.size:
            neighbours = non_bg
        vals, counts = np.unique(neighbours, return_counts=True)
        fill = int(vals[np.argmax(counts)])  # ties resolve to the smallest packed color
        out[r0:r1, c0:c1][blob] = ((fill >> 16) & 255, (fill >> 8) & 255, fill & 255)
    return out


def proxy_lod1_image(sketch: np.ndarray, depth: np.ndarray | None = None, layers: int = 3,
                     bin_thr: int = 128, min_area: int = 8) -> np.ndarray:
    """Massing image from a LoD2 sketch: line pixels -> speck removal -> depth-layer boxes."""
    gray = to_grayscale(sketch)
    mask = proxy_remove_small_components(binarize(gray, bin_thr, "dark-lines"), min_area)
    return render_massing(mass_boxes(mask, depth, layers), gray.shape)
