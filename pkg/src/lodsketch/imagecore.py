"""Deterministic pixel operations used by the sketch extractors.

Images are plain numpy arrays:

* gray image  -- ``uint8`` of shape ``(H, W)``
* RGB image   -- ``uint8`` of shape ``(H, W, 3)``
* signed field -- ``float64`` of shape ``(H, W)``
* binary mask -- ``bool`` of shape ``(H, W)``, True marks a line pixel

Every convolution and morphology call replicates border pixels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = [
    "StructuringElement",
    "round_half_away",
    "to_uint8",
    "to_grayscale",
    "sobel",
    "gradient_magnitude",
    "invert_edges",
    "blend_shadow",
    "enhance_contrast",
    "morphology",
    "darken_fine_lines",
    "gaussian_blur",
    "canny",
    "zhang_suen_thin",
    "remove_small_components",
    "refine_lines",
    "binarize",
]

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T.copy()

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class StructuringElement:
    """Centered flat kernel for grayscale morphology."""

    shape: str = "square"
    size: int = 3

    def __post_init__(self):
        if self.shape not in ("square", "cross"):
            raise ValueError(f"unknown structuring element shape {self.shape!r}")
        if int(self.size) != self.size or self.size < 1 or self.size % 2 == 0:
            raise ValueError(f"structuring element size must be a positive odd integer, got {self.size}")

    def footprint(self) -> np.ndarray:
        if self.shape == "square":
            return np.ones((self.size, self.size), dtype=bool)
        fp = np.zeros((self.size, self.size), dtype=bool)
        c = self.size // 2
        fp[c, :] = True
        fp[:, c] = True
        return fp

    def offsets(self) -> list[tuple[int, int]]:
        c = self.size // 2
        rows, cols = np.nonzero(self.footprint())
        return [(int(r) - c, int(k) - c) for r, k in zip(rows, cols)]


def round_half_away(x):
    """Round to nearest integer, ties away from zero (numpy rounds ties to even)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def to_uint8(x) -> np.ndarray:
    return np.clip(round_half_away(x), 0, 255).astype(np.uint8)


def _check_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D image, got shape {img.shape}")
    return img


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma, rounded half away from zero.

    Evaluated in integer arithmetic (weights x1000) so that ties are exact.
    """
    img = np.asarray(img)
    if img.ndim == 2:
        return img.astype(np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) RGB image, got shape {img.shape}")
    rgb = img.astype(np.int64)
    luma = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    return np.clip((luma + 500) // 1000, 0, 255).astype(np.uint8)


def _correlate3(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    padded = np.pad(img.astype(np.float64), 1, mode="edge")
    h, w = img.shape
    out = np.zeros((h, w), dtype=np.float64)
    for dr in range(3):
        for dc in range(3):
            k = kernel[dr, dc]
            if k:
                out += k * padded[dr:dr + h, dc:dc + w]
    return out


def sobel(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal and vertical 3x3 Sobel responses.

    ``gx`` is positive where intensity increases to the right, ``gy`` where
    it increases downward.
    """
    img = _check_gray(img)
    return _correlate3(img, SOBEL_X), _correlate3(img, SOBEL_Y)


def gradient_magnitude(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    if gx.shape != gy.shape:
        raise ValueError(f"gradient shapes differ: {gx.shape} vs {gy.shape}")
    return np.sqrt(gx * gx + gy * gy)


def invert_edges(m: np.ndarray) -> np.ndarray:
    """Edge map E = 255 - min(M, 255): edges dark, flat regions white."""
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ValueError("gradient magnitude must be non-negative")
    return to_uint8(255.0 - np.minimum(m, 255.0))


def blend_shadow(e: np.ndarray, g: np.ndarray, alpha: float) -> np.ndarray:
    """S = (1 - alpha) E + alpha G.  alpha=0 keeps pure lines, alpha=1 pure shading."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    e = np.asarray(e)
    g = np.asarray(g)
    if e.shape != g.shape:
        raise ValueError(f"image shapes differ: {e.shape} vs {g.shape}")
    if alpha == 0.0:
        return e.astype(np.float64)
    if alpha == 1.0:
        return g.astype(np.float64)
    return (1.0 - alpha) * e.astype(np.float64) + alpha * g.astype(np.float64)


def enhance_contrast(s: np.ndarray, beta: float) -> np.ndarray:
    """O = (S - 128)(1 + 2 beta) + 128, rounded and clamped to 8 bits."""
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    s = np.asarray(s, dtype=np.float64)
    return to_uint8((s - 128.0) * (1.0 + 2.0 * beta) + 128.0)


def _rank_filter(img: np.ndarray, se: StructuringElement, reducer) -> np.ndarray:
    r = se.size // 2
    h, w = img.shape
    padded = np.pad(img, r, mode="edge")
    out = None
    for dr, dc in se.offsets():
        window = padded[r + dr:r + dr + h, r + dc:r + dc + w]
        out = window.copy() if out is None else reducer(out, window)
    return out


def morphology(img: np.ndarray, op: str, se: StructuringElement | None = None) -> np.ndarray:
    """Flat grayscale morphology: erode, dilate, open, close, blackhat.

    blackhat is ``close(img) - img`` and is non-negative; it lights up small
    dark features such as thin lines on a bright background.
    """
    img = _check_gray(img)
    se = se or StructuringElement()
    if op == "erode":
        return _rank_filter(img, se, np.minimum)
    if op == "dilate":
        return _rank_filter(img, se, np.maximum)
    if op == "open":
        return morphology(morphology(img, "erode", se), "dilate", se)
    if op == "close":
        return morphology(morphology(img, "dilate", se), "erode", se)
    if op == "blackhat":
        closed = morphology(img, "close", se)
        return (closed.astype(np.int32) - img.astype(np.int32)).astype(img.dtype)
    raise ValueError(f"unknown morphology op {op!r}")


def darken_fine_lines(o: np.ndarray, se: StructuringElement | None = None, gain: float = 1.0) -> np.ndarray:
    """Subtract gain * blackhat(o): thin dark strokes get darker, flat areas are untouched."""
    if gain < 0:
        raise ValueError(f"gain must be non-negative, got {gain}")
    o = _check_gray(o)
    if gain == 0:
        return o.copy()
    bh = morphology(o, "blackhat", se)
    return to_uint8(o.astype(np.float64) - gain * bh.astype(np.float64))


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    radius = max(1, int(np.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur (radius ceil(3 sigma)), float output."""
    img = np.asarray(img, dtype=np.float64)
    if sigma <= 0:
        return img.copy()
    k = gaussian_kernel1d(sigma)
    out = ndimage.correlate1d(img, k, axis=1, mode="nearest")
    return ndimage.correlate1d(out, k, axis=0, mode="nearest")


def _non_max_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    # neighbour step (row, col) along the gradient for each quantized direction
    sector = np.zeros(mag.shape, dtype=np.int8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3
    steps = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dr, dc) in steps.items():
        fwd = padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
        back = padded[1 - dr:1 - dr + h, 1 - dc:1 - dc + w]
        # ties go to the later pixel so a symmetric ridge stays one pixel wide
        local = (mag >= back) & (mag > fwd)
        keep |= (sector == s) & local
    return keep & (mag > 0)


def canny(img: np.ndarray, sigma: float = 1.4, low: float = 50, high: float = 150) -> np.ndarray:
    """Canny edges: Gaussian blur, Sobel, non-maximum suppression, hysteresis.

    Thresholds apply to the raw Sobel magnitude of the blurred image.
    """
    img = _check_gray(img)
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if not 0 <= low <= high <= 255:
        raise ValueError(f"need 0 <= low <= high <= 255, got low={low}, high={high}")
    blurred = gaussian_blur(img, sigma)
    gx = _correlate3(blurred, SOBEL_X)
    gy = _correlate3(blurred, SOBEL_Y)
    mag = gradient_magnitude(gx, gy)
    thin = _non_max_suppression(mag, gx, gy)
    weak = thin & (mag >= low)
    strong = thin & (mag >= high)
    labels, n = ndimage.label(weak, structure=EIGHT_CONNECTED)
    if n == 0:
        return np.zeros(img.shape, dtype=bool)
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[labels[strong]] = True
    seeded[0] = False
    return seeded[labels]


def _zs_neighbours(p: np.ndarray):
    # P2..P9 clockwise from north, on a zero-padded array
    return (
        p[:-2, 1:-1], p[:-2, 2:], p[1:-1, 2:], p[2:, 2:],
        p[2:, 1:-1], p[2:, :-2], p[1:-1, :-2], p[:-2, :-2],
    )


def zhang_suen_thin(mask: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning to 1-pixel-wide strokes."""
    img = np.pad(np.asarray(mask, dtype=bool).astype(np.uint8), 1)
    while True:
        changed = False
        for step in (0, 1):
            n = _zs_neighbours(img)
            p2, p3, p4, p5, p6, p7, p8, p9 = n
            count = sum(x.astype(np.int32) for x in n)
            seq = n + (p2,)
            transitions = sum(((a == 0) & (b == 1)).astype(np.int32) for a, b in zip(seq, seq[1:]))
            if step == 0:
                c3 = (p2 * p4 * p6) == 0
                c4 = (p4 * p6 * p8) == 0
            else:
                c3 = (p2 * p4 * p8) == 0
                c4 = (p2 * p6 * p8) == 0
            core = img[1:-1, 1:-1]
            remove = (core == 1) & (count >= 2) & (count <= 6) & (transitions == 1) & c3 & c4
            if remove.any():
                core[remove] = 0
                changed = True
        if not changed:
            break
    return img[1:-1, 1:-1].astype(bool)


def remove_small_components(mask: np.ndarray, min_area: int) -> np.ndarray:
    """Drop 8-connected components with fewer than ``min_area`` pixels."""
    if min_area < 0:
        raise ValueError(f"min_area must be non-negative, got {min_area}")
    mask = np.asarray(mask, dtype=bool)
    if min_area <= 1:
        return mask.copy()
    labels, n = ndimage.label(mask, structure=EIGHT_CONNECTED)
    if n == 0:
        return mask.copy()
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    keep = sizes >= min_area
    keep[0] = False
    return keep[labels]


def refine_lines(mask: np.ndarray, min_area: int = 8) -> np.ndarray:
    """Thin to 1-pixel strokes, then drop components smaller than ``min_area``."""
    if min_area < 0:
        raise ValueError(f"min_area must be non-negative, got {min_area}")
    return remove_small_components(zhang_suen_thin(mask), min_area)


def binarize(img: np.ndarray, thr: int = 128, polarity: str = "dark-lines") -> np.ndarray:
    if not 0 <= thr <= 255:
        raise ValueError(f"threshold must lie in [0, 255], got {thr}")
    img = _check_gray(img)
    if polarity == "dark-lines":
        return img < thr
    if polarity == "bright-lines":
        return img >= thr
    raise ValueError(f"unknown polarity {polarity!r}")
