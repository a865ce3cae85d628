"""Sketch extractors built from :mod:`lodsketch.imagecore`.

``extract_full_detail_sketch`` produces the grayscale line drawing used for
LoD3 and LoD2 renders; ``extract_lod1_sketch`` produces binary, 1-pixel line
work for massing images.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import imagecore as ic
from .imagecore import StructuringElement

LEVELS = (1, 2, 3)


@dataclass(frozen=True)
class SketchParams:
    alpha: float = 0.1
    beta: float = 0.5
    blackhat_se: StructuringElement = field(default_factory=StructuringElement)
    blackhat_gain: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if self.blackhat_gain < 0:
            raise ValueError(f"blackhat_gain must be non-negative, got {self.blackhat_gain}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SketchParams":
        d = dict(d)
        se = d.pop("blackhat_se", None)
        if isinstance(se, dict):
            se = StructuringElement(**se)
        return cls(blackhat_se=se or StructuringElement(), **d)


@dataclass(frozen=True)
class Lod1SketchParams:
    canny_sigma: float = 1.4
    canny_low: float = 50
    canny_high: float = 150
    min_component_area: int = 8

    def __post_init__(self):
        if self.canny_low > self.canny_high:
            raise ValueError(f"canny_low ({self.canny_low}) exceeds canny_high ({self.canny_high})")
        if self.canny_sigma < 0:
            raise ValueError(f"canny_sigma must be non-negative, got {self.canny_sigma}")
        if self.min_component_area < 0:
            raise ValueError("min_component_area must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def extract_full_detail_sketch(img: np.ndarray, p: SketchParams | None = None) -> np.ndarray:
    """Grayscale sketch: Sobel edge map blended with shading, contrast-boosted, fine lines darkened."""
    p = p or SketchParams()
    gray = ic.to_grayscale(img)
    gx, gy = ic.sobel(gray)
    edges = ic.invert_edges(ic.gradient_magnitude(gx, gy))
    blended = ic.blend_shadow(edges, gray, p.alpha)
    out = ic.enhance_contrast(blended, p.beta)
    return ic.darken_fine_lines(out, p.blackhat_se, p.blackhat_gain)


def extract_lod1_sketch(img: np.ndarray, p: Lod1SketchParams | None = None) -> np.ndarray:
    p = p or Lod1SketchParams()
    gray = ic.to_grayscale(img)
    edges = ic.canny(gray, p.canny_sigma, p.canny_low, p.canny_high)
    return ic.refine_lines(edges, p.min_component_area)


def parse_level(level) -> int:
    if isinstance(level, str):
        s = level.strip().lower()
        if s.startswith("lod"):
            s = s[3:]
        level = int(s) if s.isdigit() else level
    if level not in LEVELS:
        raise ValueError(f"unknown LoD level {level!r}")
    return int(level)


def sketch_for_level(img: np.ndarray, level, full: SketchParams | None = None,
                     lod1: Lod1SketchParams | None = None) -> np.ndarray:
    """Route LoD3/LoD2 to the full-detail extractor and LoD1 to the Canny extractor."""
    level = parse_level(level)
    if level == 1:
        return extract_lod1_sketch(ic.to_grayscale(img), lod1)
    return extract_full_detail_sketch(img, full)


def line_pixel_count(sketch: np.ndarray, thr: int = 128) -> int:
    """Line pixels of a grayscale sketch (dark below ``thr``) or of a mask."""
    sketch = np.asarray(sketch)
    if sketch.dtype == bool:
        return int(sketch.sum())
    return int(ic.binarize(sketch, thr, "dark-lines").sum())
