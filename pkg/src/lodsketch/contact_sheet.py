"""One-row montage of the LoD progression for a single view."""
from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .dataset import Manifest
from .pngio import read_png

MARGIN = 8
LABEL_HEIGHT = 16

# (label, candidate (lod, modality) sources in order of preference)
STAGES = [
    ("LoD3 image", [(3, "rgb")]),
    ("LoD3 sketch", [(3, "sketch")]),
    ("LoD2 sketch", [(2, "gen_sketch"), (2, "sketch")]),
    ("LoD1 sketch", [(1, "gen_sketch"), (1, "sketch")]),
]


def sheet_size(cell_w: int, cell_h: int, n: int = len(STAGES)) -> tuple[int, int]:
    return n * cell_w + (n + 1) * MARGIN, cell_h + LABEL_HEIGHT + 3 * MARGIN


def _as_rgb(arr: np.ndarray) -> Image.Image:
    if arr.dtype == np.uint16:
        arr = (arr >> 8).astype(np.uint8)
    if arr.ndim == 2:
        return Image.fromarray(arr, mode="L").convert("RGB")
    return Image.fromarray(arr, mode="RGB")


def contact_sheet(man: Manifest, group_id: str, view_index: int) -> tuple[np.ndarray, list[str]]:
    """Montage array and the labels of cells that had no source entry."""
    cells = []
    for label, sources in STAGES:
        entry = next((e for e in (man.find(group_id, lod, view_index, mod) for lod, mod in sources) if e), None)
        cells.append((label, read_png(man.abspath(entry)) if entry else None))
    present = [c for _, c in cells if c is not None]
    if present:
        cell_h, cell_w = present[0].shape[:2]
    else:
        cell_h = cell_w = man.plan.image_size
    width, height = sheet_size(cell_w, cell_h)
    sheet = Image.new("RGB", (width, height), (255, 255, 255))
    draw = ImageDraw.Draw(sheet)
    font = ImageFont.load_default()
    missing = []
    for i, (label, arr) in enumerate(cells):
        x = MARGIN + i * (cell_w + MARGIN)
        y = 2 * MARGIN + LABEL_HEIGHT
        if arr is None:
            draw.rectangle([x, y, x + cell_w - 1, y + cell_h - 1], fill=(235, 235, 235), outline=(180, 180, 180))
            label = f"{label} (missing)"
            missing.append(label)
        else:
            sheet.paste(_as_rgb(arr), (x, y))
        draw.text((x, MARGIN), label, fill=(0, 0, 0), font=font)
    return np.asarray(sheet), missing
