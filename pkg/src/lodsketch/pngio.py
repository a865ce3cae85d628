"""PNG read/write for 8-bit gray, 8-bit RGB and 16-bit depth rasters."""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image


def encode_png(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr)
    if arr.dtype == bool:
        arr = np.where(arr, 0, 255).astype(np.uint8)
    if arr.dtype == np.uint16 and arr.ndim == 2:
        img = Image.frombytes("I;16", (arr.shape[1], arr.shape[0]), arr.astype("<u2").tobytes())
    elif arr.dtype == np.uint8 and arr.ndim == 2:
        img = Image.fromarray(arr, mode="L")
    elif arr.dtype == np.uint8 and arr.ndim == 3 and arr.shape[2] == 3:
        img = Image.fromarray(arr, mode="RGB")
    else:
        raise ValueError(f"unsupported raster: dtype={arr.dtype}, shape={arr.shape}")
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return _to_array(img)


def _to_array(img: Image.Image) -> np.ndarray:
    if img.mode in ("I;16", "I;16B", "I;16L"):
        return np.asarray(img, dtype=np.uint16).copy()
    if img.mode == "I":
        return np.asarray(img).astype(np.uint16)
    if img.mode == "L":
        return np.asarray(img, dtype=np.uint8).copy()
    if img.mode == "1":
        return np.asarray(img.convert("L"), dtype=np.uint8).copy()
    return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()


def write_png(path, arr: np.ndarray) -> bytes:
    """Encode ``arr`` and write it; boolean masks are stored as black lines on white."""
    data = encode_png(arr)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    return data


def read_png(path) -> np.ndarray:
    with Image.open(path) as img:
        return _to_array(img)


def png_size(path) -> tuple[int, int]:
    """(width, height) from the header without decoding pixels."""
    with Image.open(path) as img:
        return img.size
