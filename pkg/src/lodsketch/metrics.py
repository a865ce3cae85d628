"""Image-pair evaluation: SSIM, MSE, symmetric Hausdorff distance.

Hausdorff distances are taken between the pixel-coordinate point sets of
two binary masks and computed through an exact Euclidean distance
transform, so results equal the all-pairs definition bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .imagecore import binarize

MAX_MSE_8BIT = 255.0 ** 2  # 65025


@dataclass(frozen=True)
class SsimConfig:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 255.0

    @property
    def c1(self) -> float:
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.data_range) ** 2

    def kernel1d(self) -> np.ndarray:
        x = np.arange(self.window, dtype=np.float64) - self.window // 2
        k = np.exp(-(x * x) / (2.0 * self.sigma ** 2))
        return k / k.sum()


@dataclass
class MetricsReport:
    ssim: float
    mse: float
    hd_px: float | None
    normalized_hd_pct: float | None
    width: int
    height: int
    hd_absent_reason: str | None = None
    bin_thr: int = 128
    key: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _same_shape(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _same_shape(a, b)
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def mse_fraction(value: float) -> float:
    """MSE as a percentage of the 8-bit maximum 255**2."""
    if not 0 <= value <= MAX_MSE_8BIT:
        raise ValueError(f"MSE {value} outside [0, {MAX_MSE_8BIT:g}]")
    return 100.0 * value / MAX_MSE_8BIT


def _filter_valid(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    n = len(k)
    h, w = x.shape
    rows = np.zeros((h, w - n + 1))
    for i, kv in enumerate(k):
        rows += kv * x[:, i:i + w - n + 1]
    out = np.zeros((h - n + 1, w - n + 1))
    for i, kv in enumerate(k):
        out += kv * rows[i:i + h - n + 1, :]
    return out


def ssim_map(a: np.ndarray, b: np.ndarray, cfg: SsimConfig | None = None) -> np.ndarray:
    cfg = cfg or SsimConfig()
    a, b = _same_shape(a, b)
    if a.ndim != 2:
        raise ValueError("ssim expects single-channel images")
    if a.shape[0] < cfg.window or a.shape[1] < cfg.window:
        raise ValueError(f"image {a.shape} smaller than the {cfg.window}x{cfg.window} SSIM window")
    x = a.astype(np.float64)
    y = b.astype(np.float64)
    k = cfg.kernel1d()
    mu_x = _filter_valid(x, k)
    mu_y = _filter_valid(y, k)
    xx = _filter_valid(x * x, k)
    yy = _filter_valid(y * y, k)
    xy = _filter_valid(x * y, k)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + cfg.c1) * (2.0 * cov + cfg.c2)
    den = (mu_x * mu_x + mu_y * mu_y + cfg.c1) * (var_x + var_y + cfg.c2)
    return num / den


def ssim(a: np.ndarray, b: np.ndarray, cfg: SsimConfig | None = None) -> float:
    """Mean SSIM over every valid 11x11 Gaussian window position."""
    return float(np.mean(ssim_map(a, b, cfg)))


def _directed(a: np.ndarray, b: np.ndarray) -> int:
    """max over a of the squared distance to the nearest pixel of b."""
    _, (ir, ic) = ndimage.distance_transform_edt(~b, return_indices=True)
    rows, cols = np.nonzero(a)
    dr = rows - ir[rows, cols]
    dc = cols - ic[rows, cols]
    return int(np.max(dr * dr + dc * dc))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance in pixels between two non-empty masks."""
    a, b = _same_shape(a, b)
    a = a.astype(bool)
    b = b.astype(bool)
    if not a.any() or not b.any():
        raise ValueError("Hausdorff distance is undefined for an empty point set")
    return math.sqrt(max(_directed(a, b), _directed(b, a)))


def diagonal(width: int, height: int) -> float:
    if width <= 0 or height <= 0:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    return math.hypot(width, height)


def normalized_hd(hd_px: float, width: int, height: int) -> float:
    """Hausdorff distance as a percentage of the image diagonal."""
    if hd_px < 0:
        raise ValueError("hd_px must be non-negative")
    return 100.0 * hd_px / diagonal(width, height)


def evaluate_pair(a: np.ndarray, b: np.ndarray, bin_thr: int = 128,
                  cfg: SsimConfig | None = None, key: dict | None = None) -> MetricsReport:
    a, b = _same_shape(a, b)
    h, w = a.shape[:2]
    ma = binarize(a, bin_thr, "dark-lines")
    mb = binarize(b, bin_thr, "dark-lines")
    hd = nhd = None
    reason = None
    if not ma.any() and not mb.any():
        reason = "both-empty"
    elif not ma.any():
        reason = "a-empty"
    elif not mb.any():
        reason = "b-empty"
    else:
        hd = hausdorff(ma, mb)
        nhd = normalized_hd(hd, w, h)
    return MetricsReport(
        ssim=ssim(a, b, cfg), mse=mse(a, b), hd_px=hd, normalized_hd_pct=nhd,
        width=w, height=h, hd_absent_reason=reason, bin_thr=bin_thr, key=dict(key or {}),
    )


def write_reports_jsonl(path, reports) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            d = r.to_dict() if isinstance(r, MetricsReport) else r
            fh.write(json.dumps(d, sort_keys=True) + "\n")


def read_reports_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


SUMMARY_COLUMNS = ["stage", "statistic", "n", "ssim", "mse", "hd_px", "normalized_hd_pct", "width", "height"]


def summarize(reports_by_stage: dict[str, list]) -> list[dict]:
    """Mean and median rows per stage; HD columns use only pairs where HD is defined."""
    rows = []
    for stage in sorted(reports_by_stage):
        reps = [r.to_dict() if isinstance(r, MetricsReport) else r for r in reports_by_stage[stage]]
        if not reps:
            continue
        sizes = {(r["width"], r["height"]) for r in reps}
        w, h = sizes.pop() if len(sizes) == 1 else ("", "")
        for name, fn in (("mean", np.mean), ("median", np.median)):
            row = {"stage": stage, "statistic": name, "n": len(reps), "width": w, "height": h}
            for col in ("ssim", "mse", "hd_px", "normalized_hd_pct"):
                vals = [r[col] for r in reps if r[col] is not None]
                row[col] = float(fn(vals)) if vals else None
            rows.append(row)
    return rows


def write_summary_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else
                                 (f"{row[k]:.6f}" if isinstance(row[k], float) else row[k]))
                             for k in SUMMARY_COLUMNS})
