"""Depth sources for LoD2 -> LoD1 conditioning."""
from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np
import requests

from ..imagecore import to_grayscale
from ..pngio import decode_png, encode_png, read_png
from ..synthrender import DEPTH_BACKGROUND
from .backends import PermanentRequestError, ProtocolError, TransportError

DEPTH_URL_ENV = "LODSKETCH_DEPTH_URL"
PLANAR_DEPTH = 32768


class MissingDataError(LookupError):
    pass


@dataclass
class DepthProvider:
    """``rendered`` reads the paired depth PNG from a manifest, ``remote-estimator``
    calls ``POST /depth``, ``planar-fallback`` fabricates a flat plane."""

    kind: str = "planar-fallback"
    endpoint: str | None = None
    manifest: object | None = None
    root: str | None = None
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 0.5

    def __post_init__(self):
        aliases = {"planar": "planar-fallback", "remote": "remote-estimator"}
        self.kind = aliases.get(self.kind, self.kind)
        if self.kind not in ("rendered", "remote-estimator", "planar-fallback"):
            raise ValueError(f"unknown depth provider {self.kind!r}")
        if self.kind == "remote-estimator":
            self.endpoint = self.endpoint or os.environ.get(DEPTH_URL_ENV)
            if not self.endpoint:
                raise ValueError(f"remote depth estimator needs an endpoint or {DEPTH_URL_ENV}")
            self.endpoint = self.endpoint.rstrip("/")


def planar_depth(img: np.ndarray) -> np.ndarray:
    """Constant mid depth; rows or columns that are entirely white count as background margin."""
    gray = to_grayscale(img)
    depth = np.full(gray.shape, PLANAR_DEPTH, dtype=np.uint16)
    white = gray == 255
    margin = white.all(axis=1)[:, None] | white.all(axis=0)[None, :]
    depth[margin] = DEPTH_BACKGROUND
    return depth


def _remote_depth(img: np.ndarray, provider: DepthProvider) -> np.ndarray:
    body = encode_png(img)
    last = None
    for attempt in range(provider.retries + 1):
        if attempt:
            time.sleep(provider.backoff * 2 ** (attempt - 1))
        try:
            resp = requests.post(f"{provider.endpoint}/depth", data=body,
                                 headers={"Content-Type": "image/png"}, timeout=provider.timeout)
        except requests.RequestException as exc:
            last = TransportError(f"depth request failed: {exc}")
            continue
        if resp.status_code == 200:
            try:
                depth = decode_png(resp.content)
            except Exception as exc:
                raise ProtocolError(f"depth response is not a PNG: {exc}") from exc
            if depth.shape != img.shape[:2]:
                raise ProtocolError(f"depth size {depth.shape} differs from image size {img.shape[:2]}")
            return depth.astype(np.uint16)
        if 400 <= resp.status_code < 500:
            raise PermanentRequestError(f"depth estimator rejected request: HTTP {resp.status_code}")
        last = TransportError(f"depth estimator error: HTTP {resp.status_code}")
    raise last


def estimate_depth(img: np.ndarray, provider: DepthProvider, key: tuple | None = None) -> np.ndarray:
    """Depth for ``img``; ``key`` = (group_id, lod, view_index) for the rendered provider."""
    if provider.kind == "planar-fallback":
        return planar_depth(img)
    if provider.kind == "remote-estimator":
        return _remote_depth(np.asarray(img), provider)
    if provider.manifest is None or key is None:
        raise MissingDataError("rendered depth needs a manifest and an entry key")
    group, lod, view = key
    entry = provider.manifest.find(group, lod, view, "depth")
    if entry is None:
        raise MissingDataError(f"no rendered depth for group={group} lod={lod} view={view}")
    root = provider.root if provider.root is not None else provider.manifest.root
    return read_png(os.path.join(root, entry.path))
