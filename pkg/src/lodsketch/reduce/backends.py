"""Reducer request/response types and the two backend implementations."""
from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field

import numpy as np
import requests

from ..pngio import decode_png, encode_png
from . import proxy

LOD2_PROMPT = "LoD2 style, simplified structure, no small fixtures or textures"
LOD1_PROMPT = "LoD1 style, simplified massing volumes, no openings or ornaments"

REDUCER_URL_ENV = "LODSKETCH_REDUCER_URL"


class ReducerError(Exception):
    """Base class for detail-reduction failures."""


class TransportError(ReducerError):
    """Unreachable server, timeout or 5xx; safe to retry."""


class PermanentRequestError(ReducerError):
    """The server rejected the request (4xx); retrying will not help."""


class ProtocolError(ReducerError):
    """The server answered with something that violates the wire contract."""


@dataclass
class ReducerRequest:
    condition_image: np.ndarray
    target: str  # "lod2" | "lod1"
    prompt: str = ""
    depth: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if self.target not in ("lod2", "lod1"):
            raise ValueError(f"target must be 'lod2' or 'lod1', got {self.target!r}")
        if self.target == "lod2" and self.depth is not None:
            raise ValueError("LoD2 requests carry no depth")
        if self.depth is not None and self.depth.shape != self.condition_image.shape[:2]:
            raise ValueError("depth and condition image sizes differ")
        if not self.prompt:
            self.prompt = LOD2_PROMPT if self.target == "lod2" else LOD1_PROMPT

    @property
    def size(self) -> tuple[int, int]:
        return self.condition_image.shape[:2]


@dataclass
class ReducerResult:
    image: np.ndarray
    backend_id: str
    elapsed_ms: float = field(default=0.0, compare=False)


class ProxyBackend:
    """Deterministic classical reduction; ignores prompt and seed."""

    backend_id = "proxy"

    def __init__(self, area_frac: float = 0.01, layers: int = 3, bin_thr: int = 128, min_area: int = 8):
        self.area_frac = area_frac
        self.layers = layers
        self.bin_thr = bin_thr
        self.min_area = min_area

    def healthy(self) -> bool:
        return True

    def reduce(self, req: ReducerRequest) -> ReducerResult:
        t0 = time.perf_counter()
        if req.target == "lod2":
            img = req.condition_image
            if img.ndim == 2:
                img = np.repeat(img[..., None], 3, axis=2)
            out = proxy.proxy_lod2_image(img, self.area_frac)
        else:
            out = proxy.proxy_lod1_image(req.condition_image, req.depth, self.layers,
                                         self.bin_thr, self.min_area)
        return ReducerResult(out, self.backend_id, (time.perf_counter() - t0) * 1000)

    def provenance(self) -> dict:
        return {"backend": self.backend_id, "area_frac": self.area_frac, "layers": self.layers,
                "bin_thr": self.bin_thr, "min_area": self.min_area}


class RemoteBackend:
    """Client for ``POST /reduce`` servers (multipart PNG in, PNG out).

    5xx responses, connection failures and timeouts are retried with
    exponential backoff; 4xx responses fail immediately.
    """

    backend_id = "remote"

    def __init__(self, endpoint: str | None = None, timeout: float = 60.0, retries: int = 3,
                 backoff: float = 0.5, max_in_flight: int = 4):
        endpoint = endpoint or os.environ.get(REDUCER_URL_ENV)
        if not endpoint:
            raise ValueError(f"no reducer endpoint given and {REDUCER_URL_ENV} is unset")
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self.attempts = 0

    def healthy(self) -> bool:
        try:
            return requests.get(f"{self.endpoint}/healthz", timeout=min(self.timeout, 10)).status_code == 200
        except requests.RequestException:
            return False

    def _post(self, req: ReducerRequest) -> bytes:
        files = {"image": ("image.png", encode_png(req.condition_image), "image/png")}
        if req.depth is not None:
            files["depth"] = ("depth.png", encode_png(req.depth.astype(np.uint16)), "image/png")
        data = {"prompt": req.prompt, "target": req.target, "seed": str(int(req.seed))}
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            self.attempts += 1
            try:
                with self._slots:
                    resp = requests.post(f"{self.endpoint}/reduce", files=files, data=data, timeout=self.timeout)
            except requests.RequestException as exc:
                last = TransportError(f"reducer request failed: {exc}")
                continue
            if resp.status_code == 200:
                return resp.content
            if 400 <= resp.status_code < 500:
                raise PermanentRequestError(f"reducer rejected request: HTTP {resp.status_code} {resp.text[:200]}")
            last = TransportError(f"reducer server error: HTTP {resp.status_code}")
        raise last

    def reduce(self, req: ReducerRequest) -> ReducerResult:
        t0 = time.perf_counter()
        body = self._post(req)
        try:
            img = decode_png(body)
        except Exception as exc:
            raise ProtocolError(f"response is not a PNG: {exc}") from exc
        if img.shape[:2] != req.size:
            raise ProtocolError(f"response size {img.shape[:2]} differs from request size {req.size}")
        return ReducerResult(img, self.backend_id, (time.perf_counter() - t0) * 1000)

    def provenance(self) -> dict:
        return {"backend": self.backend_id, "endpoint": self.endpoint}


def make_backend(kind: str, endpoint: str | None = None, **kwargs):
    if kind == "proxy":
        return ProxyBackend(**kwargs)
    if kind == "remote":
        backend = RemoteBackend(endpoint, **kwargs)
        if not backend.healthy():
            raise TransportError(f"reducer at {backend.endpoint} failed its health check")
        return backend
    raise ValueError(f"unknown backend {kind!r}")
