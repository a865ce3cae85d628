"""Detail reduction: LoD3 -> LoD2 image reduction and LoD2 -> LoD1 volumetric abstraction.

The generative models live behind a wire protocol; :class:`ProxyBackend`
is the in-process classical stand-in.
"""
from __future__ import annotations

import numpy as np

from ..imagecore import to_grayscale
from .backends import (
    LOD1_PROMPT,
    LOD2_PROMPT,
    PermanentRequestError,
    ProtocolError,
    ProxyBackend,
    ReducerError,
    ReducerRequest,
    ReducerResult,
    RemoteBackend,
    TransportError,
    make_backend,
)
from .depth import DepthProvider, MissingDataError, estimate_depth, planar_depth
from .proxy import (
    MassBox,
    mass_boxes,
    proxy_lod1_image,
    proxy_lod2_image,
    proxy_mass_boxing,
    proxy_remove_small_components,
    proxy_simplify_contours,
    render_massing,
)


def reduce_lod3_to_lod2(img: np.ndarray, backend, prompt: str = LOD2_PROMPT, seed: int = 0) -> np.ndarray:
    """LoD2-style RGB image from a LoD3 render."""
    res = backend.reduce(ReducerRequest(np.asarray(img), "lod2", prompt, None, seed))
    out = res.image
    if out.ndim == 2:
        out = np.repeat(out[..., None], 3, axis=2)
    return out


def abstract_lod2_to_lod1(sketch: np.ndarray, depth: np.ndarray | None, backend, seed: int = 0,
                          provider: DepthProvider | None = None, key: tuple | None = None,
                          prompt: str = LOD1_PROMPT) -> np.ndarray:
    """Massing image from a LoD2 sketch plus depth.

    Missing depth is filled from ``provider`` (planar fallback if none)
    before the backend is called.
    """
    sketch = np.asarray(sketch)
    if depth is None:
        depth = estimate_depth(sketch, provider or DepthProvider("planar-fallback"), key)
    res = backend.reduce(ReducerRequest(sketch, "lod1", prompt, depth, seed))
    return to_grayscale(res.image)


__all__ = [
    "LOD1_PROMPT", "LOD2_PROMPT", "DepthProvider", "MassBox", "MissingDataError",
    "PermanentRequestError", "ProtocolError", "ProxyBackend", "ReducerError", "ReducerRequest",
    "ReducerResult", "RemoteBackend", "TransportError", "abstract_lod2_to_lod1", "estimate_depth",
    "make_backend", "mass_boxes", "planar_depth", "proxy_lod1_image", "proxy_lod2_image",
    "proxy_mass_boxing", "proxy_remove_small_components", "proxy_simplify_contours",
    "reduce_lod3_to_lod2", "render_massing",
]
