"""Talk to a reducer over HTTP using the bundled stub server.

A real deployment would point LODSKETCH_REDUCER_URL at a diffusion model
service; the stub just echoes the image back. The first request is made to
fail so the retry with backoff is visible.

    python demos/remote_reducer.py
"""
import numpy as np

from lodsketch.reduce import PermanentRequestError, ReducerRequest, RemoteBackend
from lodsketch.reduce.stub import serve_stub

img = np.random.default_rng(0).integers(0, 256, (64, 64, 3)).astype(np.uint8)

with serve_stub(fail_first=1) as (url, state):
    be = RemoteBackend(url, retries=3, backoff=0.05)
    print("health check:", be.healthy())
    res = be.reduce(ReducerRequest(img, "lod2", seed=11))
    print(f"echoed image identical: {np.array_equal(res.image, img)}; "
          f"attempts {be.attempts}, server calls {state.calls}, {res.elapsed_ms:.0f} ms")
    print("multipart fields seen by the server:", sorted(state.requests[0]))

with serve_stub(fail_first=5, fail_status=422) as (url, state):
    try:
        RemoteBackend(url, backoff=0.05).reduce(ReducerRequest(img, "lod2"))
    except PermanentRequestError as exc:
        print(f"4xx is not retried ({state.calls} call): {exc}")
