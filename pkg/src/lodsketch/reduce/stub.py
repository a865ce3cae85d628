"""Bundled stub server for the reducer and depth wire protocols.

``/reduce`` echoes the posted image, ``/depth`` answers with a 16-bit
horizontal gradient of the input size, ``/healthz`` returns 200. Faults can
be injected: the first ``fail_first`` calls answer ``fail_status``, and the
first ``delay_first`` calls sleep ``delay`` seconds before answering.

Run standalone with ``python -m lodsketch.reduce.stub --port 8765``.
"""
from __future__ import annotations

import argparse
import email.parser
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from ..pngio import decode_png, encode_png


def parse_multipart(content_type: str, body: bytes) -> dict[str, bytes]:
    raw = b"Content-Type: " + content_type.encode("latin-1") + b"\r\nMIME-Version: 1.0\r\n\r\n" + body
    msg = email.parser.BytesParser().parsebytes(raw)
    parts = {}
    if not msg.is_multipart():
        return parts
    for part in msg.get_payload():
        name = part.get_param("name", header="content-disposition")
        if name:
            parts[name] = part.get_payload(decode=True)
    return parts


def gradient_depth(h: int, w: int) -> np.ndarray:
    ramp = np.linspace(0, 65534, w).round().astype(np.uint16) if w > 1 else np.zeros(1, np.uint16)
    return np.tile(ramp, (h, 1))


class StubState:
    def __init__(self, fail_first=0, fail_status=503, delay_first=0, delay=0.0, mode="echo"):
        self.fail_first = fail_first
        self.fail_status = fail_status
        self.delay_first = delay_first
        self.delay = delay
        self.mode = mode
        self.calls = 0
        self.requests: list[dict] = []
        self.lock = threading.Lock()


def _make_handler(state: StubState):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def _send(self, status, body=b"", ctype="image/png"):
            self.send_response(status)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/healthz":
                self._send(200, b"ok", "text/plain")
            else:
                self._send(404, b"not found", "text/plain")

        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            body = self.rfile.read(length)
            with state.lock:
                state.calls += 1
                n = state.calls
            if n <= state.delay_first and state.delay > 0:
                threading.Event().wait(state.delay)
            if n <= state.fail_first:
                self._send(state.fail_status, b"injected failure", "text/plain")
                return
            if self.path == "/reduce":
                parts = parse_multipart(self.headers.get("Content-Type", ""), body)
                if "image" not in parts:
                    self._send(400, b"missing image part", "text/plain")
                    return
                with state.lock:
                    state.requests.append({k: (v if k in ("image", "depth") else v.decode("utf-8"))
                                           for k, v in parts.items()})
                image = parts["image"]
                if state.mode == "bad-size":
                    img = decode_png(image)
                    image = encode_png(np.zeros((img.shape[0] + 1, img.shape[1]), dtype=np.uint8))
                self._send(200, image)
            elif self.path == "/depth":
                img = decode_png(body)
                self._send(200, encode_png(gradient_depth(*img.shape[:2])))
            else:
                self._send(404, b"not found", "text/plain")

    return Handler


@contextmanager
def serve_stub(port: int = 0, **kwargs):
    """Run a stub server on a background thread; yields (base_url, state)."""
    state = StubState(**kwargs)
    server = ThreadingHTTPServer(("127.0.0.1", port), _make_handler(state))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}", state
    finally:
        server.shutdown()
        server.server_close()


def main(argv=None):
    ap = argparse.ArgumentParser(description="echo stub for the reducer/depth wire protocols")
    ap.add_argument("--port", type=int, default=8765)
    ap.add_argument("--fail-first", type=int, default=0)
    ap.add_argument("--fail-status", type=int, default=503)
    args = ap.parse_args(argv)
    state = StubState(fail_first=args.fail_first, fail_status=args.fail_status)
    server = ThreadingHTTPServer(("127.0.0.1", args.port), _make_handler(state))
    print(f"stub listening on http://127.0.0.1:{args.port}")
    server.serve_forever()


if __name__ == "__main__":
    main()
