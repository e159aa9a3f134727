"""Shared fixtures: a scriptable in-process captioning server.

The server implements the POST /v1/caption contract and is steered through
its `script` attribute: per-image failure budgets, artificial per-request
delays, and malformed-response modes, so retry/backoff and ordering behavior
can be exercised without any network.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest


class MockCaptionServer:
    """Wraps a ThreadingHTTPServer; captions echo 'cap:<prompt>:<image_id>'."""

    def __init__(self):
        self.script = {
            "fail_times": {},  # image_id -> remaining 500 responses
            "delay": 0.0,  # seconds before answering
            "delay_by_image": {},  # image_id -> seconds
            "mode": "echo",  # or "non_json", "missing_caption", "empty_caption", "not_found"
        }
        self.requests: list[dict] = []
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output clean
                pass

            def do_POST(self):
                if self.path != "/v1/caption":
                    self.send_response(404)
                    self.end_headers()
                    return
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                with outer._lock:
                    outer.requests.append(body)
                    remaining = outer.script["fail_times"].get(body.get("image_id"), 0)
                    if remaining > 0:
                        outer.script["fail_times"][body["image_id"]] = remaining - 1
                        fail_now = True
                    else:
                        fail_now = False
                    delay = outer.script["delay_by_image"].get(
                        body.get("image_id"), outer.script["delay"]
                    )
                    mode = outer.script["mode"]
                if delay:
                    time.sleep(delay)
                if fail_now:
                    self.send_response(500)
                    self.end_headers()
                    return
                if mode == "not_found":
                    self.send_response(404)
                    self.end_headers()
                    return
                if mode == "non_json":
                    payload = b"this is not json"
                elif mode == "missing_caption":
                    payload = json.dumps({"text": "nope"}).encode()
                elif mode == "empty_caption":
                    payload = json.dumps({"caption": ""}).encode()
                else:
                    caption = f"cap:{body['prompt']}:{body['image_id']}"
                    payload = json.dumps({"caption": caption}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def endpoint(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    def reset(self):
        with self._lock:
            self.requests.clear()
            self.script.update(
                {"fail_times": {}, "delay": 0.0, "delay_by_image": {}, "mode": "echo"}
            )

    def shutdown(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture(scope="session")
def caption_server():
    server = MockCaptionServer()
    yield server
    server.shutdown()


@pytest.fixture()
def mock_captioner(caption_server):
    caption_server.reset()
    return caption_server
