import socket
import threading
import time

import httpx
import pytest
import uvicorn

from seqpat.service import create_app


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class LiveService:
    """A real uvicorn server in a background thread (needed for SSE tests)."""

    def __init__(self):
        self.port = _free_port()
        self.base = f"http://127.0.0.1:{self.port}"
        config = uvicorn.Config(
            create_app(), host="127.0.0.1", port=self.port, log_level="error"
        )
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def start(self):
        self.thread.start()
        for _ in range(100):
            try:
                httpx.get(self.base + "/", timeout=0.5)
                return self
            except Exception:
                time.sleep(0.05)
        raise RuntimeError("service did not come up")

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=5)


@pytest.fixture(scope="module")
def live_service():
    service = LiveService().start()
    yield service
    service.stop()
