"""Live IQ ingestion: a TCP client framing a raw cf32 byte stream.

The wire carries no framing protocol (the capture flowgraph publishes a
continuous stream); frames are assembled client-side by sample count.  A
bounded queue decouples the socket reader from the consumer and favors
recency: when full, the oldest unconsumed frame is dropped and counted.
On disconnect the partial frame is discarded and the client reconnects
with exponential backoff (0.5 s doubling to 8 s) until stopped.
"""

from __future__ import annotations

import socket
import threading
from collections import deque
from typing import Iterator, Optional

import numpy as np

from modembed.signals import IqFrame

BACKOFF_INITIAL = 0.5
BACKOFF_MAX = 8.0
_RECV_CHUNK = 65536


class StreamError(RuntimeError):
    pass


class FrameStream:
    """Client-side framer over a host:port cf32 stream.

    One producer thread reads and frames; ``get``/iteration may run on any
    other thread.  Sample order within a delivered frame always equals
    wire order, and frames never split or reorder samples.
    """

    def __init__(self, host: str, port: int, frame_len: int,
                 queue_capacity: int = 64, connect_timeout: float = 5.0):
        if frame_len < 1:
            raise ValueError("frame_len must be >= 1")
        if queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        self.host = host
        self.port = int(port)
        self.frame_len = frame_len
        self.capacity = queue_capacity
        self.connect_timeout = connect_timeout
        self._cond = threading.Condition()
        self._queue: deque = deque()
        self._dropped = 0
        self._delivered = 0
        self._pending_bytes = 0
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "FrameStream":
        try:
            socket.getaddrinfo(self.host, self.port, type=socket.SOCK_STREAM)
        except socket.gaierror as exc:
            raise StreamError(
                f"cannot resolve {self.host}:{self.port}: {exc}"
            ) from exc
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        with self._cond:
            self._cond.notify_all()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def __enter__(self) -> "FrameStream":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- consumer side -----------------------------------------------------

    @property
    def dropped(self) -> int:
        with self._cond:
            return self._dropped

    @property
    def delivered(self) -> int:
        with self._cond:
            return self._delivered

    @property
    def pending_samples(self) -> int:
        """Complex samples buffered toward the next (incomplete) frame."""
        with self._cond:
            return self._pending_bytes // 8

    def get(self, timeout: Optional[float] = None) -> Optional[IqFrame]:
        """Next frame, or None on timeout / after stop with an empty queue."""
        with self._cond:
            if not self._cond.wait_for(
                lambda: self._queue or self._stop.is_set(), timeout
            ):
                return None
            if self._queue:
                self._delivered += 1
                return self._queue.popleft()
            return None

    def frames(self) -> Iterator[IqFrame]:
        while True:
            frame = self.get(timeout=0.25)
            if frame is not None:
                yield frame
            elif self._stop.is_set():
                return

    # -- producer side -----------------------------------------------------

    def _push(self, frame: IqFrame) -> None:
        with self._cond:
            if len(self._queue) == self.capacity:
                self._queue.popleft()
                self._dropped += 1
            self._queue.append(frame)
            self._cond.notify()

    def _run(self) -> None:
        backoff = BACKOFF_INITIAL
        frame_bytes = 8 * self.frame_len
        while not self._stop.is_set():
            try:
                sock = socket.create_connection(
                    (self.host, self.port), timeout=self.connect_timeout
                )
            except OSError:
                if self._stop.wait(backoff):
                    break
                backoff = min(backoff * 2.0, BACKOFF_MAX)
                continue
            backoff = BACKOFF_INITIAL
            buf = bytearray()
            sock.settimeout(0.25)
            try:
                while not self._stop.is_set():
                    try:
                        chunk = sock.recv(_RECV_CHUNK)
                    except socket.timeout:
                        continue
                    except OSError:
                        break
                    if not chunk:
                        break
                    buf.extend(chunk)
                    while len(buf) >= frame_bytes:
                        raw = np.frombuffer(
                            bytes(buf[:frame_bytes]), dtype="<f4"
                        ).astype(np.float64)
                        del buf[:frame_bytes]
                        self._push(IqFrame(i=raw[0::2], q=raw[1::2]))
                    with self._cond:
                        self._pending_bytes = len(buf)
            finally:
                sock.close()
            # partial frame at disconnect is discarded
            with self._cond:
                self._pending_bytes = 0
                self._cond.notify_all()
        with self._cond:
            self._cond.notify_all()


def stream_frames(endpoint: str, frame_len: int,
                  queue_capacity: int = 64) -> FrameStream:
    """Start a FrameStream from an ``host:port`` endpoint string."""
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise StreamError(f"endpoint must be host:port, got {endpoint!r}")
    return FrameStream(host, int(port), frame_len, queue_capacity).start()
