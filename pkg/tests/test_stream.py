import socket
import threading
import time

import numpy as np
import pytest

from modembed.stream import FrameStream, StreamError, stream_frames


class LoopbackServer:
    """One-shot TCP server pushing a scripted cf32 byte stream."""

    def __init__(self, payloads, delay=0.0, keep_open=1.0):
        self.payloads = payloads
        self.delay = delay
        self.keep_open = keep_open
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind(("127.0.0.1", 0))
        self.sock.listen(1)
        self.port = self.sock.getsockname()[1]
        self.thread = threading.Thread(target=self._serve, daemon=True)

    def start(self):
        self.thread.start()
        return self

    def _serve(self):
        conn, _ = self.sock.accept()
        try:
            for chunk in self.payloads:
                conn.sendall(chunk)
                if self.delay:
                    time.sleep(self.delay)
            time.sleep(self.keep_open)
        finally:
            conn.close()
            self.sock.close()


def samples_blob(values):
    """Interleave a complex ramp: sample k -> (k, -k)."""
    out = np.empty(2 * len(values), dtype="<f4")
    out[0::2] = values
    out[1::2] = -np.asarray(values, dtype=np.float64)
    return out.tobytes()


class TestFraming:
    def test_250_samples_two_frames(self):
        server = LoopbackServer([samples_blob(np.arange(250))]).start()
        stream = FrameStream("127.0.0.1", server.port, frame_len=125).start()
        try:
            first = stream.get(timeout=5.0)
            second = stream.get(timeout=5.0)
            assert first is not None and second is not None
            np.testing.assert_array_equal(first.i, np.arange(125))
            np.testing.assert_array_equal(second.i, np.arange(125, 250))
            np.testing.assert_array_equal(second.q, -np.arange(125, 250))
            assert stream.get(timeout=0.3) is None
            assert stream.dropped == 0
        finally:
            stream.stop()

    def test_130_samples_one_frame_five_pending(self):
        server = LoopbackServer([samples_blob(np.arange(130))],
                                keep_open=3.0).start()
        stream = FrameStream("127.0.0.1", server.port, frame_len=125).start()
        try:
            frame = stream.get(timeout=5.0)
            assert frame is not None
            np.testing.assert_array_equal(frame.i, np.arange(125))
            deadline = time.monotonic() + 3.0
            while stream.pending_samples != 5 and time.monotonic() < deadline:
                time.sleep(0.01)
            assert stream.pending_samples == 5
            assert stream.get(timeout=0.2) is None
        finally:
            stream.stop()

    def test_split_across_tcp_chunks(self):
        blob = samples_blob(np.arange(125))
        pieces = [blob[:333], blob[333:700], blob[700:]]
        server = LoopbackServer(pieces, delay=0.05).start()
        stream = FrameStream("127.0.0.1", server.port, frame_len=125).start()
        try:
            frame = stream.get(timeout=5.0)
            np.testing.assert_array_equal(frame.i, np.arange(125))
        finally:
            stream.stop()


class TestBackpressure:
    def test_drop_oldest_keeps_frames_contiguous(self):
        total = 40 * 25
        server = LoopbackServer([samples_blob(np.arange(total))],
                                keep_open=3.0).start()
        stream = FrameStream("127.0.0.1", server.port, frame_len=25,
                             queue_capacity=1).start()
        try:
            got = []
            deadline = time.monotonic() + 5.0
            while time.monotonic() < deadline and len(got) < 40:
                frame = stream.get(timeout=0.2)
                if frame is None:
                    if stream.dropped + len(got) >= 40:
                        break
                    continue
                time.sleep(0.05)  # slow consumer
                got.append(frame)
            assert stream.dropped > 0
            for frame in got:
                start = frame.i[0]
                np.testing.assert_array_equal(
                    frame.i, np.arange(start, start + 25)
                )
        finally:
            stream.stop()


class TestEndpointHandling:
    def test_unresolvable_host_raises_immediately(self):
        stream = FrameStream("host.invalid.modembed", 1, frame_len=4)
        with pytest.raises(StreamError, match="resolve"):
            stream.start()

    def test_bad_endpoint_string(self):
        with pytest.raises(StreamError, match="host:port"):
            stream_frames("no-port-here", 4)

    def test_stop_without_server_is_clean(self):
        # nothing listens on the port: reader keeps backing off until stop
        stream = FrameStream("127.0.0.1", 1, frame_len=4).start()
        time.sleep(0.1)
        stream.stop()
        assert stream.get(timeout=0.1) is None

    def test_reconnect_after_disconnect(self):
        first = LoopbackServer([samples_blob(np.arange(50))],
                               keep_open=0.0).start()
        stream = FrameStream("127.0.0.1", first.port, frame_len=50).start()
        try:
            assert stream.get(timeout=5.0) is not None
            # server closed; a new one on the same port serves a second frame
            time.sleep(0.2)
            second = LoopbackServer([samples_blob(np.arange(50))],
                                    keep_open=1.0)
            second.sock.close()
            second = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            second.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            second.bind(("127.0.0.1", first.port))
            second.listen(1)

            def serve_once():
                conn, _ = second.accept()
                conn.sendall(samples_blob(np.arange(50)))
                time.sleep(0.5)
                conn.close()
                second.close()

            threading.Thread(target=serve_once, daemon=True).start()
            frame = stream.get(timeout=10.0)
            assert frame is not None
            np.testing.assert_array_equal(frame.i, np.arange(50))
        finally:
            stream.stop()
