"""JSON-lines wire protocol between the harness and external agents.

Every message is one UTF-8 JSON object per line with a ``type`` field:

- ``hello``      agent -> harness: {"type": "hello", "role":
  "driving-agent" | "segmentation-agent", "version": "1", "encoding":
  "png_base64" | "raw_rgb_base64" (optional, default png_base64)}
- ``hello_ack``  harness -> agent: {"type": "hello_ack", "version": "1"}
- ``frame``      harness -> agent: episode_id, frame_index, width, height,
  encoding, payload (base64 pixels), sim_time_s
- ``action``     agent -> harness: episode_id, frame_index, steering, throttle
- ``seg``        agent -> harness: episode_id, frame_index, width, height,
  classes (base64 row-major uint8 class ids)
- ``error``      either direction: message
- ``bye``        harness -> agent: end of session

Requests strictly alternate: one frame in flight, the reply must echo the
frame_index it answers. Transport is a TCP socket (``host:port``) or a
standard-stream pair for subprocess agents.
"""

from __future__ import annotations

import base64
import io
import json
import socket

import numpy as np
from PIL import Image as _PILImage

from .errors import HandshakeError, ProtocolError, AgentError
from . import simcore

PROTOCOL_VERSION = "1"
ROLES = ("driving-agent", "segmentation-agent")
ENCODINGS = ("png_base64", "raw_rgb_base64")
MAX_LINE_BYTES = 8 * 1024 * 1024


# ---------------------------------------------------------------------------
# payload codecs
# ---------------------------------------------------------------------------

def encode_image(img: np.ndarray, encoding: str) -> str:
    if encoding == "raw_rgb_base64":
        return base64.b64encode(np.ascontiguousarray(img).tobytes()).decode()
    if encoding == "png_base64":
        buf = io.BytesIO()
        _PILImage.fromarray(img, mode="RGB").save(buf, format="PNG")
        return base64.b64encode(buf.getvalue()).decode()
    raise ValueError(f"unknown encoding {encoding!r}")


def decode_image(payload: str, encoding: str, width: int, height: int) -> np.ndarray:
    raw = base64.b64decode(payload)
    if encoding == "raw_rgb_base64":
        if len(raw) != width * height * 3:
            raise ProtocolError("payload size does not match declared dimensions")
        return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3)
    if encoding == "png_base64":
        with _PILImage.open(io.BytesIO(raw)) as im:
            arr = np.asarray(im.convert("RGB"))
        if arr.shape[:2] != (height, width):
            raise ProtocolError("payload size does not match declared dimensions")
        return arr
    raise ProtocolError(f"unknown encoding {encoding!r}")


def encode_classes(seg: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(seg.astype(np.uint8)).tobytes()).decode()


def decode_classes(payload: str, width: int, height: int) -> np.ndarray:
    raw = base64.b64decode(payload)
    if len(raw) != width * height:
        raise ProtocolError("class payload size does not match declared dimensions")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width)


# ---------------------------------------------------------------------------
# framed line transport
# ---------------------------------------------------------------------------

class LineChannel:
    """Newline-delimited JSON over a pair of binary file objects."""

    def __init__(self, rfile, wfile):
        self._rfile = rfile
        self._wfile = wfile

    def send(self, msg: dict) -> None:
        self._wfile.write((json.dumps(msg) + "\n").encode())
        self._wfile.flush()

    def recv(self) -> dict:
        line = self._rfile.readline(MAX_LINE_BYTES)
        if not line:
            raise ProtocolError("peer closed the connection")
        try:
            msg = json.loads(line.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            snippet = line[:200].decode(errors="replace")
            raise ProtocolError(f"malformed JSON line: {snippet!r}") from None
        if not isinstance(msg, dict) or "type" not in msg:
            raise ProtocolError(f"message without a type field: {msg!r}")
        return msg

    def close(self):
        for f in (self._rfile, self._wfile):
            try:
                f.close()
            except OSError:
                pass


def _tcp_channel(sock: socket.socket) -> LineChannel:
    return LineChannel(sock.makefile("rb"), sock.makefile("wb"))


# ---------------------------------------------------------------------------
# harness side
# ---------------------------------------------------------------------------

class HarnessSession:
    """One agent connection, harness side. Strict request/reply alternation."""

    def __init__(self, channel: LineChannel, sock: socket.socket | None = None):
        self.channel = channel
        self._sock = sock
        self.role = None
        self.encoding = "png_base64"

    def handshake(self) -> None:
        try:
            msg = self.channel.recv()
        except ProtocolError as exc:
            raise HandshakeError(str(exc)) from None
        if msg.get("type") != "hello":
            self._fail(f"expected hello, got {msg.get('type')!r}", HandshakeError)
        if msg.get("version") != PROTOCOL_VERSION:
            self._fail(f"unsupported protocol version {msg.get('version')!r}",
                       HandshakeError)
        if msg.get("role") not in ROLES:
            self._fail(f"unknown role {msg.get('role')!r}", HandshakeError)
        encoding = msg.get("encoding", "png_base64")
        if encoding not in ENCODINGS:
            self._fail(f"unknown encoding {encoding!r}", HandshakeError)
        self.role = msg["role"]
        self.encoding = encoding
        self.channel.send({"type": "hello_ack", "version": PROTOCOL_VERSION})

    def _fail(self, message: str, exc_type=ProtocolError):
        try:
            self.channel.send({"type": "error", "message": message})
        except Exception:
            pass
        raise exc_type(message)

    def _set_deadline(self, deadline_ms):
        if self._sock is not None:
            self._sock.settimeout(None if deadline_ms is None else deadline_ms / 1000.0)

    def _request(self, img: np.ndarray, episode_id: str, frame_index: int,
                 sim_time_s: float, deadline_ms, expected_type: str) -> dict:
        h, w = img.shape[:2]
        self.channel.send({
            "type": "frame", "episode_id": episode_id, "frame_index": frame_index,
            "width": w, "height": h, "encoding": self.encoding,
            "payload": encode_image(img, self.encoding),
            "sim_time_s": sim_time_s,
        })
        self._set_deadline(deadline_ms)
        try:
            reply = self.channel.recv()
        except socket.timeout:
            raise TimeoutError(f"no reply within {deadline_ms} ms") from None
        finally:
            self._set_deadline(None)
        if reply["type"] == "error":
            raise ProtocolError(f"agent error: {reply.get('message')}")
        if reply["type"] != expected_type:
            self._fail(f"expected {expected_type}, got {reply['type']!r}")
        if reply.get("frame_index") != frame_index:
            self._fail(f"stale frame_index {reply.get('frame_index')} "
                       f"(expected {frame_index})")
        return reply

    def request_action(self, img, episode_id, frame_index, sim_time_s,
                       deadline_ms=None):
        if self.role != "driving-agent":
            raise ProtocolError(f"session role is {self.role}, not driving-agent")
        reply = self._request(img, episode_id, frame_index, sim_time_s,
                              deadline_ms, "action")
        return float(reply["steering"]), float(reply["throttle"])

    def request_segmentation(self, img, episode_id, frame_index,
                             sim_time_s=0.0, deadline_ms=None) -> np.ndarray:
        if self.role != "segmentation-agent":
            raise ProtocolError(f"session role is {self.role}, not segmentation-agent")
        reply = self._request(img, episode_id, frame_index, sim_time_s,
                              deadline_ms, "seg")
        h, w = img.shape[:2]
        if reply.get("width") != w or reply.get("height") != h:
            self._fail(f"seg dimensions {reply.get('width')}x{reply.get('height')} "
                       f"do not match frame {w}x{h}")
        return decode_classes(reply["classes"], w, h)

    def bye(self):
        try:
            self.channel.send({"type": "bye"})
        except Exception:
            pass
        self.channel.close()


class HarnessServer:
    """Listens on TCP and hands out one HarnessSession per connection."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._srv = socket.create_server((host, port))
        self.host, self.port = self._srv.getsockname()[:2]

    def accept(self, timeout_s: float | None = None) -> HarnessSession:
        self._srv.settimeout(timeout_s)
        sock, _ = self._srv.accept()
        session = HarnessSession(_tcp_channel(sock), sock)
        session.handshake()
        return session

    def close(self):
        self._srv.close()


def serve_stdio(rfile, wfile) -> HarnessSession:
    """Harness session over a standard-stream pair (subprocess agents)."""
    session = HarnessSession(LineChannel(rfile, wfile))
    session.handshake()
    return session


# ---------------------------------------------------------------------------
# agent side
# ---------------------------------------------------------------------------

class AgentClient:
    """Agent-side session: connect, handshake, then serve frames."""

    def __init__(self, channel: LineChannel, role: str,
                 encoding: str = "png_base64"):
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        self.channel = channel
        self.role = role
        self.encoding = encoding

    def handshake(self):
        self.channel.send({"type": "hello", "role": self.role,
                           "version": PROTOCOL_VERSION, "encoding": self.encoding})
        reply = self.channel.recv()
        if reply["type"] == "error":
            raise HandshakeError(reply.get("message", "handshake rejected"))
        if reply["type"] != "hello_ack" or reply.get("version") != PROTOCOL_VERSION:
            raise HandshakeError(f"bad handshake reply: {reply!r}")

    def serve(self, handler) -> int:
        """Answer frames until bye. ``handler(frame_msg, image) -> reply dict``
        (the session fills type-independent echo fields). Returns frames served."""
        served = 0
        while True:
            msg = self.channel.recv()
            if msg["type"] == "bye":
                return served
            if msg["type"] == "error":
                raise ProtocolError(f"harness error: {msg.get('message')}")
            if msg["type"] != "frame":
                raise ProtocolError(f"unexpected message type {msg['type']!r}")
            img = decode_image(msg["payload"], msg["encoding"],
                               msg["width"], msg["height"])
            reply = handler(msg, img)
            reply.setdefault("episode_id", msg["episode_id"])
            reply.setdefault("frame_index", msg["frame_index"])
            self.channel.send(reply)
            served += 1


def connect(endpoint: str, role: str, encoding: str = "png_base64",
            timeout_s: float = 10.0) -> AgentClient:
    """Connect to a harness at ``host:port`` and complete the handshake."""
    host, port = endpoint.rsplit(":", 1)
    sock = socket.create_connection((host, int(port)), timeout=timeout_s)
    sock.settimeout(None)
    client = AgentClient(_tcp_channel(sock), role, encoding)
    client.handshake()
    return client


# ---------------------------------------------------------------------------
# adapter: remote driving agent as a simulator agent
# ---------------------------------------------------------------------------

class RemoteDrivingAgent(simcore.BaseAgent):
    """Drives the built-in simulator through a HarnessSession.

    Deadline policy: on the first timeout the last action is repeated once;
    a second consecutive timeout aborts the episode.
    """

    needs_pixels = True
    stateless_frames = False

    def __init__(self, session: HarnessSession, episode_id: str,
                 deadline_ms: float | None = None, dt: float = simcore.DT_S):
        self.session = session
        self.episode_id = episode_id
        self.deadline_ms = deadline_ms
        self.dt = dt
        self.reset()

    def reset(self):
        self._index = 0
        self._last = simcore.Action(0.0, 0.0)
        self._timed_out = False

    def act(self, image, state, road) -> simcore.Action:
        try:
            steering, throttle = self.session.request_action(
                image, self.episode_id, self._index, self._index * self.dt,
                self.deadline_ms)
        except TimeoutError:
            if self._timed_out:
                raise AgentError("two consecutive agent timeouts") from None
            self._timed_out = True
            self._index += 1
            return self._last
        except ProtocolError as exc:
            raise AgentError(str(exc)) from None
        self._timed_out = False
        self._index += 1
        self._last = simcore.Action(steering, throttle)
        return self._last
