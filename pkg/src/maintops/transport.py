"""Inter-region messaging: wire format plus in-process and socket channels.

A message is a length-prefixed text record:

    <byte count>\\n
    v1 <round> <phase> <sender> <receiver> <kind>\\n
    <key>=<value>\\n
    ...

Values render as decimal with 17 significant digits, so a trace is
byte-reproducible.  The four record kinds are closed: regions exchange
boundary phase-angle estimates, scalar demand violations, one upper
bound scalar, and convergence flags; nothing else ever crosses a region
boundary.
"""

from __future__ import annotations

import socket
import struct
import threading
import time
from dataclasses import dataclass, field

THETA_SHARE = "THETA_SHARE"
VIOLATION_SHARE = "VIOLATION_SHARE"
UBOUND_SHARE = "UBOUND_SHARE"
CONV_FLAG = "CONV_FLAG"
KINDS = frozenset({THETA_SHARE, VIOLATION_SHARE, UBOUND_SHARE, CONV_FLAG})

WIRE_VERSION = "v1"


class TransportError(RuntimeError):
    pass


class DeadlockError(TransportError):
    """A peer failed to deliver an expected message in time."""


class TransportClosed(TransportError):
    pass


@dataclass(frozen=True)
class RoundMessage:
    sender: int
    receiver: int
    round: int
    phase: str
    kind: str
    values: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TransportError(f"unknown message kind {self.kind!r}")

    def value_map(self) -> dict[str, float]:
        return dict(self.values)


def fmt(v: float) -> str:
    return f"{v:.17g}"


def encode(msg: RoundMessage) -> bytes:
    lines = [f"{WIRE_VERSION} {msg.round} {msg.phase} {msg.sender} {msg.receiver} {msg.kind}"]
    lines += [f"{k}={fmt(v)}" for k, v in msg.values]
    body = ("\n".join(lines) + "\n").encode()
    return f"{len(body)}\n".encode() + body


def decode(body: bytes) -> RoundMessage:
    lines = body.decode().splitlines()
    if not lines:
        raise TransportError("empty message body")
    head = lines[0].split()
    if len(head) != 6 or head[0] != WIRE_VERSION:
        raise TransportError(f"bad message header {lines[0]!r}")
    values = []
    for ln in lines[1:]:
        if not ln:
            continue
        k, _, v = ln.partition("=")
        values.append((k, float(v)))
    return RoundMessage(sender=int(head[3]), receiver=int(head[4]),
                        round=int(head[1]), phase=head[2], kind=head[5],
                        values=tuple(values))


def read_frames(data: bytes):
    """Split a byte stream of length-prefixed records into message bodies."""
    out = []
    pos = 0
    while pos < len(data):
        nl = data.index(b"\n", pos)
        size = int(data[pos:nl])
        start = nl + 1
        out.append(data[start:start + size])
        pos = start + size
    return out


@dataclass
class Trace:
    """Byte-accurate record of everything sent, for audits and tests."""

    records: list[tuple[int, int, bytes]] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, sender: int, receiver: int, frame: bytes) -> None:
        with self._lock:
            self.records.append((sender, receiver, frame))

    def messages(self) -> list[RoundMessage]:
        out = []
        with self._lock:
            records = list(self.records)
        for _, _, frame in records:
            for body in read_frames(frame):
                out.append(decode(body))
        return out

    def total_bytes(self) -> int:
        with self._lock:
            return sum(len(f) for _, _, f in self.records)


class BaseTransport:
    """Shared mailbox logic: demultiplex by (sender, kind, round, phase)."""

    def __init__(self, regions, timeout: float = 300.0, trace: Trace | None = None):
        self.regions = tuple(regions)
        self.timeout = timeout
        self.trace = trace
        self._cond = threading.Condition()
        self._boxes: dict[int, dict[tuple, RoundMessage]] = {r: {} for r in self.regions}
        self._closed = False

    def _key(self, msg: RoundMessage) -> tuple:
        return (msg.sender, msg.kind, msg.phase, msg.round)

    def _deliver(self, msg: RoundMessage) -> None:
        with self._cond:
            if msg.receiver not in self._boxes:
                raise TransportError(f"unknown receiver {msg.receiver}")
            self._boxes[msg.receiver][self._key(msg)] = msg
            self._cond.notify_all()

    def recv(self, receiver: int, sender: int, kind: str, phase: str,
             round_: int) -> RoundMessage:
        key = (sender, kind, phase, round_)
        deadline = time.monotonic() + self.timeout
        with self._cond:
            while True:
                if key in self._boxes[receiver]:
                    return self._boxes[receiver].pop(key)
                if self._closed:
                    raise TransportClosed("transport closed while waiting")
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise DeadlockError(
                        f"timed out waiting for {kind} from region {sender} to "
                        f"region {receiver} (phase {phase}, round {round_})")
                self._cond.wait(timeout=min(remaining, 0.5))

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def send(self, msg: RoundMessage) -> None:
        raise NotImplementedError


class InprocTransport(BaseTransport):
    """Direct delivery between agents in one process."""

    def send(self, msg: RoundMessage) -> None:
        frame = encode(msg)
        if self.trace is not None:
            self.trace.add(msg.sender, msg.receiver, frame)
        # decode the encoded frame so both transports exercise the wire format
        self._deliver(decode(read_frames(frame)[0]))


class SocketTransport(BaseTransport):
    """Localhost TCP transport: one connection per ordered region pair."""

    def __init__(self, regions, timeout: float = 300.0, trace: Trace | None = None):
        super().__init__(regions, timeout=timeout, trace=trace)
        self._servers: dict[int, socket.socket] = {}
        self._ports: dict[int, int] = {}
        self._conns: dict[tuple[int, int], socket.socket] = {}
        self._threads: list[threading.Thread] = []
        for r in self.regions:
            srv = socket.create_server(("127.0.0.1", 0))
            srv.settimeout(timeout)
            self._servers[r] = srv
            self._ports[r] = srv.getsockname()[1]
        for r in self.regions:
            th = threading.Thread(target=self._accept_loop, args=(r,), daemon=True)
            th.start()
            self._threads.append(th)
        for s in self.regions:
            for r in self.regions:
                if s == r:
                    continue
                conn = socket.create_connection(("127.0.0.1", self._ports[r]),
                                                timeout=timeout)
                conn.sendall(struct.pack("!i", s))
                self._conns[(s, r)] = conn

    def _accept_loop(self, region: int) -> None:
        srv = self._servers[region]
        accepted = 0
        want = len(self.regions) - 1
        try:
            while accepted < want:
                conn, _ = srv.accept()
                accepted += 1
                th = threading.Thread(target=self._reader, args=(conn,), daemon=True)
                th.start()
                self._threads.append(th)
        except OSError:
            return

    def _reader(self, conn: socket.socket) -> None:
        try:
            raw = self._read_exact(conn, 4)
            if raw is None:
                return
            struct.unpack("!i", raw)  # sender id, informational
            buf = b""
            while True:
                chunk = conn.recv(65536)
                if not chunk:
                    return
                buf += chunk
                while True:
                    nl = buf.find(b"\n")
                    if nl < 0:
                        break
                    size = int(buf[:nl])
                    if len(buf) < nl + 1 + size:
                        break
                    body = buf[nl + 1: nl + 1 + size]
                    buf = buf[nl + 1 + size:]
                    self._deliver(decode(body))
        except (OSError, ValueError):
            return

    @staticmethod
    def _read_exact(conn: socket.socket, n: int) -> bytes | None:
        buf = b""
        while len(buf) < n:
            chunk = conn.recv(n - len(buf))
            if not chunk:
                return None
            buf += chunk
        return buf

    def send(self, msg: RoundMessage) -> None:
        frame = encode(msg)
        if self.trace is not None:
            self.trace.add(msg.sender, msg.receiver, frame)
        conn = self._conns[(msg.sender, msg.receiver)]
        conn.sendall(frame)

    def close(self) -> None:
        super().close()
        for conn in self._conns.values():
            try:
                conn.close()
            except OSError:
                pass
        for srv in self._servers.values():
            try:
                srv.close()
            except OSError:
                pass
