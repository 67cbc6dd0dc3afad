"""Line-oriented TCP access to the coordination store.

One UTF-8 command per line; responses are ``OK ...`` or ``ERR <code> ...``
lines; watch events are pushed asynchronously as ``EVENT ...`` lines.
Exact grammar in ``docs/coordstore-protocol.md``. The connection carries
at most one session; dropping the connection does NOT close the session
(it expires by TTL), which is exactly the watchdog-death liveness signal.
"""

from __future__ import annotations

import base64
import logging
import queue
import socket
import socketserver
import threading

from dlaas.coordstore.store import (
    DEFAULT_SESSION_TTL_MS,
    CoordError,
    CoordStore,
    NodeMode,
    Session,
    WatchEvent,
    Watcher,
    WatchKind,
)

logger = logging.getLogger(__name__)

_ERRORS_BY_CODE = {
    cls.code: cls for cls in CoordError.__subclasses__()
} | {CoordError.code: CoordError}


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"))


class _Handler(socketserver.StreamRequestHandler):
    server: "CoordTcpServer"

    def handle(self) -> None:
        store = self.server.store
        session: Session | None = None
        watchers: dict[int, Watcher] = {}
        next_watch = 1
        write_mu = threading.Lock()
        pumps: list[threading.Thread] = []
        stop = threading.Event()

        def send(line: str) -> None:
            with write_mu:
                try:
                    self.wfile.write((line + "\n").encode("utf-8"))
                    self.wfile.flush()
                except OSError:
                    stop.set()

        def pump_events(watch_id: int, watcher: Watcher) -> None:
            while not stop.is_set():
                event = watcher.poll(timeout=0.2)
                if event is not None:
                    send(
                        f"EVENT {watch_id} {event.kind.value} {event.path} {event.version}"
                    )

        try:
            for raw in self.rfile:
                try:
                    line = raw.decode("utf-8").strip()
                except UnicodeDecodeError:
                    send("ERR BAD_COMMAND not utf-8")
                    continue
                if not line:
                    continue
                parts = line.split(" ")
                cmd = parts[0].upper()
                try:
                    if cmd == "SESSION":
                        ttl = int(parts[1]) if len(parts) > 1 else DEFAULT_SESSION_TTL_MS
                        session = store.create_session(ttl)
                        send(f"OK {session.session_id}")
                    elif cmd == "HEARTBEAT":
                        store.heartbeat(self._require(session))
                        send("OK")
                    elif cmd == "CREATE":
                        mode = NodeMode(parts[2])
                        data = _unb64(parts[3]) if len(parts) > 3 else b""
                        version = store.create(
                            parts[1],
                            data,
                            mode,
                            session if mode is NodeMode.EPHEMERAL else None,
                        )
                        send(f"OK {version}")
                    elif cmd == "GET":
                        data, version = store.read(parts[1])
                        send(f"OK {version} {_b64(data)}")
                    elif cmd == "EXISTS":
                        send(f"OK {1 if store.exists(parts[1]) else 0}")
                    elif cmd == "SET":
                        expected = int(parts[2])
                        data = _unb64(parts[3]) if len(parts) > 3 else b""
                        if expected < 0:
                            version = store.write(parts[1], data)
                        else:
                            version = store.write_cas(parts[1], data, expected)
                        send(f"OK {version}")
                    elif cmd == "INCR":
                        pre, post = store.atomic_increment(parts[1], int(parts[2]))
                        send(f"OK {pre} {post}")
                    elif cmd == "DEL":
                        expected = int(parts[2]) if len(parts) > 2 else -1
                        store.delete(parts[1], expected)
                        send("OK")
                    elif cmd == "LS":
                        send("OK " + " ".join(store.list_children(parts[1])))
                    elif cmd == "WATCH":
                        kinds = (
                            [WatchKind(k) for k in parts[2].split(",")]
                            if len(parts) > 2
                            else None
                        )
                        watcher = store.watch(parts[1], kinds)
                        watch_id = next_watch
                        next_watch += 1
                        watchers[watch_id] = watcher
                        pump = threading.Thread(
                            target=pump_events,
                            args=(watch_id, watcher),
                            daemon=True,
                        )
                        pump.start()
                        pumps.append(pump)
                        send(f"OK {watch_id}")
                    elif cmd == "CLOSE":
                        if session is not None:
                            store.close_session(session)
                            session = None
                        send("OK")
                    else:
                        send(f"ERR BAD_COMMAND {cmd}")
                except CoordError as exc:
                    send(f"ERR {exc.code} {exc}")
                except (IndexError, ValueError) as exc:
                    send(f"ERR BAD_COMMAND {exc}")
        finally:
            stop.set()
            for watcher in watchers.values():
                self.server.store.unwatch(watcher)
            # session intentionally NOT closed: liveness is TTL-driven

    @staticmethod
    def _require(session: Session | None) -> Session:
        if session is None:
            raise CoordError("no session on this connection", code="NO_SESSION")
        return session


class CoordTcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, store: CoordStore, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.store = store
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "CoordTcpServer":
        self._thread = threading.Thread(
            target=self.serve_forever, name="coord-tcp", daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)


class TcpWatcher:
    """Client-side view of a server watch: same poll/drain surface."""

    def __init__(self):
        self._queue: "queue.Queue[WatchEvent]" = queue.Queue()

    def _offer(self, event: WatchEvent) -> None:
        self._queue.put(event)

    def poll(self, timeout: float | None = None) -> WatchEvent | None:
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def drain(self) -> list[WatchEvent]:
        events = []
        while True:
            try:
                events.append(self._queue.get_nowait())
            except queue.Empty:
                return events


class TcpCoordClient:
    """CoordClient over the line protocol; thread-safe request/response."""

    def __init__(self, address: str, ttl_ms: int = DEFAULT_SESSION_TTL_MS, timeout: float = 10.0):
        host, port = address.rsplit(":", 1)
        # timeout bounds the connect only; reads block until data or close
        self._sock = socket.create_connection((host, int(port)), timeout=timeout)
        self._sock.settimeout(None)
        self._rfile = self._sock.makefile("rb")
        self._mu = threading.Lock()
        self._responses: "queue.Queue[str]" = queue.Queue()
        self._watchers: dict[int, TcpWatcher] = {}
        self._closed = threading.Event()
        self._reader = threading.Thread(
            target=self._read_loop, name="coord-tcp-client", daemon=True
        )
        self._reader.start()
        self.session_id = int(self._request(f"SESSION {ttl_ms}")[0])

    def _read_loop(self) -> None:
        try:
            for raw in self._rfile:
                line = raw.decode("utf-8").rstrip("\n")
                if line.startswith("EVENT "):
                    _, watch_id, kind, path, version = line.split(" ", 4)
                    watcher = self._watchers.get(int(watch_id))
                    if watcher is not None:
                        watcher._offer(WatchEvent(path, WatchKind(kind), int(version)))
                else:
                    self._responses.put(line)
        except (OSError, ValueError):
            pass  # socket torn down
        self._closed.set()

    def _request(self, line: str) -> list[str]:
        with self._mu:
            if self._closed.is_set():
                raise CoordError("connection closed", code="CONNECTION_CLOSED")
            self._sock.sendall((line + "\n").encode("utf-8"))
            try:
                reply = self._responses.get(timeout=30.0)
            except queue.Empty:
                raise CoordError("request timed out", code="TIMEOUT") from None
        parts = reply.split(" ")
        if parts[0] == "OK":
            return parts[1:]
        code = parts[1] if len(parts) > 1 else "COORD_ERROR"
        message = " ".join(parts[2:])
        raise _ERRORS_BY_CODE.get(code, CoordError)(message, code=code)

    # CoordClient surface ----------------------------------------------------

    def heartbeat(self) -> None:
        self._request("HEARTBEAT")

    def create(self, path, data=b"", mode=NodeMode.PERSISTENT) -> int:
        return int(self._request(f"CREATE {path} {mode.value} {_b64(data)}")[0])

    def read(self, path):
        parts = self._request(f"GET {path}")
        data = _unb64(parts[1]) if len(parts) > 1 else b""
        return data, int(parts[0])

    def exists(self, path) -> bool:
        return self._request(f"EXISTS {path}")[0] == "1"

    def write(self, path, data) -> int:
        return int(self._request(f"SET {path} -1 {_b64(data)}")[0])

    def write_cas(self, path, data, expected_version) -> int:
        return int(self._request(f"SET {path} {expected_version} {_b64(data)}")[0])

    def atomic_increment(self, path, delta):
        parts = self._request(f"INCR {path} {delta}")
        return int(parts[0]), int(parts[1])

    def delete(self, path, expected_version=-1) -> None:
        self._request(f"DEL {path} {expected_version}")

    def list_children(self, path):
        return self._request(f"LS {path}")

    def watch(self, path, kinds=None) -> TcpWatcher:
        arg = "," .join(WatchKind(k).value for k in kinds) if kinds else ""
        parts = self._request(f"WATCH {path} {arg}".rstrip())
        watcher = TcpWatcher()
        self._watchers[int(parts[0])] = watcher
        return watcher

    def close(self) -> None:
        try:
            self._request("CLOSE")
        except CoordError:
            pass
        self._teardown()

    def abandon(self) -> None:
        """Drop the connection without closing the session (hard death)."""
        self._teardown()

    def _teardown(self) -> None:
        self._closed.set()
        try:
            self._sock.close()
        except OSError:
            pass
