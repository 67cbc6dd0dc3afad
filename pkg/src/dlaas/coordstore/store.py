"""Embedded coordination store: the Zookeeper role at desk scale.

Hierarchical nodes with versioned writes, ephemeral nodes tied to
heartbeat sessions, persistent watch streams, and ASCII-decimal atomic
counters. All mutations are serialized through one lock (single writer);
reads take consistent snapshots under the same lock. Watch delivery is
asynchronous on a per-watcher ordered queue.

Durability is snapshot-on-shutdown only (``dump_snapshot`` /
``load_snapshot``); there is no replication or quorum.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field
from enum import Enum

from dlaas.errors import DlaasError

ROOT = "/"
DEFAULT_SESSION_TTL_MS = 2000
SNAPSHOT_VERSION = 1


class CoordError(DlaasError):
    code = "COORD_ERROR"


class ParentMissingError(CoordError):
    code = "PARENT_MISSING"


class AlreadyExistsError(CoordError):
    code = "ALREADY_EXISTS"


class NotFoundError(CoordError):
    code = "NOT_FOUND"


class VersionConflictError(CoordError):
    code = "VERSION_CONFLICT"


class SessionExpiredError(CoordError):
    code = "SESSION_EXPIRED"


class MalformedCounterError(CoordError):
    code = "MALFORMED_COUNTER"


class HasChildrenError(CoordError):
    code = "HAS_CHILDREN"


class EphemeralParentError(CoordError):
    code = "NO_CHILDREN_FOR_EPHEMERAL"


class StoreClosedError(CoordError):
    code = "STORE_CLOSED"


class NodeMode(str, Enum):
    PERSISTENT = "PERSISTENT"
    EPHEMERAL = "EPHEMERAL"


class WatchKind(str, Enum):
    CREATED = "CREATED"
    DATA_CHANGED = "DATA_CHANGED"
    DELETED = "DELETED"
    CHILDREN_CHANGED = "CHILDREN_CHANGED"


ALL_KINDS = frozenset(WatchKind)


@dataclass(frozen=True)
class WatchEvent:
    path: str
    kind: WatchKind
    version: int


@dataclass
class _Node:
    data: bytes
    mode: NodeMode
    version: int = 0
    owner_session: int | None = None
    children: set[str] = field(default_factory=set)
    # monotone counter bumped on every child create/delete; orders
    # CHILDREN_CHANGED events for watchers
    cversion: int = 0


class Session:
    """A liveness lease. Ephemeral nodes die with it."""

    def __init__(self, session_id: int, ttl_ms: int, now: float):
        self.session_id = session_id
        self.ttl_ms = ttl_ms
        self.last_heartbeat = now
        self.owned_paths: set[str] = set()
        self.closed = False

    def expired(self, now: float) -> bool:
        return self.closed or (now - self.last_heartbeat) * 1000.0 > self.ttl_ms


class Watcher:
    """Consumer handle for a persistent watch stream.

    Events arrive on an internal ordered queue; ``poll`` blocks up to
    ``timeout`` seconds, ``drain`` grabs whatever is ready.
    """

    def __init__(self, path: str, kinds: frozenset[WatchKind]):
        self.path = path
        self.kinds = kinds
        self._queue: "queue.Queue[WatchEvent]" = queue.Queue()
        self._cancelled = False

    def _offer(self, event: WatchEvent) -> None:
        if not self._cancelled and event.kind in self.kinds:
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

    def cancel(self) -> None:
        self._cancelled = True


def _parent_of(path: str) -> str:
    if path == ROOT:
        return ROOT
    head, _, _ = path.rpartition("/")
    return head or ROOT


def _name_of(path: str) -> str:
    return path.rpartition("/")[2]


def _validate_path(path: str) -> None:
    if not path.startswith("/") or (path != ROOT and path.endswith("/")):
        raise CoordError(f"bad path {path!r}", code="BAD_PATH")
    if "//" in path:
        raise CoordError(f"bad path {path!r}", code="BAD_PATH")


class CoordStore:
    """In-memory hierarchical coordination store with one serialized writer."""

    def __init__(
        self,
        clock=time.monotonic,
        sweep_interval: float = 0.05,
        start_sweeper: bool = True,
    ):
        self._clock = clock
        self._mu = threading.RLock()
        self._nodes: dict[str, _Node] = {ROOT: _Node(b"", NodeMode.PERSISTENT)}
        self._sessions: dict[int, Session] = {}
        self._watchers: dict[str, list[Watcher]] = {}
        self._next_session = 1
        self._closed = False
        self._sweep_interval = sweep_interval
        self._sweeper: threading.Thread | None = None
        self._stop_sweep = threading.Event()
        if start_sweeper:
            self._sweeper = threading.Thread(
                target=self._sweep_loop, name="coord-sweeper", daemon=True
            )
            self._sweeper.start()

    # -- sessions ----------------------------------------------------------

    def create_session(self, ttl_ms: int = DEFAULT_SESSION_TTL_MS) -> Session:
        with self._mu:
            self._check_open()
            session = Session(self._next_session, ttl_ms, self._clock())
            self._next_session += 1
            self._sessions[session.session_id] = session
            return session

    def heartbeat(self, session: Session) -> None:
        with self._mu:
            self._check_open()
            if session.session_id not in self._sessions or session.expired(self._clock()):
                raise SessionExpiredError(f"session {session.session_id}")
            session.last_heartbeat = self._clock()

    def close_session(self, session: Session) -> None:
        """Clean shutdown of a session: ephemerals are reaped immediately."""
        with self._mu:
            if session.session_id in self._sessions:
                self._expire_locked(session)

    def session_alive(self, session: Session) -> bool:
        with self._mu:
            return (
                session.session_id in self._sessions
                and not session.expired(self._clock())
            )

    def expire_now(self, session: Session) -> None:
        """Force-expire a session (fault injection for tests)."""
        with self._mu:
            if session.session_id in self._sessions:
                self._expire_locked(session)

    def _sweep_loop(self) -> None:
        while not self._stop_sweep.wait(self._sweep_interval):
            with self._mu:
                if self._closed:
                    return
                now = self._clock()
                for session in [s for s in self._sessions.values() if s.expired(now)]:
                    self._expire_locked(session)

    def _expire_locked(self, session: Session) -> None:
        # One state-transition batch: every ephemeral owned by the session
        # goes away atomically w.r.t. readers, per-node DELETED events fire,
        # and each affected parent gets a single coalesced CHILDREN_CHANGED.
        session.closed = True
        self._sessions.pop(session.session_id, None)
        touched_parents: set[str] = set()
        for path in sorted(session.owned_paths, key=len, reverse=True):
            node = self._nodes.pop(path, None)
            if node is None:
                continue
            parent = self._nodes.get(_parent_of(path))
            if parent is not None:
                parent.children.discard(_name_of(path))
                parent.cversion += 1
                touched_parents.add(_parent_of(path))
            self._emit(path, WatchKind.DELETED, node.version + 1)
        session.owned_paths.clear()
        for parent_path in touched_parents:
            self._emit(
                parent_path,
                WatchKind.CHILDREN_CHANGED,
                self._nodes[parent_path].cversion,
            )

    # -- node operations ---------------------------------------------------

    def create(
        self,
        path: str,
        data: bytes,
        mode: NodeMode = NodeMode.PERSISTENT,
        session: Session | None = None,
    ) -> int:
        _validate_path(path)
        with self._mu:
            self._check_open()
            if path in self._nodes:
                raise AlreadyExistsError(path)
            parent_path = _parent_of(path)
            parent = self._nodes.get(parent_path)
            if parent is None:
                raise ParentMissingError(parent_path)
            if parent.mode is NodeMode.EPHEMERAL:
                raise EphemeralParentError(parent_path)
            owner = None
            if mode is NodeMode.EPHEMERAL:
                if session is None:
                    raise SessionExpiredError("ephemeral create requires a session")
                if session.session_id not in self._sessions or session.expired(
                    self._clock()
                ):
                    raise SessionExpiredError(f"session {session.session_id}")
                owner = session.session_id
                session.owned_paths.add(path)
            node = _Node(bytes(data), mode, owner_session=owner)
            self._nodes[path] = node
            parent.children.add(_name_of(path))
            parent.cversion += 1
            self._emit(path, WatchKind.CREATED, 0)
            self._emit(parent_path, WatchKind.CHILDREN_CHANGED, parent.cversion)
            return node.version

    def read(self, path: str) -> tuple[bytes, int]:
        with self._mu:
            node = self._node(path)
            return node.data, node.version

    def exists(self, path: str) -> bool:
        with self._mu:
            return path in self._nodes

    def write_cas(self, path: str, data: bytes, expected_version: int) -> int:
        with self._mu:
            self._check_open()
            node = self._node(path)
            if node.version != expected_version:
                raise VersionConflictError(
                    f"{path}: have {node.version}, expected {expected_version}"
                )
            node.data = bytes(data)
            node.version += 1
            self._emit(path, WatchKind.DATA_CHANGED, node.version)
            return node.version

    def write(self, path: str, data: bytes) -> int:
        """Unconditional write; still bumps the version by exactly 1."""
        with self._mu:
            self._check_open()
            node = self._node(path)
            node.data = bytes(data)
            node.version += 1
            self._emit(path, WatchKind.DATA_CHANGED, node.version)
            return node.version

    def atomic_increment(self, path: str, delta: int) -> tuple[int, int]:
        """Add ``delta`` to an ASCII-decimal counter node.

        Returns ``(pre, post)``: the pre-increment value is the claimed
        range start for cursor users.
        """
        with self._mu:
            self._check_open()
            node = self._node(path)
            try:
                pre = int(node.data.decode("ascii"))
                if pre < 0:
                    raise ValueError
            except (ValueError, UnicodeDecodeError):
                raise MalformedCounterError(
                    f"{path}: {node.data!r} is not a non-negative decimal"
                ) from None
            post = pre + delta
            node.data = str(post).encode("ascii")
            node.version += 1
            self._emit(path, WatchKind.DATA_CHANGED, node.version)
            return pre, post

    def delete(self, path: str, expected_version: int = -1) -> None:
        with self._mu:
            self._check_open()
            node = self._node(path)
            if node.children:
                raise HasChildrenError(path)
            if expected_version != -1 and node.version != expected_version:
                raise VersionConflictError(
                    f"{path}: have {node.version}, expected {expected_version}"
                )
            del self._nodes[path]
            if node.owner_session is not None:
                owner = self._sessions.get(node.owner_session)
                if owner is not None:
                    owner.owned_paths.discard(path)
            parent_path = _parent_of(path)
            parent = self._nodes.get(parent_path)
            if parent is not None:
                parent.children.discard(_name_of(path))
                parent.cversion += 1
            self._emit(path, WatchKind.DELETED, node.version + 1)
            if parent is not None:
                self._emit(parent_path, WatchKind.CHILDREN_CHANGED, parent.cversion)

    def delete_tree(self, path: str) -> None:
        """Recursively delete a subtree (garbage collection helper)."""
        with self._mu:
            self._check_open()
            if path not in self._nodes:
                raise NotFoundError(path)
            doomed = sorted(
                (p for p in self._nodes if p == path or p.startswith(path + "/")),
                key=len,
                reverse=True,
            )
            for p in doomed:
                self.delete(p)

    def list_children(self, path: str) -> list[str]:
        with self._mu:
            return sorted(self._node(path).children)

    # -- watches -----------------------------------------------------------

    def watch(self, path: str, kinds=None) -> Watcher:
        """Register a persistent watch on ``path``.

        The path may be absent (so CREATED can be awaited) but its parent
        must exist.
        """
        _validate_path(path)
        kinds = frozenset(WatchKind(k) for k in kinds) if kinds else ALL_KINDS
        with self._mu:
            self._check_open()
            if path not in self._nodes and _parent_of(path) not in self._nodes:
                raise ParentMissingError(_parent_of(path))
            watcher = Watcher(path, kinds)
            self._watchers.setdefault(path, []).append(watcher)
            return watcher

    def unwatch(self, watcher: Watcher) -> None:
        with self._mu:
            watcher.cancel()
            peers = self._watchers.get(watcher.path)
            if peers and watcher in peers:
                peers.remove(watcher)

    def _emit(self, path: str, kind: WatchKind, version: int) -> None:
        watchers = self._watchers.get(path)
        if not watchers:
            return
        event = WatchEvent(path, kind, version)
        for watcher in watchers:
            watcher._offer(event)

    # -- snapshot & lifecycle ------------------------------------------------

    def dump_snapshot(self) -> bytes:
        """Serialize persistent nodes (ephemerals die with their sessions)."""
        with self._mu:
            nodes = {
                path: {"data": node.data.hex(), "version": node.version}
                for path, node in self._nodes.items()
                if node.mode is NodeMode.PERSISTENT and path != ROOT
            }
            return json.dumps({"v": SNAPSHOT_VERSION, "nodes": nodes}).encode()

    def load_snapshot(self, blob: bytes) -> None:
        doc = json.loads(blob.decode())
        if doc.get("v") != SNAPSHOT_VERSION:
            raise CoordError("unknown snapshot version", code="BAD_SNAPSHOT")
        with self._mu:
            for path in sorted(doc["nodes"], key=lambda p: p.count("/")):
                entry = doc["nodes"][path]
                parent = self._nodes[_parent_of(path)]
                node = _Node(bytes.fromhex(entry["data"]), NodeMode.PERSISTENT)
                node.version = entry["version"]
                self._nodes[path] = node
                parent.children.add(_name_of(path))

    def close(self) -> None:
        self._stop_sweep.set()
        if self._sweeper is not None:
            self._sweeper.join(timeout=2.0)
        with self._mu:
            self._closed = True

    # -- internals -----------------------------------------------------------

    def _node(self, path: str) -> _Node:
        node = self._nodes.get(path)
        if node is None:
            raise NotFoundError(path)
        return node

    def _check_open(self) -> None:
        if self._closed:
            raise StoreClosedError()
