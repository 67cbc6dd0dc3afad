"""Uniform client facade over the coordination store.

Learners, watchdogs and the LCM talk to this interface so the same code
runs in-process (``LocalCoordClient``) and from a separate OS process
(``TcpCoordClient`` in :mod:`dlaas.coordstore.tcp`).

A client owns exactly one session; ephemeral nodes created through it die
when the session does.
"""

from __future__ import annotations

from typing import Protocol

from dlaas.coordstore.store import (
    DEFAULT_SESSION_TTL_MS,
    CoordStore,
    NodeMode,
    Session,
    Watcher,
)


class CoordClient(Protocol):
    def heartbeat(self) -> None: ...

    def create(self, path: str, data: bytes = b"", mode: NodeMode = NodeMode.PERSISTENT) -> int: ...

    def read(self, path: str) -> tuple[bytes, int]: ...

    def exists(self, path: str) -> bool: ...

    def write(self, path: str, data: bytes) -> int: ...

    def write_cas(self, path: str, data: bytes, expected_version: int) -> int: ...

    def atomic_increment(self, path: str, delta: int) -> tuple[int, int]: ...

    def delete(self, path: str, expected_version: int = -1) -> None: ...

    def list_children(self, path: str) -> list[str]: ...

    def watch(self, path: str, kinds=None) -> Watcher: ...

    def close(self) -> None: ...

    def abandon(self) -> None: ...


class LocalCoordClient:
    """Direct in-process client; one store session per client."""

    def __init__(self, store: CoordStore, ttl_ms: int = DEFAULT_SESSION_TTL_MS):
        self._store = store
        self._session: Session = store.create_session(ttl_ms)

    @property
    def session(self) -> Session:
        return self._session

    def heartbeat(self) -> None:
        self._store.heartbeat(self._session)

    def create(self, path, data=b"", mode=NodeMode.PERSISTENT) -> int:
        return self._store.create(path, data, mode, self._session)

    def read(self, path):
        return self._store.read(path)

    def exists(self, path) -> bool:
        return self._store.exists(path)

    def write(self, path, data) -> int:
        return self._store.write(path, data)

    def write_cas(self, path, data, expected_version) -> int:
        return self._store.write_cas(path, data, expected_version)

    def atomic_increment(self, path, delta):
        return self._store.atomic_increment(path, delta)

    def delete(self, path, expected_version=-1) -> None:
        self._store.delete(path, expected_version)

    def list_children(self, path):
        return self._store.list_children(path)

    def watch(self, path, kinds=None) -> Watcher:
        return self._store.watch(path, kinds)

    def close(self) -> None:
        """Clean shutdown: the session closes and ephemerals are reaped."""
        self._store.close_session(self._session)

    def abandon(self) -> None:
        """Stop using the session without closing it (simulated hard death);
        ephemerals linger until the TTL expires."""
