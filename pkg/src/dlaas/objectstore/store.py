"""Filesystem-backed object store behind the pluggable storage seam.

Containers are directories, objects are files (keys may contain slashes).
Writes are atomic (temp file + rename), etags are hex SHA-256 of the
content, and every raw IO operation is retried with exponential backoff
(base 100 ms, factor 2, 5 attempts) before an ``IoFailureError`` escapes.

Adding a storage backend means implementing :class:`BlobStore`
(put/get/list/delete) plus credential validation for its ``type`` string.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
import tempfile
import time
from abc import ABC, abstractmethod
from pathlib import Path

from dlaas.errors import DlaasError

logger = logging.getLogger(__name__)

CONTAINER_RE = re.compile(r"^[a-z0-9_-]{1,64}$")

RETRY_BASE_S = 0.1
RETRY_FACTOR = 2.0
RETRY_ATTEMPTS = 5

# store types that require full credentials in the manifest; everything the
# desk-scale deployment runs is served by the filesystem implementation
AUTH_FREE_TYPES = {"fs", "local"}


class StoreError(DlaasError):
    code = "STORE_ERROR"


class ObjectNotFoundError(StoreError):
    code = "NOT_FOUND"


class IoFailureError(StoreError):
    code = "IO_FAILURE"


class AuthFailedError(StoreError):
    code = "AUTH_FAILED"


class BadContainerError(StoreError):
    code = "BAD_CONTAINER"


def etag_of(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def credentials_required(store_type: str) -> bool:
    return store_type not in AUTH_FREE_TYPES


class BlobStore(ABC):
    """Pluggable storage interface."""

    @abstractmethod
    def put(self, container: str, key: str, blob: bytes) -> str: ...

    @abstractmethod
    def get(self, container: str, key: str) -> bytes: ...

    @abstractmethod
    def list(self, container: str, prefix: str = "") -> list[str]: ...

    @abstractmethod
    def delete(self, container: str, key: str) -> None: ...

    def exists(self, container: str, key: str) -> bool:
        try:
            self.get(container, key)
            return True
        except ObjectNotFoundError:
            return False


class FilesystemStore(BlobStore):
    """Local-disk store; safe for concurrent use from any thread/process."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- core ops ------------------------------------------------------------

    def put(self, container: str, key: str, blob: bytes) -> str:
        path = self._object_path(container, key)

        def op() -> str:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(blob)
                os.replace(tmp, path)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
            return etag_of(blob)

        return self._with_retries(op, f"put {container}/{key}")

    def get(self, container: str, key: str) -> bytes:
        path = self._object_path(container, key)

        def op() -> bytes:
            try:
                return path.read_bytes()
            except FileNotFoundError:
                raise ObjectNotFoundError(f"{container}/{key}") from None

        return self._with_retries(op, f"get {container}/{key}")

    def list(self, container: str, prefix: str = "") -> list[str]:
        base = self._container_path(container)

        def op() -> list[str]:
            if not base.is_dir():
                return []
            keys = []
            for path in base.rglob("*"):
                if path.is_file() and not path.name.startswith(".tmp-"):
                    key = path.relative_to(base).as_posix()
                    if key.startswith(prefix):
                        keys.append(key)
            return sorted(keys)

        return self._with_retries(op, f"list {container}")

    def delete(self, container: str, key: str) -> None:
        path = self._object_path(container, key)

        def op() -> None:
            try:
                path.unlink()
            except FileNotFoundError:
                raise ObjectNotFoundError(f"{container}/{key}") from None

        self._with_retries(op, f"delete {container}/{key}")

    def containers(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    # -- plumbing --------------------------------------------------------------

    def _with_retries(self, op, what: str):
        delay = RETRY_BASE_S
        for attempt in range(1, RETRY_ATTEMPTS + 1):
            try:
                return op()
            except (ObjectNotFoundError, BadContainerError):
                raise
            except OSError as exc:
                if attempt == RETRY_ATTEMPTS:
                    raise IoFailureError(f"{what}: {exc}") from exc
                logger.warning("transient IO failure on %s (attempt %d): %s", what, attempt, exc)
                time.sleep(delay)
                delay *= RETRY_FACTOR

    def _container_path(self, container: str) -> Path:
        if not CONTAINER_RE.match(container):
            raise BadContainerError(container)
        return self.root / container

    def _object_path(self, container: str, key: str) -> Path:
        base = self._container_path(container)
        if not key or key.startswith("/") or ".." in key.split("/"):
            raise StoreError(f"bad key {key!r}", code="BAD_KEY")
        return base / key
