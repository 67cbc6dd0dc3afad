from dlaas.coordstore.client import CoordClient, LocalCoordClient
from dlaas.coordstore.store import (
    AlreadyExistsError,
    CoordError,
    CoordStore,
    HasChildrenError,
    MalformedCounterError,
    NodeMode,
    NotFoundError,
    ParentMissingError,
    Session,
    SessionExpiredError,
    StoreClosedError,
    VersionConflictError,
    Watcher,
    WatchEvent,
    WatchKind,
)
from dlaas.coordstore.tcp import CoordTcpServer, TcpCoordClient

__all__ = [
    "AlreadyExistsError",
    "CoordClient",
    "CoordError",
    "CoordStore",
    "CoordTcpServer",
    "HasChildrenError",
    "LocalCoordClient",
    "MalformedCounterError",
    "NodeMode",
    "NotFoundError",
    "ParentMissingError",
    "Session",
    "SessionExpiredError",
    "StoreClosedError",
    "TcpCoordClient",
    "VersionConflictError",
    "Watcher",
    "WatchEvent",
    "WatchKind",
]
