"""Cooperative task control shared by the cluster runner and task bodies.

A task body periodically calls ``ctx.check()``; the cluster flips the kill
or crash flag and the body unwinds with the matching exception. ``crash``
models abrupt death (no graceful cleanup: the watchdog abandons its
session so the ephemeral liveness node expires by TTL), ``kill`` models an
orderly decommission.
"""

from __future__ import annotations

import threading


class TaskKilled(Exception):
    """Orderly stop requested; clean up and exit."""


class TaskCrashed(Exception):
    """Simulated hard fault; exit without cleanup."""


class TaskControl:
    def __init__(self):
        self._kill = threading.Event()
        self._crash = threading.Event()

    def request_kill(self) -> None:
        self._kill.set()

    def request_crash(self) -> None:
        self._crash.set()

    @property
    def kill_requested(self) -> bool:
        return self._kill.is_set()

    @property
    def crash_requested(self) -> bool:
        return self._crash.is_set()

    def check(self) -> None:
        if self._crash.is_set():
            raise TaskCrashed()
        if self._kill.is_set():
            raise TaskKilled()

    def wait_stop(self, timeout: float) -> bool:
        """Block up to timeout; True when kill or crash was requested."""
        deadline_hit = self._kill.wait(timeout=timeout)
        return deadline_hit or self._crash.is_set()
