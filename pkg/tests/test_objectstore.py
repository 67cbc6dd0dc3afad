"""Object store contract: round trips, listing, retry discipline."""

import threading

import pytest

from dlaas.objectstore import (
    FilesystemStore,
    IoFailureError,
    ObjectNotFoundError,
    etag_of,
)
from dlaas.objectstore import store as store_mod


def test_put_get_round_trip(blob_store):
    blob = b"\x00\x01binary\xff" * 100
    etag = blob_store.put("c1", "k", blob)
    assert blob_store.get("c1", "k") == blob
    assert etag == etag_of(blob)


def test_etag_deterministic(blob_store):
    assert blob_store.put("c1", "a", b"same") == blob_store.put("c1", "b", b"same")


def test_list_with_prefix(blob_store):
    blob_store.put("c", "ckpt/1", b"1")
    blob_store.put("c", "ckpt/2", b"2")
    blob_store.put("c", "data/x", b"x")
    assert blob_store.list("c", "ckpt/") == ["ckpt/1", "ckpt/2"]
    assert blob_store.list("c") == ["ckpt/1", "ckpt/2", "data/x"]


def test_get_missing(blob_store):
    with pytest.raises(ObjectNotFoundError):
        blob_store.get("c", "missing")


def test_delete(blob_store):
    blob_store.put("c", "k", b"v")
    blob_store.delete("c", "k")
    with pytest.raises(ObjectNotFoundError):
        blob_store.get("c", "k")
    with pytest.raises(ObjectNotFoundError):
        blob_store.delete("c", "k")


def test_put_auto_creates_container(blob_store):
    blob_store.put("fresh", "k", b"v")
    assert "fresh" in blob_store.containers()


def test_concurrent_writers_not_torn(blob_store):
    """Readers must see either the old or the new blob, never a mix."""
    blob_a = b"A" * 4096
    blob_b = b"B" * 4096
    blob_store.put("c", "k", blob_a)
    stop = threading.Event()
    seen_bad = []

    def reader():
        while not stop.is_set():
            blob = blob_store.get("c", "k")
            if blob not in (blob_a, blob_b):
                seen_bad.append(blob)

    t = threading.Thread(target=reader)
    t.start()
    for _ in range(200):
        blob_store.put("c", "k", blob_b)
        blob_store.put("c", "k", blob_a)
    stop.set()
    t.join()
    assert not seen_bad


class FlakyStore(FilesystemStore):
    """Fails the first N raw attempts of each op with OSError."""

    def __init__(self, root, failures: int):
        super().__init__(root)
        self.failures = failures
        self.attempts = 0

    def _with_retries(self, op, what):
        def flaky():
            self.attempts += 1
            if self.attempts <= self.failures:
                raise OSError("injected")
            return op()

        return super()._with_retries(flaky, what)


def test_transient_failures_retried(tmp_path, monkeypatch):
    monkeypatch.setattr(store_mod, "RETRY_BASE_S", 0.001)
    flaky = FlakyStore(tmp_path, failures=2)
    flaky.put("c", "k", b"v")
    assert flaky.attempts == 3  # 2 failures + 1 success


def test_retries_exhausted_surface_io_failure(tmp_path, monkeypatch):
    monkeypatch.setattr(store_mod, "RETRY_BASE_S", 0.001)
    flaky = FlakyStore(tmp_path, failures=99)
    with pytest.raises(IoFailureError):
        flaky.put("c", "k", b"v")
    assert flaky.attempts == store_mod.RETRY_ATTEMPTS
