"""Deterministic result archives: uncompressed tar, fixed metadata.

Entry order is fixed (model.bin then training-log.txt) and all headers
are zeroed (mtime, uid, gid), so the same job always archives to the same
bytes.
"""

from __future__ import annotations

import io
import tarfile

from dlaas.objectstore.store import BlobStore, ObjectNotFoundError

ENTRY_ORDER = ("model.bin", "training-log.txt")


def build_result_archive(store: BlobStore, container: str, training_id: str) -> bytes | None:
    """Tar of whatever results exist for the job; None when there are none."""
    entries = []
    for name in ENTRY_ORDER:
        try:
            entries.append((name, store.get(container, f"{training_id}/{name}")))
        except ObjectNotFoundError:
            continue
    if not entries:
        return None
    buffer = io.BytesIO()
    with tarfile.open(fileobj=buffer, mode="w", format=tarfile.USTAR_FORMAT) as tar:
        for name, blob in entries:
            info = tarfile.TarInfo(name)
            info.size = len(blob)
            info.mtime = 0
            info.uid = info.gid = 0
            info.uname = info.gname = ""
            info.mode = 0o644
            tar.addfile(info, io.BytesIO(blob))
    return buffer.getvalue()
