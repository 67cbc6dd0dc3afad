"""Binary dataset format and training-data staging.

``dataset.bin`` layout (little-endian throughout):

    magic "DLDS" | version u16 | D u64 | dim u32 | label_kind u8
    | D*dim f64 features | D f64 labels

label_kind: 0 = real-valued, 1 = binary {0,1}.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dlaas.objectstore.store import (
    AuthFailedError,
    BlobStore,
    StoreError,
    credentials_required,
)

MAGIC = b"DLDS"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHQIB")
DATASET_KEY = "dataset.bin"

LABEL_REAL = 0
LABEL_BINARY = 1


class DatasetMalformedError(StoreError):
    code = "DATASET_MALFORMED"


@dataclass(frozen=True)
class DatasetDescriptor:
    count: int
    dim: int
    label_kind: int


def encode_dataset(features: np.ndarray, labels: np.ndarray, label_kind: int) -> bytes:
    features = np.ascontiguousarray(features, dtype="<f8")
    labels = np.ascontiguousarray(labels, dtype="<f8")
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ValueError("features must be (D, dim), labels (D,)")
    count, dim = features.shape
    header = HEADER.pack(MAGIC, FORMAT_VERSION, count, dim, label_kind)
    return header + features.tobytes() + labels.tobytes()


def decode_header(blob: bytes) -> DatasetDescriptor:
    if len(blob) < HEADER.size:
        raise DatasetMalformedError("truncated header")
    magic, version, count, dim, label_kind = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DatasetMalformedError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise DatasetMalformedError(f"unsupported version {version}")
    if label_kind not in (LABEL_REAL, LABEL_BINARY):
        raise DatasetMalformedError(f"bad label kind {label_kind}")
    return DatasetDescriptor(count, dim, label_kind)


def decode_dataset(blob: bytes) -> tuple[np.ndarray, np.ndarray, DatasetDescriptor]:
    desc = decode_header(blob)
    expected = HEADER.size + 8 * desc.count * desc.dim + 8 * desc.count
    if len(blob) != expected:
        raise DatasetMalformedError(f"size {len(blob)} != expected {expected}")
    body = np.frombuffer(blob, dtype="<f8", offset=HEADER.size)
    features = body[: desc.count * desc.dim].reshape(desc.count, desc.dim)
    labels = body[desc.count * desc.dim :]
    return features.copy(), labels.copy(), desc


def _training_store(manifest) -> tuple[str, str]:
    """Pick the training-data container; enforce credential presence."""
    for ds in manifest.data_stores:
        if ds.training_data_container:
            if credentials_required(ds.type):
                conn = ds.connection
                if conn is None or not (conn.auth_url and conn.user_name and conn.password):
                    raise AuthFailedError(f"data store {ds.id}: incomplete credentials")
            return ds.training_data_container, ds.id
    raise DatasetMalformedError("manifest has no training_data store")


def dataset_info(store: BlobStore, manifest) -> DatasetDescriptor:
    """Read just the dataset header (model sizing without a full download)."""
    container, _ = _training_store(manifest)
    return decode_header(store.get(container, DATASET_KEY))


def load_training_data(
    store: BlobStore, manifest, dest: str | Path
) -> tuple[Path, DatasetDescriptor]:
    """Materialize the training dataset locally; returns (path, descriptor)."""
    container, _ = _training_store(manifest)
    blob = store.get(container, DATASET_KEY)
    desc = decode_header(blob)
    # full decode validates the payload length before we commit it to disk
    decode_dataset(blob)
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    local = dest / DATASET_KEY
    local.write_bytes(blob)
    return local, desc


def store_results(
    store: BlobStore, manifest, training_id: str, model_blob: bytes | None, log_blob: bytes
) -> list[str]:
    """Upload results to the user's optional results container.

    Silently a no-op when the manifest configures no results container.
    Logs are uploaded for failed jobs too; the model only when one exists.
    """
    results_container = None
    for ds in manifest.data_stores:
        if ds.training_results_container:
            results_container = ds.training_results_container
            break
    if results_container is None:
        return []
    keys = []
    if model_blob is not None:
        key = f"{training_id}/model.bin"
        store.put(results_container, key, model_blob)
        keys.append(key)
    key = f"{training_id}/training-log.txt"
    store.put(results_container, key, log_blob)
    keys.append(key)
    return keys


# -- synthetic datasets (fixtures and the quickstart demo) -------------------


def linearly_separable(
    count: int, dim: int = 2, seed: int = 7, margin: float = 0.2
) -> tuple[np.ndarray, np.ndarray]:
    """2-class points split by a random hyperplane with a hard margin."""
    rng = np.random.default_rng(seed)
    normal = rng.normal(size=dim)
    normal /= np.linalg.norm(normal)
    features = np.empty((count, dim))
    labels = np.empty(count)
    have = 0
    while have < count:
        batch = rng.uniform(-1.0, 1.0, size=(count, dim))
        side = batch @ normal
        keep = np.abs(side) >= margin
        take = batch[keep][: count - have]
        features[have : have + take.shape[0]] = take
        labels[have : have + take.shape[0]] = (take @ normal > 0).astype(float)
        have += take.shape[0]
    return features, labels


def linear_target(
    count: int, dim: int = 3, seed: int = 7, noise: float = 0.01
) -> tuple[np.ndarray, np.ndarray]:
    """Noisy linear regression data for the linreg plugin."""
    rng = np.random.default_rng(seed)
    weights = rng.normal(size=dim)
    bias = rng.normal()
    features = rng.uniform(-1.0, 1.0, size=(count, dim))
    labels = features @ weights + bias + noise * rng.normal(size=count)
    return features, labels


def put_dataset(
    store: BlobStore,
    container: str,
    features: np.ndarray,
    labels: np.ndarray,
    label_kind: int,
) -> DatasetDescriptor:
    blob = encode_dataset(features, labels, label_kind)
    store.put(container, DATASET_KEY, blob)
    return decode_header(blob)
