"""Dataset binary format and training-data staging."""

import numpy as np
import pytest

from dlaas.objectstore import (
    DATASET_KEY,
    DatasetMalformedError,
    ObjectNotFoundError,
    dataset_info,
    decode_dataset,
    encode_dataset,
    linearly_separable,
    load_training_data,
    put_dataset,
    store_results,
)
from dlaas.registry import parse_manifest
from tests.conftest import STOCK_MANIFEST


def small_manifest(results: bool = True) -> str:
    lines = [
        "name: t",
        'version: "1"',
        "description: d",
        "learners: 1",
        "data_stores:",
        "- id: s",
        "  type: fs",
        "  training_data:",
        "    container: train-data",
    ]
    if results:
        lines += ["  training_results:", "    container: results"]
    lines += ["framework:", "  name: logreg", '  version: "1"', "  job: params.txt"]
    return "\n".join(lines) + "\n"


def test_codec_round_trip():
    rng = np.random.default_rng(0)
    features = rng.normal(size=(100, 3))
    labels = rng.integers(0, 2, size=100).astype(float)
    blob = encode_dataset(features, labels, label_kind=1)
    back_f, back_l, desc = decode_dataset(blob)
    assert np.array_equal(back_f, features)
    assert np.array_equal(back_l, labels)
    assert (desc.count, desc.dim, desc.label_kind) == (100, 3, 1)


def test_load_training_data(blob_store, tmp_path):
    features, labels = linearly_separable(1000, dim=2, seed=3)
    put_dataset(blob_store, "train-data", features, labels, label_kind=1)
    manifest = parse_manifest(small_manifest())
    local, desc = load_training_data(blob_store, manifest, tmp_path / "work")
    assert desc.count == 1000 and desc.dim == 2
    assert local.exists()
    assert dataset_info(blob_store, manifest).count == 1000


def test_missing_container(blob_store, tmp_path):
    manifest = parse_manifest(small_manifest())
    with pytest.raises(ObjectNotFoundError):
        load_training_data(blob_store, manifest, tmp_path)


def test_corrupt_headers_rejected(blob_store, tmp_path):
    rng = np.random.default_rng(11)
    features, labels = linearly_separable(50, seed=1)
    good = encode_dataset(features, labels, 1)
    manifest = parse_manifest(small_manifest())
    for _ in range(50):
        bad = bytearray(good[:19])
        bad[rng.integers(0, 19)] ^= 1 + rng.integers(0, 255)
        blob_store.put("train-data", DATASET_KEY, bytes(bad) + good[19:])
        try:
            load_training_data(blob_store, manifest, tmp_path)
        except DatasetMalformedError:
            continue
        # a header flip may hit a don't-care bit; re-decode must still agree
        back_f, _, _ = decode_dataset(bytes(bad) + good[19:])
        assert back_f.shape == features.shape


def test_auth_required_for_external_store_types(blob_store, tmp_path):
    # the stock manifest declares an external store type with credentials
    manifest = parse_manifest(STOCK_MANIFEST)
    assert manifest.data_stores[0].connection is not None


def test_store_results_and_optional_container(blob_store):
    manifest = parse_manifest(small_manifest(results=True))
    keys = store_results(blob_store, manifest, "training-abc", b"model", b"log")
    assert keys == ["training-abc/model.bin", "training-abc/training-log.txt"]
    assert blob_store.get("results", "training-abc/model.bin") == b"model"

    bare = parse_manifest(small_manifest(results=False))
    assert store_results(blob_store, bare, "training-x", b"m", b"l") == []


def test_store_results_logs_only(blob_store):
    manifest = parse_manifest(small_manifest(results=True))
    keys = store_results(blob_store, manifest, "training-f", None, b"failure log")
    assert keys == ["training-f/training-log.txt"]
