from dlaas.objectstore.dataset import (
    DATASET_KEY,
    DatasetDescriptor,
    DatasetMalformedError,
    dataset_info,
    decode_dataset,
    decode_header,
    encode_dataset,
    linear_target,
    linearly_separable,
    load_training_data,
    put_dataset,
    store_results,
)
from dlaas.objectstore.store import (
    AuthFailedError,
    BadContainerError,
    BlobStore,
    FilesystemStore,
    IoFailureError,
    ObjectNotFoundError,
    StoreError,
    credentials_required,
    etag_of,
)

__all__ = [
    "AuthFailedError",
    "BadContainerError",
    "BlobStore",
    "DATASET_KEY",
    "DatasetDescriptor",
    "DatasetMalformedError",
    "FilesystemStore",
    "IoFailureError",
    "ObjectNotFoundError",
    "StoreError",
    "credentials_required",
    "dataset_info",
    "decode_dataset",
    "decode_header",
    "encode_dataset",
    "etag_of",
    "linear_target",
    "linearly_separable",
    "load_training_data",
    "put_dataset",
    "store_results",
]
