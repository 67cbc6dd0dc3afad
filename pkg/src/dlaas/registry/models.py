"""Model deployer service: manifest intake, model metadata CRUD.

Records and definition blobs persist in the object store (container
``_dlaas_meta``) so the registry itself stays stateless across restarts.
"""

from __future__ import annotations

import json
import secrets
import time
from dataclasses import dataclass
from typing import Callable

from dlaas.errors import DlaasError
from dlaas.objectstore.store import BlobStore, ObjectNotFoundError
from dlaas.registry.manifest import ModelManifest, parse_manifest, serialize_manifest

META_CONTAINER = "_dlaas_meta"


class RegistryError(DlaasError):
    code = "REGISTRY_ERROR"


class ModelNotFoundError(RegistryError):
    code = "NOT_FOUND"


class ModelInUseError(RegistryError):
    code = "MODEL_IN_USE"


@dataclass(frozen=True)
class ModelRecord:
    model_id: str
    manifest: ModelManifest
    definition_blob: bytes
    created_at: float


def _meta_key(model_id: str) -> str:
    return f"models/{model_id}.json"


def _blob_key(model_id: str) -> str:
    return f"models/{model_id}.bin"


class ModelRegistry:
    def __init__(self, store: BlobStore):
        self._store = store
        # the LCM installs a probe so delete can refuse models with live jobs
        self._in_use_probe: Callable[[str], bool] = lambda model_id: False

    def set_in_use_probe(self, probe: Callable[[str], bool]) -> None:
        self._in_use_probe = probe

    def create_model(self, manifest_text: str, definition_blob: bytes) -> str:
        manifest = parse_manifest(manifest_text)
        while True:
            model_id = "model-" + secrets.token_hex(6)
            if not self._store.exists(META_CONTAINER, _meta_key(model_id)):
                break
        record = {
            "model_id": model_id,
            "manifest": serialize_manifest(manifest),
            "created_at": time.time(),
        }
        self._store.put(META_CONTAINER, _blob_key(model_id), definition_blob)
        self._store.put(META_CONTAINER, _meta_key(model_id), json.dumps(record).encode())
        return model_id

    def get_model(self, model_id: str) -> ModelRecord:
        try:
            raw = self._store.get(META_CONTAINER, _meta_key(model_id))
            blob = self._store.get(META_CONTAINER, _blob_key(model_id))
        except ObjectNotFoundError:
            raise ModelNotFoundError(model_id) from None
        doc = json.loads(raw.decode())
        return ModelRecord(
            model_id=doc["model_id"],
            manifest=parse_manifest(doc["manifest"], validate_framework=False),
            definition_blob=blob,
            created_at=doc["created_at"],
        )

    def list_models(self) -> list[str]:
        keys = self._store.list(META_CONTAINER, "models/")
        return sorted(
            key.removeprefix("models/").removesuffix(".json")
            for key in keys
            if key.endswith(".json")
        )

    def update_model(self, model_id: str, manifest_text: str) -> None:
        record = self.get_model(model_id)
        manifest = parse_manifest(manifest_text)
        doc = {
            "model_id": model_id,
            "manifest": serialize_manifest(manifest),
            "created_at": record.created_at,
        }
        self._store.put(META_CONTAINER, _meta_key(model_id), json.dumps(doc).encode())

    def delete_model(self, model_id: str) -> None:
        self.get_model(model_id)
        if self._in_use_probe(model_id):
            raise ModelInUseError(model_id)
        self._store.delete(META_CONTAINER, _meta_key(model_id))
        self._store.delete(META_CONTAINER, _blob_key(model_id))
