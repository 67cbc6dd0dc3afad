from dlaas.registry.manifest import (
    DataStoreSpec,
    FrameworkSpec,
    ManifestError,
    ManifestSchemaError,
    ManifestSyntaxError,
    ModelManifest,
    StoreCredentials,
    UnknownFrameworkError,
    parse_manifest,
    serialize_manifest,
)
from dlaas.registry.models import (
    META_CONTAINER,
    ModelInUseError,
    ModelNotFoundError,
    ModelRecord,
    ModelRegistry,
    RegistryError,
)

__all__ = [
    "DataStoreSpec",
    "FrameworkSpec",
    "META_CONTAINER",
    "ManifestError",
    "ManifestSchemaError",
    "ManifestSyntaxError",
    "ModelInUseError",
    "ModelManifest",
    "ModelNotFoundError",
    "ModelRecord",
    "ModelRegistry",
    "RegistryError",
    "StoreCredentials",
    "UnknownFrameworkError",
    "parse_manifest",
    "serialize_manifest",
]
