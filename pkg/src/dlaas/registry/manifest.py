"""Model manifest parsing, validation, and canonical serialization.

The accepted syntax is the indentation subset that real manifests use:
scalars, nested maps, lists of maps, quoted strings, and hard-wrapped
scalar values (a ``description:`` that spills across lines without
indentation, which full YAML parsers reject). Top-level keys are
case-insensitive and normalized to lowercase; unknown top-level keys are
rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from dlaas.errors import DlaasError

KEY_LINE_RE = re.compile(r"^(?P<indent>\s*)(?P<dash>- )?(?P<key>[A-Za-z_][A-Za-z0-9_]*)\s*:(?:\s(?P<value>.*))?$")
LIST_ITEM_RE = re.compile(r"^(?P<indent>\s*)- ")
MEMORY_RE = re.compile(r"^(?P<n>\d+)\s*(?P<unit>MiB|GiB)?$", re.IGNORECASE)

TOP_LEVEL_KEYS = {
    "name",
    "version",
    "description",
    "learners",
    "gpus",
    "memory",
    "memory_mib",
    "data_stores",
    "framework",
}

DEFAULT_LEARNERS = 1
DEFAULT_GPUS = 0
DEFAULT_MEMORY_MIB = 1024


class ManifestError(DlaasError):
    code = "MANIFEST_ERROR"


class ManifestSyntaxError(ManifestError):
    code = "SYNTAX_ERROR"

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ManifestSchemaError(ManifestError):
    code = "SCHEMA_ERROR"

    def __init__(self, field_name: str, message: str = ""):
        super().__init__(f"{field_name}: {message}" if message else field_name)
        self.field = field_name


class UnknownFrameworkError(ManifestError):
    code = "UNKNOWN_FRAMEWORK"


@dataclass(frozen=True)
class StoreCredentials:
    auth_url: str
    user_name: str
    password: str


@dataclass(frozen=True)
class DataStoreSpec:
    id: str
    type: str
    training_data_container: str
    training_results_container: str | None = None
    connection: StoreCredentials | None = None


@dataclass(frozen=True)
class FrameworkSpec:
    name: str
    version: str = ""
    job: str = ""
    arguments: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ModelManifest:
    name: str
    version: str
    description: str
    learners: int
    gpus: int
    memory_mib: int
    data_stores: tuple[DataStoreSpec, ...]
    framework: FrameworkSpec


# -- low-level text parsing ----------------------------------------------------


def _parse_lines(text: str) -> dict:
    """Parse the manifest text into nested dict/list/str structures."""
    lines = text.splitlines()
    pos = 0

    def peek_key(i: int):
        if i >= len(lines):
            return None
        return KEY_LINE_RE.match(lines[i])

    def skip_blank(i: int) -> int:
        while i < len(lines) and not lines[i].strip():
            i += 1
        return i

    def parse_scalar(raw: str, i: int) -> tuple[str, int]:
        """One scalar value plus hard-wrapped continuation lines."""
        value = raw.strip()
        while i < len(lines):
            line = lines[i]
            if not line.strip() or KEY_LINE_RE.match(line) or LIST_ITEM_RE.match(line):
                break
            value += " " + line.strip()
            i += 1
        if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
            value = value[1:-1]
        return value, i

    def parse_map(i: int, indent: int) -> tuple[dict, int]:
        out: dict = {}
        while True:
            i = skip_blank(i)
            match = peek_key(i)
            if match is None or len(match.group("indent")) != indent or match.group("dash"):
                return out, i
            key = match.group("key")
            raw_value = match.group("value")
            i += 1
            if raw_value is not None and raw_value.strip():
                out[key], i = parse_scalar(raw_value, i)
                continue
            # block value: list or nested map, decided by the next line
            j = skip_blank(i)
            nxt = lines[j] if j < len(lines) else ""
            dash = LIST_ITEM_RE.match(nxt)
            if dash and len(dash.group("indent")) >= indent:
                out[key], i = parse_list(j, len(dash.group("indent")))
            elif peek_key(j) and len(peek_key(j).group("indent")) > indent:
                out[key], i = parse_map(j, len(peek_key(j).group("indent")))
            else:
                out[key] = ""

    def parse_list(i: int, indent: int) -> tuple[list, int]:
        items = []
        inner = indent + 2
        while True:
            i = skip_blank(i)
            match = peek_key(i)
            if match is None or not match.group("dash") or len(match.group("indent")) != indent:
                return items, i
            # rewrite "- key: v" to "  key: v": a map entry at indent+2
            lines[i] = " " * inner + lines[i][inner:]
            item, i = parse_map(i, inner)
            items.append(item)

    # reject lines that are neither key lines, continuations, nor blanks up
    # front so errors point at the offending line
    open_scalar = False
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            open_scalar = False
            continue
        match = KEY_LINE_RE.match(line)
        if match:
            open_scalar = match.group("value") is not None and bool(match.group("value").strip())
            continue
        if LIST_ITEM_RE.match(line):
            raise ManifestSyntaxError(line_no, "list item without a key")
        if not open_scalar:
            raise ManifestSyntaxError(line_no, f"unparseable line {line.strip()!r}")

    doc, pos = parse_map(0, 0)
    pos = skip_blank(pos)
    if pos != len(lines):
        raise ManifestSyntaxError(pos + 1, f"unexpected content {lines[pos].strip()!r}")
    return doc


# -- schema ---------------------------------------------------------------------


def _int_field(doc: dict, key: str, default: int, minimum: int) -> int:
    if key not in doc:
        return default
    try:
        value = int(str(doc[key]).strip())
    except ValueError:
        raise ManifestSchemaError(key, f"not an integer: {doc[key]!r}") from None
    if value < minimum:
        raise ManifestSchemaError(key, f"must be >= {minimum}")
    return value


def _memory_field(doc: dict) -> int:
    raw = doc.get("memory", doc.get("memory_mib"))
    if raw is None:
        return DEFAULT_MEMORY_MIB
    match = MEMORY_RE.match(str(raw).strip())
    if not match:
        raise ManifestSchemaError("memory", f"unparseable amount {raw!r}")
    value = int(match.group("n"))
    if (match.group("unit") or "MiB").lower() == "gib":
        value *= 1024
    if value <= 0:
        raise ManifestSchemaError("memory", "must be positive")
    return value


def _data_store(item: dict, index: int) -> DataStoreSpec:
    where = f"data_stores[{index}]"
    if not isinstance(item, dict):
        raise ManifestSchemaError(where, "must be a map")
    for required in ("id", "type"):
        if not item.get(required):
            raise ManifestSchemaError(f"{where}.{required}", "required")
    training = item.get("training_data")
    if not isinstance(training, dict) or not training.get("container"):
        raise ManifestSchemaError(f"{where}.training_data.container", "required")
    results = item.get("training_results")
    results_container = None
    if isinstance(results, dict) and results.get("container"):
        results_container = results["container"]
    connection = None
    conn = item.get("connection")
    if isinstance(conn, dict):
        connection = StoreCredentials(
            auth_url=conn.get("auth_url", ""),
            user_name=conn.get("user_name", ""),
            password=conn.get("password", ""),
        )
    from dlaas.objectstore.store import credentials_required

    if credentials_required(item["type"]):
        if connection is None or not (
            connection.auth_url and connection.user_name and connection.password
        ):
            raise ManifestSchemaError(
                f"{where}.connection", "auth_url, user_name and password required"
            )
    return DataStoreSpec(
        id=item["id"],
        type=item["type"],
        training_data_container=training["container"],
        training_results_container=results_container,
        connection=connection,
    )


def parse_manifest(
    text: str,
    known_frameworks: set[str] | None = None,
    validate_framework: bool = True,
) -> ModelManifest:
    """Parse and validate manifest text.

    ``known_frameworks`` defaults to the live trainer plugin registry
    (including the caffe/torch/tensorflow aliases). Reads of already
    accepted manifests pass ``validate_framework=False``: the plugin set
    may have changed since the model was created, and an unresolvable
    trainer is then a runtime (JOB_FAILED) concern, not a parse error.
    """
    raw = _parse_lines(text)
    doc = {}
    for key, value in raw.items():
        lowered = key.lower()
        if lowered not in TOP_LEVEL_KEYS:
            raise ManifestSchemaError(key, "unknown top-level key")
        doc[lowered] = value

    framework = doc.get("framework")
    if not isinstance(framework, dict) or not framework.get("name"):
        raise ManifestSchemaError("framework.name", "required")
    if validate_framework:
        if known_frameworks is None:
            from dlaas.learner.plugins import known_framework_names

            known_frameworks = known_framework_names()
        if framework["name"] not in known_frameworks:
            raise UnknownFrameworkError(framework["name"])
    arguments = framework.get("arguments") or {}
    if not isinstance(arguments, dict):
        raise ManifestSchemaError("framework.arguments", "must be a map")
    fw = FrameworkSpec(
        name=framework["name"],
        version=str(framework.get("version", "")),
        job=str(framework.get("job", "")),
        arguments={str(k): str(v) for k, v in arguments.items()},
    )

    stores_raw = doc.get("data_stores")
    if not isinstance(stores_raw, list) or not stores_raw:
        raise ManifestSchemaError("data_stores", "at least one data store required")
    stores = tuple(_data_store(item, i) for i, item in enumerate(stores_raw))
    if not any(ds.training_data_container for ds in stores):
        raise ManifestSchemaError("data_stores", "no training_data container")

    return ModelManifest(
        name=str(doc.get("name", "")),
        version=str(doc.get("version", "")),
        description=str(doc.get("description", "")),
        learners=_int_field(doc, "learners", DEFAULT_LEARNERS, 1),
        gpus=_int_field(doc, "gpus", DEFAULT_GPUS, 0),
        memory_mib=_memory_field(doc),
        data_stores=stores,
        framework=fw,
    )


def serialize_manifest(manifest: ModelManifest) -> str:
    """Canonical single-line-scalar form; parse(serialize(m)) == m."""
    out = [
        f"name: {manifest.name}",
        f'version: "{manifest.version}"',
        f"description: {manifest.description}",
        f"learners: {manifest.learners}",
        f"gpus: {manifest.gpus}",
        f"memory: {manifest.memory_mib}MiB",
        "",
        "data_stores:",
    ]
    for ds in manifest.data_stores:
        out.append(f"- id: {ds.id}")
        out.append(f"  type: {ds.type}")
        out.append("  training_data:")
        out.append(f"    container: {ds.training_data_container}")
        if ds.training_results_container:
            out.append("  training_results:")
            out.append(f"    container: {ds.training_results_container}")
        if ds.connection:
            out.append("  connection:")
            out.append(f"    auth_url: {ds.connection.auth_url}")
            out.append(f"    user_name: {ds.connection.user_name}")
            out.append(f"    password: {ds.connection.password}")
    out.extend(
        [
            "",
            "framework:",
            f"  name: {manifest.framework.name}",
            f'  version: "{manifest.framework.version}"',
            f"  job: {manifest.framework.job}",
        ]
    )
    if manifest.framework.arguments:
        out.append("  arguments:")
        for key in sorted(manifest.framework.arguments):
            out.append(f"    {key}: {manifest.framework.arguments[key]}")
    return "\n".join(out) + "\n"
