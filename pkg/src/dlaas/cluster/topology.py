"""Cluster topology config: a simple key-value text format.

    # comment
    node0.cpus = 4
    node0.gpus = 2
    node0.memory_mib = 16000
    node1.cpus = 4
    ...

Unknown fields are rejected; every node needs cpus, gpus and memory_mib.
"""

from __future__ import annotations

from dlaas.cluster.sim import ClusterError, NodeSpec

FIELDS = {"cpus", "gpus", "memory_mib"}


def parse_topology(text: str) -> list[NodeSpec]:
    raw: dict[str, dict[str, int]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line or "." not in line.split("=", 1)[0]:
            raise ClusterError(f"topology line {line_no}: expected node.field = value")
        key, value = (part.strip() for part in line.split("=", 1))
        node_id, field = key.rsplit(".", 1)
        if field not in FIELDS:
            raise ClusterError(f"topology line {line_no}: unknown field {field!r}")
        try:
            raw.setdefault(node_id, {})[field] = int(value)
        except ValueError:
            raise ClusterError(f"topology line {line_no}: {value!r} is not an integer") from None
    nodes = []
    for node_id in sorted(raw):
        fields = raw[node_id]
        missing = FIELDS - set(fields)
        if missing:
            raise ClusterError(f"node {node_id}: missing {sorted(missing)}")
        nodes.append(NodeSpec(node_id, fields["cpus"], fields["gpus"], fields["memory_mib"]))
    if not nodes:
        raise ClusterError("topology defines no nodes")
    return nodes


def default_topology(
    node_count: int = 2, cpus: int = 8, gpus: int = 2, memory_mib: int = 16000
) -> list[NodeSpec]:
    return [
        NodeSpec(f"node{i}", cpus, gpus, memory_mib) for i in range(node_count)
    ]


def format_topology(nodes: list[NodeSpec]) -> str:
    lines = []
    for node in nodes:
        lines.append(f"{node.node_id}.cpus = {node.cpus}")
        lines.append(f"{node.node_id}.gpus = {node.gpus}")
        lines.append(f"{node.node_id}.memory_mib = {node.memory_mib}")
    return "\n".join(lines) + "\n"
