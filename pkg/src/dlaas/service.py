"""Service entry point: boot the local stack and serve the REST API.

    python -m dlaas.service [--data-dir DIR] [--listen HOST:PORT]
                            [--topology FILE] [--run-mode thread|subprocess]

Environment fallbacks: DLAAS_DATA_DIR, DLAAS_LISTEN_ADDR, DLAAS_TOKEN.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import uvicorn

from dlaas.api.server import create_app
from dlaas.cluster.topology import default_topology, parse_topology
from dlaas.stack import LocalStack, StackConfig


def build_stack(args) -> LocalStack:
    nodes = default_topology()
    if args.topology:
        with open(args.topology, encoding="utf-8") as fh:
            nodes = parse_topology(fh.read())
    return LocalStack(
        StackConfig(
            data_dir=args.data_dir,
            nodes=nodes,
            token=args.token,
            run_mode=args.run_mode,
            restore_coord_snapshot=args.restore_snapshot,
        )
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dlaas-service", description=__doc__)
    parser.add_argument(
        "--data-dir", default=os.environ.get("DLAAS_DATA_DIR", "./dlaas-data")
    )
    parser.add_argument(
        "--listen", default=os.environ.get("DLAAS_LISTEN_ADDR", "127.0.0.1:8320")
    )
    parser.add_argument("--token", default=os.environ.get("DLAAS_TOKEN"))
    parser.add_argument("--topology", default=None, help="cluster topology file")
    parser.add_argument("--run-mode", default="thread", choices=["thread", "subprocess"])
    parser.add_argument("--restore-snapshot", action="store_true")
    parser.add_argument("--log-level", default="info")
    args = parser.parse_args(argv)

    logging.basicConfig(level=args.log_level.upper())
    stack = build_stack(args)
    stack.lcm.recover_jobs()
    app = create_app(stack, token=args.token)
    host, port = args.listen.rsplit(":", 1)
    try:
        uvicorn.run(app, host=host, port=int(port), log_level=args.log_level)
    finally:
        stack.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
