"""Desk-scale deep-learning-as-a-service stack.

A single-box platform that accepts model manifests, orchestrates
data-parallel training jobs over a simulated heterogeneous cluster with a
parameter server, survives injected failures via checkpoint/restart, and
streams live training metrics to a REST/websocket control plane.
"""

__version__ = "0.1.0"
