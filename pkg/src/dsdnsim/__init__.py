"""Deterministic multi-controller SDN simulator with port-level flood
detection, prompt-based classification backends, and source-port mitigation."""

__version__ = "0.1.0"

from dsdnsim.topo import NodeId, Topology, build_testbed_topology, build_topology, validate

__all__ = [
    "NodeId",
    "Topology",
    "build_testbed_topology",
    "build_topology",
    "validate",
]
