"""
linkcap: link capacity planning for shortest-path routed networks.
"""

__version__ = "0.1.0"

from .allocation import CapacityPlan, allocate
from .config import RunConfig, Settings
from .graph import Topology, complete_graph, generate_barabasi_albert
from .pmf import Pmf, TrafficConfig, TruncationPolicy, edge_load_pmf
from .routing import RoutingTable, build_routing_table
from .simulator import FrameTrace, SimConfig, run_simulation

__all__ = [
    "CapacityPlan",
    "FrameTrace",
    "Pmf",
    "RoutingTable",
    "RunConfig",
    "Settings",
    "SimConfig",
    "Topology",
    "TrafficConfig",
    "TruncationPolicy",
    "allocate",
    "build_routing_table",
    "complete_graph",
    "edge_load_pmf",
    "generate_barabasi_albert",
    "run_simulation",
]
