"""
Shared topologies and routing tables for the linkcap test suite.
"""

import pytest

from linkcap.graph import Topology, complete_graph, generate_barabasi_albert
from linkcap.routing import build_routing_table

BA_SEED = 20240531


@pytest.fixture
def path4() -> Topology:
    """0-1-2-3 경로 그래프"""
    return Topology.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def cycle4() -> Topology:
    """길이 4 사이클 (대각 쌍은 최단경로 2개)"""
    return Topology.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])


@pytest.fixture
def star5() -> Topology:
    return Topology.from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def k4() -> Topology:
    return complete_graph(4)


@pytest.fixture(scope="session")
def ba30() -> Topology:
    return generate_barabasi_albert(30, 4, seed=BA_SEED)


@pytest.fixture(scope="session")
def ba30_table(ba30):
    return build_routing_table(ba30)


@pytest.fixture
def path4_table(path4):
    return build_routing_table(path4)


@pytest.fixture
def cycle4_table(cycle4):
    return build_routing_table(cycle4)
