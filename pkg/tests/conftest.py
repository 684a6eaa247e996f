"""Shared fixtures: the six-microgrid reference system used across tests."""

import numpy as np
import pytest

from mgnet import Graph, WeightMatrix

# Integer weight matrix of the bundled six-grid scenario. Its pattern
# implies the 10-edge, connectivity-3 reference graph below.
REF_W = [
    [5, 4, 1, 1, 0, 0],
    [1, -3, -2, 1, 4, 0],
    [-3, -3, -4, 0, 0, -3],
    [-1, -2, 0, 5, -1, -3],
    [0, 4, 0, 5, -1, -4],
    [0, 0, -3, -1, 1, -3],
]

REF_EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (1, 4), (2, 5), (3, 4), (3, 5), (4, 5)]

REF_SUPPLIES = [24.17, 64.31, 89.19, 134.43, 49.65, 79.69]
REF_DEMANDS = [22.30, 44.72, 111.80, 89.44, 89.44, 22.36]


@pytest.fixture(scope="session")
def ref_graph() -> Graph:
    return Graph.from_edges(6, REF_EDGES)


@pytest.fixture(scope="session")
def ref_weights(ref_graph) -> WeightMatrix:
    return WeightMatrix(np.array(REF_W, dtype=float), ref_graph)
