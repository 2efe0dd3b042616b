"""Shared fixtures.

The thread-count env var must be set before numba is imported anywhere,
otherwise worker clamping in the parallel backend tests has nothing to
clamp against on small hosts.
"""

import os

os.environ.setdefault("NUMBA_NUM_THREADS", "4")

import numpy as np
import pytest

from spinosc import PhysicalParams, Topology, build_topology
from spinosc.topology import CouplingMatrix, InputWeights


@pytest.fixture(scope="session")
def params() -> PhysicalParams:
    return PhysicalParams()


@pytest.fixture(scope="session")
def small_topology() -> Topology:
    return build_topology(7, seed=11)


@pytest.fixture
def decoupled_topology() -> Topology:
    return Topology(
        coupling=CouplingMatrix.zeros(5),
        input_weights=InputWeights.zeros(5, 1),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
