"""Plain numpy backend: the correctness baseline everything else is held to."""

from __future__ import annotations

import numpy as np

from ..model import Workspace, llg_derivative
from ..params import derive


class ReferenceBackend:
    """Vectorized evaluation of the equation of motion, no compilation.

    Always available. Holds one preallocated workspace, so a single instance
    is not safe for concurrent calls; make one instance per thread instead.
    """

    backend_id = "reference"
    kind = "vectorized numpy baseline"

    def __init__(self, topology, params):
        self._topology = topology
        self._params = params
        self._consts = derive(params)
        self._workspace = Workspace(topology.n, topology.n_in)

    def derivative(self, m: np.ndarray, u: np.ndarray, out: np.ndarray) -> np.ndarray:
        """Write dm/dt for state `m` under drive `u` into `out`."""
        return llg_derivative(m, u, self._topology, self._params,
                              consts=self._consts, out=out,
                              workspace=self._workspace)
