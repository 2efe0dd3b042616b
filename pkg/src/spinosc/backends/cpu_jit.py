"""Compiled CPU backends (numba), bit-identical to the numpy reference.

The scalar loops here restate the reference formulas operation for
operation: same products, same association, and the same adjacent-pairs
reduction tree for the row sums (kernels are compiled without fastmath, so
nothing is reassociated or contracted into FMAs). Any edit to the formula
layout in `spinosc.model` must be mirrored here.

The parallel driver partitions rows into a fixed number of blocks chosen
independently of the active thread count. Each block owns a scratch row, so
scheduling affects only who computes a block, never the arithmetic in it;
results are identical for 1, 2, or any number of workers.
"""

from __future__ import annotations

import numba
import numpy as np
from numba import njit, prange

from ..params import derive

# Fixed row partition for the parallel kernel. Must not depend on the
# runtime thread count, or results would too.
_N_BLOCKS = 128


@njit(cache=True)
def _tree_reduce(buf, w):
    """Adjacent-pairs reduction of buf[:w], in place; returns the total.

    Level by level: pairs (0,1), (2,3), ... are summed left to right and an
    odd tail element is carried unchanged. Same tree as
    `model.tree_reduce_rows`.
    """
    while w > 1:
        half = w // 2
        for j in range(half):
            buf[j] = buf[2 * j] + buf[2 * j + 1]
        if w & 1:
            buf[half] = buf[w - 1]
            w = half + 1
        else:
            w = half
    return buf[0]


@njit(cache=True)
def _row_derivative(w_cp, w_in, m, u, out, prod_cp, prod_in, k,
                    c_prec, c_damp, h_appl, h_aniso, pref, lam,
                    a_cp, a_in, px, py, pz):
    """dm/dt for oscillator k, written into out[k, :]."""
    n = m.shape[0]
    n_in = w_in.shape[1]
    for j in range(n):
        prod_cp[j] = w_cp[k, j] * m[j, 0]
    cp = _tree_reduce(prod_cp, n)
    for j in range(n_in):
        prod_in[j] = w_in[k, j] * u[j]
    cin = _tree_reduce(prod_in, n_in)

    mx = m[k, 0]
    my = m[k, 1]
    mz = m[k, 2]

    mdotp = mx * px + my * py + mz * pz
    hs = pref / (1.0 + lam * mdotp)

    pxm_x = py * mz - pz * my
    pxm_y = pz * mx - px * mz
    pxm_z = px * my - py * mx

    bx = (a_cp * cp + a_in * cin) + hs * pxm_x
    by = hs * pxm_y
    bz = (h_appl + h_aniso * mz) + hs * pxm_z

    mxb_x = my * bz - mz * by
    mxb_y = mz * bx - mx * bz
    mxb_z = mx * by - my * bx

    mm_x = my * mxb_z - mz * mxb_y
    mm_y = mz * mxb_x - mx * mxb_z
    mm_z = mx * mxb_y - my * mxb_x

    out[k, 0] = -(c_prec * mxb_x) - c_damp * mm_x
    out[k, 1] = -(c_prec * mxb_y) - c_damp * mm_y
    out[k, 2] = -(c_prec * mxb_z) - c_damp * mm_z


@njit(cache=True)
def _derivative_serial(w_cp, w_in, m, u, out, prod_cp, prod_in,
                       c_prec, c_damp, h_appl, h_aniso, pref, lam,
                       a_cp, a_in, px, py, pz):
    n = m.shape[0]
    for k in range(n):
        _row_derivative(w_cp, w_in, m, u, out, prod_cp, prod_in, k,
                        c_prec, c_damp, h_appl, h_aniso, pref, lam,
                        a_cp, a_in, px, py, pz)


@njit(cache=True, parallel=True)
def _derivative_blocks(w_cp, w_in, m, u, out, prod_cp_blocks, prod_in_blocks,
                       c_prec, c_damp, h_appl, h_aniso, pref, lam,
                       a_cp, a_in, px, py, pz):
    n = m.shape[0]
    nb = prod_cp_blocks.shape[0]
    chunk = (n + nb - 1) // nb
    for b in prange(nb):
        lo = b * chunk
        hi = min(lo + chunk, n)
        for k in range(lo, hi):
            _row_derivative(w_cp, w_in, m, u, out,
                            prod_cp_blocks[b], prod_in_blocks[b], k,
                            c_prec, c_damp, h_appl, h_aniso, pref, lam,
                            a_cp, a_in, px, py, pz)


def _scalar_pack(params):
    c = derive(params)
    return (c.c_prec, c.c_damp, params.h_appl, c.h_aniso,
            c.h_s_prefactor, params.lambda_stt, params.a_cp, params.a_in,
            c.px, c.py, c.pz)


class FusedBackend:
    """Single compiled loop over oscillators, no threading."""

    backend_id = "fused"
    kind = "compiled sequential"

    def __init__(self, topology, params):
        self._w_cp = topology.coupling.entries
        self._w_in = topology.input_weights.entries
        self._scalars = _scalar_pack(params)
        self._prod_cp = np.empty(topology.n)
        self._prod_in = np.empty(topology.n_in)

    def derivative(self, m: np.ndarray, u: np.ndarray, out: np.ndarray) -> np.ndarray:
        _derivative_serial(self._w_cp, self._w_in, m, u, out,
                           self._prod_cp, self._prod_in, *self._scalars)
        return out


class ParallelBackend:
    """Compiled kernel with rows distributed over numba threads.

    `workers` clamps to the process thread cap (NUMBA_NUM_THREADS). The
    thread count is set around each call and restored afterwards, so
    instances with different worker counts can coexist.
    """

    backend_id = "parallel"
    kind = "compiled multicore"

    def __init__(self, topology, params, workers: int | None = None):
        self._w_cp = topology.coupling.entries
        self._w_in = topology.input_weights.entries
        self._scalars = _scalar_pack(params)
        self._prod_cp_blocks = np.empty((_N_BLOCKS, topology.n))
        self._prod_in_blocks = np.empty((_N_BLOCKS, topology.n_in))
        if workers is None:
            self._workers = None
        else:
            self._workers = max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS))

    @property
    def workers(self) -> int | None:
        return self._workers

    def derivative(self, m: np.ndarray, u: np.ndarray, out: np.ndarray) -> np.ndarray:
        if self._workers is None:
            _derivative_blocks(self._w_cp, self._w_in, m, u, out,
                               self._prod_cp_blocks, self._prod_in_blocks,
                               *self._scalars)
            return out
        prev = numba.get_num_threads()
        numba.set_num_threads(self._workers)
        try:
            _derivative_blocks(self._w_cp, self._w_in, m, u, out,
                               self._prod_cp_blocks, self._prod_in_blocks,
                               *self._scalars)
        finally:
            numba.set_num_threads(prev)
        return out
