"""Equation of motion for an array of coupled macrospin oscillators.

State is an (n, 3) float64 array of unit moment vectors m_k. The local field
per oscillator is

    b_k = [h_appl + h_aniso m_k^z] e_z
          + [a_cp (W_cp m^x)_k + a_in (W_in u)_k] e_x
          + h_s(m_k) (p x m_k),

with h_s(m) = h_s_prefactor / (1 + lambda m.p), and the moment evolves as

    dm_k/dt = -c_prec m_k x b_k - c_damp m_k x (m_k x b_k).

Every CPU execution path in this package evaluates these expressions in one
agreed operation order, including a fixed adjacent-pairs reduction tree for
the matrix-vector row sums, so differently vectorized implementations return
bit-identical derivatives. Keep the formula layout here in sync with the
compiled kernels in `backends/cpu_jit.py`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .params import DerivedConstants, PhysicalParams, derive


def tree_reduce_rows(products: np.ndarray, halvebuf: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Sum each row of `products` with the pinned adjacent-pairs tree.

    Pairs (0,1), (2,3), ... are added left to right; an odd tail element is
    carried to the next level unchanged. The same tree, expressed as scalar
    loops, is used by the compiled backends, which makes the row sums
    bit-identical across implementations. `halvebuf` needs at least
    ceil(w / 2) columns; both buffers are scratch.
    """
    w = products.shape[1]
    cur, nxt = products, halvebuf
    while w > 1:
        half = w // 2
        np.add(cur[:, 0 : 2 * half : 2], cur[:, 1 : 2 * half : 2], out=nxt[:, :half])
        if w & 1:
            nxt[:, half] = cur[:, w - 1]
            w = half + 1
        else:
            w = half
        cur, nxt = nxt, cur
    np.copyto(out, cur[:, 0])
    return out


def tree_matvec(matrix: np.ndarray, vec: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """(matrix @ vec) with the pinned row-sum tree; allocating convenience."""
    n, w = matrix.shape
    products = np.empty((n, w))
    halvebuf = np.empty((n, (w + 1) // 2)) if w > 1 else np.empty((n, 1))
    if out is None:
        out = np.empty(n)
    np.multiply(matrix, vec[None, :], out=products)
    return tree_reduce_rows(products, halvebuf, out)


class Workspace:
    """Preallocated scratch for `llg_derivative`.

    One instance per (n, n_in) shape; nothing is allocated per call, so the
    stepping loop stays allocation-free. The coupling product buffer is the
    dominant footprint: n*n doubles plus n*ceil(n/2) for the halving passes.
    """

    def __init__(self, n: int, n_in: int):
        self.n = n
        self.n_in = n_in
        self.cp_products = np.empty((n, n))
        self.cp_halve = np.empty((n, (n + 1) // 2)) if n > 1 else np.empty((n, 1))
        self.in_products = np.empty((n, n_in))
        self.in_halve = np.empty((n, (n_in + 1) // 2)) if n_in > 1 else np.empty((n, 1))
        names = (
            "cp", "cin", "mdotp", "hs",
            "pxm_x", "pxm_y", "pxm_z",
            "bx", "by", "bz",
            "mxb_x", "mxb_y", "mxb_z",
            "mm_x", "mm_y", "mm_z",
            "t1", "t2",
        )
        for name in names:
            setattr(self, name, np.empty(n))


@dataclass(frozen=True)
class InputSeries:
    """Piecewise-constant drive samples, held for `steps_per_sample` steps each.

    Sample s covers step indices [s * steps_per_sample, (s+1) * steps_per_sample);
    all four stages of a step see the step's sample (zero-order hold). A series
    with a single sample is constant and valid for any number of steps.
    """

    samples: np.ndarray          # (n_samples, n_in) float64
    steps_per_sample: int = 1

    def __post_init__(self) -> None:
        samples = np.ascontiguousarray(np.asarray(self.samples, dtype=np.float64))
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise ParameterError("input samples must be a (n_samples, n_in) array")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("input samples must be finite")
        if self.steps_per_sample < 1:
            raise ParameterError("steps_per_sample must be >= 1")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def zeros(cls, n_in: int) -> "InputSeries":
        """Constant zero drive (the benchmark protocol's u = 0)."""
        return cls(samples=np.zeros((1, n_in)), steps_per_sample=1)

    @property
    def n_in(self) -> int:
        return self.samples.shape[1]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def check_steps(self, steps: int) -> None:
        """Reject sample counts inconsistent with the hold rule.

        A multi-sample series must supply exactly the samples the run
        consumes: ceil(steps / steps_per_sample) == n_samples.
        """
        if self.n_samples == 1:
            return
        lo = (self.n_samples - 1) * self.steps_per_sample
        hi = self.n_samples * self.steps_per_sample
        if not (lo < steps <= hi):
            raise ParameterError(
                f"input series with {self.n_samples} samples held for "
                f"{self.steps_per_sample} steps covers ({lo}, {hi}] steps, "
                f"got {steps}"
            )

    def sample_for_step(self, step: int) -> np.ndarray:
        """Row view of the sample active at `step` (no copy)."""
        if self.n_samples == 1:
            return self.samples[0]
        return self.samples[step // self.steps_per_sample]


def effective_field(m: np.ndarray, params: PhysicalParams,
                    consts: DerivedConstants | None = None) -> np.ndarray:
    """Applied plus net uniaxial field, along e_z only: (0, 0, h_appl + h_aniso m_z)."""
    if consts is None:
        consts = derive(params)
    m = np.asarray(m, dtype=np.float64)
    out = np.zeros_like(m)
    out[:, 2] = params.h_appl + consts.h_aniso * m[:, 2]
    return out


def spin_torque_strength(m: np.ndarray, params: PhysicalParams,
                         consts: DerivedConstants | None = None) -> np.ndarray:
    """Angular-dependent spin-torque field magnitude h_s(m), in Oe."""
    if consts is None:
        consts = derive(params)
    m = np.asarray(m, dtype=np.float64)
    mx, my, mz = m[:, 0], m[:, 1], m[:, 2]
    mdotp = mx * consts.px + my * consts.py + mz * consts.pz
    return consts.h_s_prefactor / (1.0 + params.lambda_stt * mdotp)


def coupling_field_x(coupling, m_x: np.ndarray, a_cp: float) -> np.ndarray:
    """x-axis coupling field a_cp (W_cp m^x), one value per oscillator."""
    entries = getattr(coupling, "entries", coupling)
    return a_cp * tree_matvec(np.asarray(entries, dtype=np.float64),
                              np.asarray(m_x, dtype=np.float64))


def input_field_x(weights, u: np.ndarray, a_in: float) -> np.ndarray:
    """x-axis drive field a_in (W_in u), one value per oscillator."""
    entries = getattr(weights, "entries", weights)
    return a_in * tree_matvec(np.asarray(entries, dtype=np.float64),
                              np.asarray(u, dtype=np.float64))


def total_b(m: np.ndarray, u: np.ndarray, topology, params: PhysicalParams,
            consts: DerivedConstants | None = None) -> np.ndarray:
    """Full local field b_k entering the equation of motion, shape (n, 3)."""
    if consts is None:
        consts = derive(params)
    m = np.asarray(m, dtype=np.float64)
    mx, my, mz = m[:, 0], m[:, 1], m[:, 2]
    hs = spin_torque_strength(m, params, consts)
    cpx = coupling_field_x(topology.coupling, mx, params.a_cp)
    inx = input_field_x(topology.input_weights, np.asarray(u, dtype=np.float64), params.a_in)
    px, py, pz = consts.px, consts.py, consts.pz
    b = np.empty_like(m)
    b[:, 0] = (cpx + inx) + hs * (py * mz - pz * my)
    b[:, 1] = hs * (pz * mx - px * mz)
    b[:, 2] = (params.h_appl + consts.h_aniso * mz) + hs * (px * my - py * mx)
    return b


def llg_derivative(m: np.ndarray, u: np.ndarray, topology, params: PhysicalParams,
                   consts: DerivedConstants | None = None,
                   out: np.ndarray | None = None,
                   workspace: Workspace | None = None) -> np.ndarray:
    """dm/dt for the whole array; writes only to `out`.

    Pure in everything but `out` and the scratch `workspace`; concurrent
    calls are safe on disjoint out/workspace pairs. The operation order is
    the package-wide pinned order; edit together with the compiled kernels.
    """
    if consts is None:
        consts = derive(params)
    m = np.asarray(m, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    n = m.shape[0]
    w_cp = topology.coupling.entries
    w_in = topology.input_weights.entries
    if workspace is None:
        workspace = Workspace(n, w_in.shape[1])
    if out is None:
        out = np.empty_like(m)
    ws = workspace

    mx, my, mz = m[:, 0], m[:, 1], m[:, 2]
    px, py, pz = consts.px, consts.py, consts.pz
    lam = params.lambda_stt

    # row sums with the pinned tree
    np.multiply(w_cp, mx[None, :], out=ws.cp_products)
    tree_reduce_rows(ws.cp_products, ws.cp_halve, ws.cp)
    np.multiply(w_in, u[None, :], out=ws.in_products)
    tree_reduce_rows(ws.in_products, ws.in_halve, ws.cin)

    # hs = pref / (1 + lam * (m . p))
    np.multiply(mx, px, out=ws.mdotp)
    np.multiply(my, py, out=ws.t1)
    np.add(ws.mdotp, ws.t1, out=ws.mdotp)
    np.multiply(mz, pz, out=ws.t1)
    np.add(ws.mdotp, ws.t1, out=ws.mdotp)
    np.multiply(ws.mdotp, lam, out=ws.t1)
    np.add(1.0, ws.t1, out=ws.t1)
    np.divide(consts.h_s_prefactor, ws.t1, out=ws.hs)

    # p x m
    np.multiply(py, mz, out=ws.pxm_x)
    np.multiply(pz, my, out=ws.t1)
    np.subtract(ws.pxm_x, ws.t1, out=ws.pxm_x)
    np.multiply(pz, mx, out=ws.pxm_y)
    np.multiply(px, mz, out=ws.t1)
    np.subtract(ws.pxm_y, ws.t1, out=ws.pxm_y)
    np.multiply(px, my, out=ws.pxm_z)
    np.multiply(py, mx, out=ws.t1)
    np.subtract(ws.pxm_z, ws.t1, out=ws.pxm_z)

    # b = (a_cp cp + a_in cin) e_x + (h_appl + h_aniso mz) e_z + hs (p x m)
    np.multiply(ws.cp, params.a_cp, out=ws.bx)
    np.multiply(ws.cin, params.a_in, out=ws.t1)
    np.add(ws.bx, ws.t1, out=ws.bx)
    np.multiply(ws.hs, ws.pxm_x, out=ws.t1)
    np.add(ws.bx, ws.t1, out=ws.bx)
    np.multiply(ws.hs, ws.pxm_y, out=ws.by)
    np.multiply(mz, consts.h_aniso, out=ws.bz)
    np.add(params.h_appl, ws.bz, out=ws.bz)
    np.multiply(ws.hs, ws.pxm_z, out=ws.t1)
    np.add(ws.bz, ws.t1, out=ws.bz)

    # m x b
    np.multiply(my, ws.bz, out=ws.mxb_x)
    np.multiply(mz, ws.by, out=ws.t1)
    np.subtract(ws.mxb_x, ws.t1, out=ws.mxb_x)
    np.multiply(mz, ws.bx, out=ws.mxb_y)
    np.multiply(mx, ws.bz, out=ws.t1)
    np.subtract(ws.mxb_y, ws.t1, out=ws.mxb_y)
    np.multiply(mx, ws.by, out=ws.mxb_z)
    np.multiply(my, ws.bx, out=ws.t1)
    np.subtract(ws.mxb_z, ws.t1, out=ws.mxb_z)

    # m x (m x b)
    np.multiply(my, ws.mxb_z, out=ws.mm_x)
    np.multiply(mz, ws.mxb_y, out=ws.t1)
    np.subtract(ws.mm_x, ws.t1, out=ws.mm_x)
    np.multiply(mz, ws.mxb_x, out=ws.mm_y)
    np.multiply(mx, ws.mxb_z, out=ws.t1)
    np.subtract(ws.mm_y, ws.t1, out=ws.mm_y)
    np.multiply(mx, ws.mxb_y, out=ws.mm_z)
    np.multiply(my, ws.mxb_x, out=ws.t1)
    np.subtract(ws.mm_z, ws.t1, out=ws.mm_z)

    # dm/dt = -(c_prec m x b) - c_damp m x (m x b)
    for col, (mxb, mm) in enumerate(
        ((ws.mxb_x, ws.mm_x), (ws.mxb_y, ws.mm_y), (ws.mxb_z, ws.mm_z))
    ):
        np.multiply(mxb, consts.c_prec, out=ws.t1)
        np.negative(ws.t1, out=ws.t1)
        np.multiply(mm, consts.c_damp, out=ws.t2)
        np.subtract(ws.t1, ws.t2, out=out[:, col])
    return out
