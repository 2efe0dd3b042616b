"""Fixed-step RK4 time integration with strided state recording.

The stepper never renormalizes the moments: unit-norm drift is left visible
as an accuracy diagnostic, and `Trajectory.max_norm_drift` reports the worst
deviation seen on the recorded grid. All combination arithmetic runs in one
pinned operation order shared by every backend, so two runs differing only
in backend are bit-comparable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import IntegrationDivergedError, ParameterError, TrajectoryMismatchError
from .model import InputSeries
from .params import PhysicalParams
from .topology import PHI0_DEFAULT, Topology, build_topology, initial_state


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one integration run."""

    n: int
    steps: int
    dt: float
    seed: int = 0
    phi0: float = PHI0_DEFAULT
    backend: str = "reference"
    record_stride: int = 1
    workers: int | None = None
    input_series: InputSeries | None = None
    gpu_device: int | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.steps < 1:
            raise ParameterError("steps must be >= 1")
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ParameterError("dt must be positive and finite")
        if self.record_stride < 1:
            raise ParameterError("record_stride must be >= 1")
        if self.workers is not None and self.workers < 1:
            raise ParameterError("workers must be >= 1 when given")

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of one run.

    `times[i]` is the physical time of `states[i]` (shape (n, 3)); the grid
    is every `record_stride`-th step plus the initial and final states.
    `elapsed_seconds` covers the stepping loop only, not backend setup.
    """

    times: np.ndarray
    states: np.ndarray
    max_norm_drift: float
    config: RunConfig
    elapsed_seconds: float

    @property
    def n_recorded(self) -> int:
        return self.states.shape[0]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


class RK4Scratch:
    """Preallocated stage and combination buffers for one state shape."""

    def __init__(self, n: int):
        self.k1 = np.empty((n, 3))
        self.k2 = np.empty((n, 3))
        self.k3 = np.empty((n, 3))
        self.k4 = np.empty((n, 3))
        self.stage = np.empty((n, 3))
        self.t1 = np.empty((n, 3))
        self.t2 = np.empty((n, 3))


def rk4_step(deriv, m: np.ndarray, u: np.ndarray, dt: float,
             scratch: RK4Scratch) -> None:
    """Advance `m` in place by one classical RK4 step.

    `deriv(m, u, out)` must write dm/dt into `out` without touching `m`.
    The input sample `u` is held constant across all four stages. No
    allocations; the combination order is pinned:
    m += dt/6 * ((k1 + 2 k2) + (2 k3 + k4)).
    """
    s = scratch
    h2 = dt * 0.5
    dt_6 = dt / 6.0

    deriv(m, u, s.k1)
    np.multiply(s.k1, h2, out=s.stage)
    np.add(m, s.stage, out=s.stage)
    deriv(s.stage, u, s.k2)
    np.multiply(s.k2, h2, out=s.stage)
    np.add(m, s.stage, out=s.stage)
    deriv(s.stage, u, s.k3)
    np.multiply(s.k3, dt, out=s.stage)
    np.add(m, s.stage, out=s.stage)
    deriv(s.stage, u, s.k4)

    np.multiply(s.k2, 2.0, out=s.t1)
    np.add(s.k1, s.t1, out=s.t1)
    np.multiply(s.k3, 2.0, out=s.t2)
    np.add(s.t2, s.k4, out=s.t2)
    np.add(s.t1, s.t2, out=s.t1)
    np.multiply(s.t1, dt_6, out=s.t1)
    np.add(m, s.t1, out=m)


def _recorded_steps(steps: int, stride: int) -> np.ndarray:
    on_grid = np.arange(0, steps + 1, stride)
    if steps % stride != 0:
        on_grid = np.append(on_grid, steps)
    return on_grid


def integrate(topology: Topology, params: PhysicalParams, config: RunConfig,
              backend=None) -> Trajectory:
    """Run one simulation and return its recorded trajectory.

    `backend` may be a prebuilt backend instance; otherwise one is created
    from `config.backend`. Divergence (non-finite state) is checked at every
    recorded step and reported with the first offending oscillator.
    """
    if topology.n != config.n:
        raise ParameterError(
            f"topology is for {topology.n} oscillators, config.n is {config.n}"
        )
    series = config.input_series
    if series is None:
        series = InputSeries.zeros(topology.n_in)
    if series.n_in != topology.n_in:
        raise ParameterError(
            f"input series has {series.n_in} channels, topology expects {topology.n_in}"
        )
    series.check_steps(config.steps)

    if backend is None:
        from .backends import create_backend

        backend = create_backend(config.backend, topology, params,
                                 workers=config.workers,
                                 gpu_device=config.gpu_device)

    m = initial_state(config.n, config.phi0)
    scratch = RK4Scratch(config.n)
    deriv = backend.derivative

    record_at = _recorded_steps(config.steps, config.record_stride)
    times = record_at * config.dt
    states = np.empty((record_at.size, config.n, 3))
    states[0] = m
    rec_idx = 1
    next_record = record_at[1]

    start = time.perf_counter()
    for step in range(1, config.steps + 1):
        u = series.sample_for_step(step - 1)
        rk4_step(deriv, m, u, config.dt, scratch)
        if step == next_record:
            if not np.all(np.isfinite(m)):
                bad = int(np.argmax(~np.isfinite(m).all(axis=1)))
                raise IntegrationDivergedError(oscillator=bad, step=step)
            states[rec_idx] = m
            rec_idx += 1
            if rec_idx < record_at.size:
                next_record = record_at[rec_idx]
    elapsed = time.perf_counter() - start

    norms = np.linalg.norm(states, axis=2)
    drift = float(np.abs(norms - 1.0).max())
    return Trajectory(times=times, states=states, max_norm_drift=drift,
                      config=config, elapsed_seconds=elapsed)


def run(config: RunConfig, params: PhysicalParams | None = None,
        topology: Topology | None = None, backend=None) -> Trajectory:
    """Convenience wrapper: build the seeded topology, then integrate."""
    if params is None:
        params = PhysicalParams()
    if topology is None:
        n_in = config.input_series.n_in if config.input_series is not None else 1
        topology = build_topology(config.n, n_in=n_in, seed=config.seed)
    return integrate(topology, params, config, backend=backend)


def compare_trajectories(a: Trajectory, b: Trajectory) -> float:
    """Largest elementwise state deviation between two runs.

    Both trajectories must be on the same recording grid; mismatched shapes
    or time grids raise `TrajectoryMismatchError` rather than returning a
    misleading number.
    """
    if a.states.shape != b.states.shape:
        raise TrajectoryMismatchError(
            f"recorded shapes differ: {a.states.shape} vs {b.states.shape}"
        )
    if not np.array_equal(a.times, b.times):
        raise TrajectoryMismatchError("recording time grids differ")
    return float(np.abs(a.states - b.states).max())


def write_trajectory_csv(path, trajectory: Trajectory) -> None:
    """Write the recorded grid as CSV rows `t,k,mx,my,mz` (17 digits)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,k,mx,my,mz\n")
        for i in range(trajectory.n_recorded):
            t = trajectory.times[i]
            for k in range(trajectory.states.shape[1]):
                mx, my, mz = trajectory.states[i, k]
                fh.write(f"{t:.17g},{k},{mx:.17g},{my:.17g},{mz:.17g}\n")
