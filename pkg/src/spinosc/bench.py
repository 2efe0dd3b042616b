"""Benchmark harness: timed integration cells, speedups, scaling fits.

Protocol per cell (one backend at one reservoir size): build the backend
once, run exactly one untimed warmup integration (absorbs jit compilation
and cache effects), then time `repetitions` full runs and report mean and
population standard deviation of the stepping-loop wall time. The warmup
trajectory doubles as the correctness sample: every non-baseline cell is
compared against the baseline's trajectory on the same recording grid.

A cell is admitted only if its unit-norm drift stays inside the budget,
scaled to the run length: budget = drift_budget * steps / 1e4. Drift beyond
that means the integration is too inaccurate for its timing to be
meaningful.
"""

from __future__ import annotations

import csv
import os
import platform
import statistics
import time
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .backends import available_backend_ids, create_backend
from .errors import BenchProtocolError, DriftBudgetError, ParameterError
from .integrator import RunConfig, Trajectory, compare_trajectories, integrate
from .params import PhysicalParams
from .topology import build_topology

# Reservoir sizes and step counts for the two published protocols. The desk
# grid finishes in minutes on a workstation; the full grid is the
# publication-scale sweep.
DESK_GRID = (1, 10, 100, 1000, 2500)
FULL_GRID = (1, 10, 100, 1000, 2500, 5000, 10000)
DESK_STEPS = 10_000
FULL_STEPS = 500_000
DEFAULT_DT = 1e-11
DEFAULT_REPETITIONS = 3
DEFAULT_TOLERANCE = 1e-10
DEFAULT_DRIFT_BUDGET = 1e-8

CSV_COLUMNS = ("backend", "n", "steps", "dt", "repetitions",
               "mean_s", "std_s", "max_norm_drift", "factor_vs_base")


@dataclass(frozen=True)
class TimingRecord:
    """Timing summary of one benchmark cell."""

    backend: str
    n: int
    steps: int
    dt: float
    repetitions: int
    mean_s: float
    std_s: float
    max_norm_drift: float


def _describe_hardware() -> str:
    cpu = platform.processor() or platform.machine() or "unknown cpu"
    return f"{cpu}, {os.cpu_count() or 1} cores"


@dataclass
class BenchReport:
    """Collected cells plus the baseline they are normalized against."""

    baseline: str = "reference"
    records: list[TimingRecord] = field(default_factory=list)
    hardware: str = field(default_factory=_describe_hardware)
    emitted: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S"))

    def add(self, record: TimingRecord) -> None:
        self.records.append(record)

    def backends(self) -> list[str]:
        seen: list[str] = []
        for r in self.records:
            if r.backend not in seen:
                seen.append(r.backend)
        return seen

    def sizes(self) -> list[int]:
        seen: list[int] = []
        for r in self.records:
            if r.n not in seen:
                seen.append(r.n)
        return seen

    def cell(self, backend: str, n: int) -> TimingRecord | None:
        for r in self.records:
            if r.backend == backend and r.n == n:
                return r
        return None

    def factor_vs_base(self, record: TimingRecord) -> float:
        """Speedup of `record` against the baseline cell at the same size.

        Defined as baseline mean time divided by this cell's mean time, so
        the baseline itself is exactly 1.0 and larger is faster.
        """
        if record.backend == self.baseline:
            return 1.0
        base = self.cell(self.baseline, record.n)
        if base is None:
            raise BenchProtocolError(
                f"no {self.baseline!r} cell at n={record.n} to normalize "
                f"{record.backend!r} against"
            )
        return base.mean_s / record.mean_s


@dataclass(frozen=True)
class FactorCell:
    """One entry of the speedup table: factor of `backend` at size `n`."""

    backend: str
    n: int
    factor: float
    display: float
    best: bool


def speedup_factors(report: BenchReport) -> list[FactorCell]:
    """Speedup table derived from a report: factor per backend per size.

    Factor is baseline mean over method mean (larger is faster), `display`
    is the one-decimal presentation value, and the best factor at each size
    is flagged. Missing baseline cells raise `BenchProtocolError` naming
    the cell.
    """
    cells = [
        FactorCell(backend=r.backend, n=r.n,
                   factor=report.factor_vs_base(r),
                   display=display_factor(report.factor_vs_base(r)),
                   best=False)
        for r in report.records
    ]
    best_at: dict[int, float] = {}
    for c in cells:
        if c.n not in best_at or c.factor > best_at[c.n]:
            best_at[c.n] = c.factor
    return [
        FactorCell(backend=c.backend, n=c.n, factor=c.factor,
                   display=c.display, best=(c.factor == best_at[c.n]))
        for c in cells
    ]


def display_factor(raw: float) -> float:
    """Speedup factor rounded for display, one decimal place.

    Two-stage decimal rounding, half away from zero at each stage: first to
    two decimals, then to one. The intermediate stage makes values that
    print as x.x5 (e.g. 2.546 -> 2.55) round up to the displayed tenth.
    """
    d = Decimal(raw).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return float(d.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def drift_budget_for(steps: int, drift_budget: float = DEFAULT_DRIFT_BUDGET) -> float:
    """Admissible unit-norm drift for a run of `steps` steps."""
    return drift_budget * steps / 1.0e4


def time_integration(topology, params: PhysicalParams, config: RunConfig,
                     repetitions: int = DEFAULT_REPETITIONS,
                     drift_budget: float | None = DEFAULT_DRIFT_BUDGET,
                     runner=integrate) -> tuple[TimingRecord, Trajectory]:
    """Time one benchmark cell; returns (record, warmup trajectory).

    The backend is constructed once and reused, one untimed warmup run is
    made, then `repetitions` timed runs. `runner` is the integration entry
    point and exists so tests can substitute a scripted one.
    """
    if repetitions < 1:
        raise ParameterError("repetitions must be >= 1")
    backend = create_backend(config.backend, topology, params,
                             workers=config.workers,
                             gpu_device=config.gpu_device)
    warmup = runner(topology, params, config, backend=backend)
    elapsed: list[float] = []
    drift = warmup.max_norm_drift
    for _ in range(repetitions):
        traj = runner(topology, params, config, backend=backend)
        elapsed.append(traj.elapsed_seconds)
        drift = max(drift, traj.max_norm_drift)
    record = TimingRecord(
        backend=config.backend, n=config.n, steps=config.steps, dt=config.dt,
        repetitions=repetitions, mean_s=statistics.fmean(elapsed),
        std_s=statistics.pstdev(elapsed), max_norm_drift=drift,
    )
    if drift_budget is not None:
        budget = drift_budget_for(config.steps, drift_budget)
        if drift > budget:
            raise DriftBudgetError(
                f"{config.backend!r} at n={config.n}: unit-norm drift "
                f"{drift:.3e} exceeds the admission budget {budget:.3e} "
                f"for {config.steps} steps"
            )
    return record, warmup


def time_derivative_eval(topology, params: PhysicalParams,
                         backend_id: str = "reference", evals: int = 5,
                         workers: int | None = None, seed: int = 0) -> float:
    """Mean wall seconds for one derivative evaluation at this size.

    One untimed call first, then `evals` timed calls on a seeded random
    unit-norm state with zero drive: random moments exercise the generic
    field values rather than the special near-pole start.
    """
    if evals < 1:
        raise ParameterError("evals must be >= 1")
    backend = create_backend(backend_id, topology, params, workers=workers)
    gen = np.random.default_rng(seed)
    m = gen.standard_normal((topology.n, 3))
    m /= np.linalg.norm(m, axis=1, keepdims=True)
    u = np.zeros(topology.n_in)
    out = np.empty_like(m)
    backend.derivative(m, u, out)
    start = time.perf_counter()
    for _ in range(evals):
        backend.derivative(m, u, out)
    return (time.perf_counter() - start) / evals


def fit_scaling_exponent(sizes, seconds) -> float:
    """Least-squares slope of log(time) against log(size).

    Needs at least four points spanning at least one decade in size;
    anything less cannot support a scaling claim and raises
    `BenchProtocolError`.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    seconds = np.asarray(seconds, dtype=np.float64)
    if sizes.shape != seconds.shape or sizes.ndim != 1:
        raise BenchProtocolError("sizes and seconds must be 1-d and equal length")
    if sizes.size < 4:
        raise BenchProtocolError(
            f"scaling fit needs at least 4 sizes, got {sizes.size}"
        )
    if np.any(sizes <= 0.0) or np.any(seconds <= 0.0):
        raise BenchProtocolError("sizes and seconds must be positive")
    if sizes.max() / sizes.min() < 10.0:
        raise BenchProtocolError("sizes must span at least one decade")
    slope, _ = np.polyfit(np.log(sizes), np.log(seconds), 1)
    return float(slope)


def run_benchmark(backend_ids=None, sizes=None, steps: int | None = None,
                  dt: float = DEFAULT_DT, seed: int = 0, full: bool = False,
                  repetitions: int = DEFAULT_REPETITIONS,
                  tolerance: float = DEFAULT_TOLERANCE,
                  drift_budget: float | None = DEFAULT_DRIFT_BUDGET,
                  baseline: str = "reference", params: PhysicalParams | None = None,
                  progress=None) -> BenchReport:
    """Run the benchmark protocol and return the collected report.

    Defaults follow the desk protocol; `full=True` switches to the
    publication grid and step count. The baseline backend is timed first at
    each size and every other backend's warmup trajectory must agree with it
    to within `tolerance` on the recorded grid.
    """
    if sizes is None:
        sizes = FULL_GRID if full else DESK_GRID
    if steps is None:
        steps = FULL_STEPS if full else DESK_STEPS
    if params is None:
        params = PhysicalParams()
    if backend_ids is None:
        backend_ids = available_backend_ids()
    backend_ids = list(backend_ids)
    if baseline not in backend_ids:
        raise BenchProtocolError(
            f"baseline backend {baseline!r} is not among {backend_ids}"
        )
    # baseline first so every size has its oracle before the others run
    ordered = [baseline] + [b for b in backend_ids if b != baseline]
    report = BenchReport(baseline=baseline)
    for n in sizes:
        topology = build_topology(n, n_in=1, seed=seed)
        oracle: Trajectory | None = None
        for bid in ordered:
            config = RunConfig(n=n, steps=steps, dt=dt, seed=seed,
                               backend=bid, record_stride=steps)
            record, warmup = time_integration(
                topology, params, config, repetitions=repetitions,
                drift_budget=drift_budget,
            )
            if bid == baseline:
                oracle = warmup
            else:
                deviation = compare_trajectories(oracle, warmup)
                if deviation > tolerance:
                    raise BenchProtocolError(
                        f"{bid!r} deviates from {baseline!r} by {deviation:.3e} "
                        f"at n={n} (tolerance {tolerance:.1e})"
                    )
            report.add(record)
            if progress is not None:
                progress(f"{bid} n={n}: mean {record.mean_s:.4g}s "
                         f"std {record.std_s:.2g}s")
    return report


def emit_csv(report: BenchReport, path) -> None:
    """Write the report as CSV with a fixed column set, 17 digits per float."""
    if not report.records:
        raise BenchProtocolError("refusing to emit an empty report")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in report.records:
            writer.writerow([
                r.backend, r.n, r.steps, "%.17g" % r.dt, r.repetitions,
                "%.17g" % r.mean_s, "%.17g" % r.std_s,
                "%.17g" % r.max_norm_drift,
                "%.17g" % report.factor_vs_base(r),
            ])


def read_timing_csv(path) -> list[dict]:
    """Read `emit_csv` output back into typed row dicts."""
    rows: list[dict] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise BenchProtocolError(
                f"unexpected timing CSV columns: {reader.fieldnames}"
            )
        for row in reader:
            rows.append({
                "backend": row["backend"],
                "n": int(row["n"]),
                "steps": int(row["steps"]),
                "dt": float(row["dt"]),
                "repetitions": int(row["repetitions"]),
                "mean_s": float(row["mean_s"]),
                "std_s": float(row["std_s"]),
                "max_norm_drift": float(row["max_norm_drift"]),
                "factor_vs_base": float(row["factor_vs_base"]),
            })
    return rows


def _format_seconds(mean_s: float) -> str:
    if mean_s < 60.0:
        return f"{mean_s:.2f}s"
    return f"{mean_s / 60.0:.2f}m"


def emit_markdown(report: BenchReport) -> str:
    """Markdown table: one row per backend, one column per size.

    The fastest cell in each column is bolded. Times below a minute print
    as seconds, longer ones as minutes.
    """
    if not report.records:
        raise BenchProtocolError("refusing to emit an empty report")
    backends = report.backends()
    sizes = report.sizes()
    best: dict[int, str] = {}
    for n in sizes:
        cells = [(report.cell(b, n), b) for b in backends]
        cells = [(r, b) for r, b in cells if r is not None]
        if cells:
            best[n] = min(cells, key=lambda rb: rb[0].mean_s)[1]
    lines = ["| backend | " + " | ".join(f"N={n}" for n in sizes) + " |",
             "| --- | " + " | ".join("---" for _ in sizes) + " |"]
    for b in backends:
        row = [b]
        for n in sizes:
            r = report.cell(b, n)
            if r is None:
                row.append("-")
                continue
            text = _format_seconds(r.mean_s)
            if best.get(n) == b:
                text = f"**{text}**"
            row.append(text)
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
