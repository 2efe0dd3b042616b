"""Simulation of reservoirs of coupled spin-torque oscillators.

The package is organized around a fixed evaluation contract: every CPU
backend computes the equation of motion in one pinned operation order, so
runs are reproducible bit for bit across vectorized and compiled execution
paths, thread counts included. See `spinosc.model` for the equations and
`spinosc.backends` for the execution paths.
"""

from .backends import (
    BackendDescriptor,
    available_backend_ids,
    create_backend,
    list_backends,
    register_backend,
    unregister_backend,
)
from .bench import (
    DESK_GRID,
    DESK_STEPS,
    FULL_GRID,
    FULL_STEPS,
    BenchReport,
    FactorCell,
    TimingRecord,
    display_factor,
    emit_csv,
    emit_markdown,
    fit_scaling_exponent,
    read_timing_csv,
    run_benchmark,
    speedup_factors,
    time_derivative_eval,
    time_integration,
)
from .errors import (
    BackendUnavailableError,
    BenchProtocolError,
    ConfigError,
    DegenerateCouplingError,
    DriftBudgetError,
    IntegrationDivergedError,
    ParameterError,
    SpectralRadiusError,
    SpinoscError,
    TrajectoryMismatchError,
)
from .integrator import (
    RK4Scratch,
    RunConfig,
    Trajectory,
    compare_trajectories,
    integrate,
    rk4_step,
    run,
    write_trajectory_csv,
)
from .model import (
    InputSeries,
    Workspace,
    effective_field,
    input_field_x,
    coupling_field_x,
    llg_derivative,
    spin_torque_strength,
    total_b,
    tree_matvec,
    tree_reduce_rows,
)
from .params import (
    DerivedConstants,
    PhysicalParams,
    derive,
    small_angle_frequency,
)
from .topology import (
    PHI0_DEFAULT,
    CouplingMatrix,
    InputWeights,
    RngStream,
    Topology,
    build_topology,
    generate_coupling,
    generate_input_weights,
    initial_state,
    load_coupling,
    load_input_weights,
    load_matrix_csv,
    save_coupling,
    save_input_weights,
    save_matrix_csv,
    spectral_radius,
)

__version__ = "0.1.0"

__all__ = [
    "available_backend_ids",
    "BackendDescriptor",
    "BackendUnavailableError",
    "BenchProtocolError",
    "BenchReport",
    "build_topology",
    "compare_trajectories",
    "ConfigError",
    "coupling_field_x",
    "CouplingMatrix",
    "create_backend",
    "DegenerateCouplingError",
    "derive",
    "DerivedConstants",
    "DESK_GRID",
    "DESK_STEPS",
    "display_factor",
    "DriftBudgetError",
    "effective_field",
    "emit_csv",
    "emit_markdown",
    "FactorCell",
    "fit_scaling_exponent",
    "FULL_GRID",
    "FULL_STEPS",
    "generate_coupling",
    "generate_input_weights",
    "initial_state",
    "input_field_x",
    "InputSeries",
    "InputWeights",
    "integrate",
    "IntegrationDivergedError",
    "list_backends",
    "llg_derivative",
    "load_coupling",
    "load_input_weights",
    "load_matrix_csv",
    "ParameterError",
    "PHI0_DEFAULT",
    "PhysicalParams",
    "read_timing_csv",
    "register_backend",
    "rk4_step",
    "RK4Scratch",
    "RngStream",
    "run",
    "run_benchmark",
    "RunConfig",
    "save_coupling",
    "save_input_weights",
    "save_matrix_csv",
    "small_angle_frequency",
    "spectral_radius",
    "SpectralRadiusError",
    "speedup_factors",
    "spin_torque_strength",
    "SpinoscError",
    "time_derivative_eval",
    "time_integration",
    "TimingRecord",
    "Topology",
    "total_b",
    "Trajectory",
    "TrajectoryMismatchError",
    "tree_matvec",
    "tree_reduce_rows",
    "unregister_backend",
    "Workspace",
    "write_trajectory_csv",
]
