"""Exception types shared across the package."""


class SpinoscError(Exception):
    """Base class for all package errors."""


class ParameterError(SpinoscError, ValueError):
    """A physical parameter or run setting failed validation."""


class ConfigError(SpinoscError, ValueError):
    """A config file could not be parsed or contains unknown keys."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateCouplingError(SpinoscError, ValueError):
    """Drawn coupling matrix has (numerically) zero spectral radius and
    cannot be normalized."""


class SpectralRadiusError(SpinoscError, RuntimeError):
    """Spectral radius iteration did not converge.

    Carries the last estimate so callers can report how far it got.
    """

    def __init__(self, message: str, last_estimate: float):
        super().__init__(f"{message} (last estimate {last_estimate:.9g})")
        self.last_estimate = last_estimate


class BackendUnavailableError(SpinoscError, RuntimeError):
    """Requested backend id is unknown or not usable on this host."""

    def __init__(self, requested: str, available: list[str]):
        self.requested = requested
        self.available = available
        super().__init__(
            f"backend {requested!r} is not available; "
            f"available backends: {', '.join(available) or 'none'}"
        )


class IntegrationDivergedError(SpinoscError, RuntimeError):
    """A state component became non-finite during integration."""

    def __init__(self, oscillator: int, step: int):
        self.oscillator = oscillator
        self.step = step
        super().__init__(
            f"non-finite state component for oscillator {oscillator} "
            f"at step {step}"
        )


class TrajectoryMismatchError(SpinoscError, ValueError):
    """Two trajectories do not share a comparable recording grid."""


class BenchProtocolError(SpinoscError, ValueError):
    """A benchmark record or report violates the harness protocol."""


class DriftBudgetError(BenchProtocolError):
    """A timing run exceeded the norm-drift budget and was rejected."""
