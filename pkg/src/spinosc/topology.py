"""Reservoir topology: coupling matrix, input weights, initial state.

Randomness is drawn from a single named stream (PCG64) in one documented
order, so a seed reproduces the exact same reservoir bit for bit: first the
coupling off-diagonals (row-major, diagonal skipped, not drawn), then the
input weights (row-major). The coupling matrix is scaled so its spectral
radius is 1, the usual echo-state normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCouplingError, ParameterError, SpectralRadiusError

# Initial tilt away from e_z: one degree, in radians.
PHI0_DEFAULT = 2.0 * math.pi / 360.0

# Fixed internal seed for the spectral-radius start vector. Independent of
# the user stream so the draw order above stays exactly two blocks.
_ARNOLDI_SEED = 0x5EED


@dataclass
class RngStream:
    """Seeded random stream with a documented algorithm and draw counter.

    Uses numpy's PCG64 bit generator. `uniform_pm1` draws 53-bit doubles u in
    [0, 1) via `Generator.random` and maps them to [-1, 1) as 2u - 1; the
    mapping is exact in float64. The stream for a given seed is identical
    across platforms; `draws` counts values consumed, so two streams with
    equal (seed, draws) are in the same state.
    """

    seed: int
    algorithm: str = "pcg64"
    draws: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.algorithm != "pcg64":
            raise ParameterError(f"unsupported rng algorithm {self.algorithm!r}")
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform_pm1(self, count: int) -> np.ndarray:
        """`count` i.i.d. doubles uniform on [-1, 1)."""
        if count < 0:
            raise ParameterError("draw count must be non-negative")
        u = self._gen.random(count)
        self.draws += count
        return 2.0 * u - 1.0


@dataclass(frozen=True)
class CouplingMatrix:
    """Square oscillator-to-oscillator coupling with a structurally zero diagonal.

    `generate_coupling` returns matrices normalized to unit spectral radius;
    directly constructed matrices (for instance `CouplingMatrix.zeros` for
    decoupled diagnostics) only need the structural invariants.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.ascontiguousarray(np.asarray(self.entries, dtype=np.float64))
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ParameterError("coupling matrix must be square")
        if entries.shape[0] < 1:
            raise ParameterError("coupling matrix must be at least 1x1")
        if not np.all(np.isfinite(entries)):
            raise ParameterError("coupling entries must be finite")
        if np.any(np.diagonal(entries) != 0.0):
            raise ParameterError("coupling diagonal must be exactly zero")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, n: int) -> "CouplingMatrix":
        return cls(entries=np.zeros((n, n)))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class InputWeights:
    """Per-oscillator weights applied to the drive vector u; entries in [-1, 1]."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.ascontiguousarray(np.asarray(self.entries, dtype=np.float64))
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise ParameterError("input weights must be a (n, n_in) array")
        if not np.all(np.isfinite(entries)):
            raise ParameterError("input weights must be finite")
        if np.any(np.abs(entries) > 1.0):
            raise ParameterError("input weights must lie in [-1, 1]")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, n: int, n_in: int = 1) -> "InputWeights":
        return cls(entries=np.zeros((n, n_in)))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def n_in(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class Topology:
    """Coupling matrix and input weights for one reservoir."""

    coupling: CouplingMatrix
    input_weights: InputWeights

    def __post_init__(self) -> None:
        if self.coupling.n != self.input_weights.n:
            raise ParameterError(
                f"coupling is {self.coupling.n} oscillators but input weights "
                f"are for {self.input_weights.n}"
            )

    @property
    def n(self) -> int:
        return self.coupling.n

    @property
    def n_in(self) -> int:
        return self.input_weights.n_in

    @classmethod
    def decoupled(cls, n: int, n_in: int = 1) -> "Topology":
        """Zero coupling and zero input weights: n independent oscillators."""
        return cls(CouplingMatrix.zeros(n), InputWeights.zeros(n, n_in))


def _arnoldi_cycle(w: np.ndarray, x: np.ndarray, m: int):
    """One Arnoldi factorization of dimension up to m from start vector x.

    Returns (estimate, relative residual, restart vector, broke_down). On
    breakdown the Krylov subspace is invariant and the Ritz values are exact
    eigenvalues of the restriction, so the estimate is accepted as exact.
    """
    n = w.shape[0]
    V = np.empty((m + 1, n))
    H = np.zeros((m + 1, m))
    V[0] = x
    k = m
    broke_down = False
    for j in range(m):
        y = w @ V[j]
        for i in range(j + 1):  # modified Gram-Schmidt
            H[i, j] = V[i] @ y
            y -= H[i, j] * V[i]
        h = np.linalg.norm(y)
        H[j + 1, j] = h
        if h < 1e-12:
            k = j + 1
            broke_down = True
            break
        V[j + 1] = y / h
    evals, evecs = np.linalg.eig(H[:k, :k])
    idx = int(np.argmax(np.abs(evals)))
    est = float(abs(evals[idx]))
    if broke_down or est == 0.0:
        resid = 0.0
    else:
        resid = float(H[k, k - 1] * abs(evecs[-1, idx]) / est)
    ritz = V[:k].T @ evecs[:, idx]
    return est, resid, ritz, broke_down


def spectral_radius(w: np.ndarray, tol: float = 1e-8, max_cycles: int = 60,
                    krylov_dim: int = 150) -> float:
    """Largest eigenvalue modulus of a real square matrix.

    Iterated-matvec Krylov (Arnoldi) estimation with restarts from the
    dominant Ritz vector. The basis dimension is min(n, krylov_dim): for
    n <= krylov_dim the factorization terminates by breakdown and the result
    is the exact Hessenberg spectrum, which in particular resolves the
    complex-conjugate dominant pairs that defeat plain power iteration.

    Returns 0.0 when the power iterates vanish: a pre-pass drives the start
    vector through min(n, krylov_dim) normalized matvecs and an exactly zero
    image means the matrix acts nilpotently on it (zero matrices, triangular
    shifts, any structurally nilpotent pattern). Dense defective spectra
    whose iterates merely shrink are limited by the eps^(1/index) eigenvalue
    conditioning that binds every backward-stable method. Raises
    `SpectralRadiusError` with the last estimate if the relative residual
    never reaches `tol`.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ParameterError("spectral_radius needs a square matrix")
    n = w.shape[0]
    if n == 1:
        return float(abs(w[0, 0]))
    m = min(n, krylov_dim)
    gen = np.random.default_rng(_ARNOLDI_SEED)
    x = gen.standard_normal(n)
    x /= np.linalg.norm(x)

    # nilpotency pre-pass: for n <= krylov_dim the nilpotency index is at
    # most the chain length, so structural nilpotents are caught exactly
    z = w @ x
    for _ in range(m - 1):
        if not z.any():
            return 0.0
        z = w @ (z / np.linalg.norm(z))
    if not z.any():
        return 0.0
    est = 0.0
    for cycle in range(max_cycles):
        est, resid, ritz, broke_down = _arnoldi_cycle(w, x, m)
        if broke_down or est == 0.0 or resid <= tol:
            return est
        x = np.real(ritz)
        nrm = np.linalg.norm(x)
        if nrm < 1e-12:
            x = np.imag(ritz)
            nrm = np.linalg.norm(x)
        if nrm < 1e-12 or (cycle + 1) % 20 == 0:
            # stagnation guard: reseed rather than restart in a dead direction
            x = gen.standard_normal(n)
            nrm = np.linalg.norm(x)
        x = x / nrm
    raise SpectralRadiusError(
        f"no convergence after {max_cycles} Arnoldi cycles", last_estimate=est
    )


def generate_coupling(n: int, rng: RngStream, sr_tol: float = 1e-8) -> CouplingMatrix:
    """Random reservoir coupling, normalized to unit spectral radius.

    Off-diagonal entries are i.i.d. uniform [-1, 1], consumed from `rng` in
    row-major order with the diagonal skipped (not drawn: the stream length
    is exactly n*(n-1)). The whole matrix is then divided by its estimated
    spectral radius. n = 1 returns the 1x1 zero matrix without scaling.
    Raises `DegenerateCouplingError` when the drawn matrix has numerically
    zero spectral radius and cannot be normalized.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if n == 1:
        return CouplingMatrix(entries=np.zeros((1, 1)))
    entries = np.zeros((n, n))
    off_diagonal = ~np.eye(n, dtype=bool)
    entries[off_diagonal] = rng.uniform_pm1(n * (n - 1))
    rho = spectral_radius(entries, tol=sr_tol)
    if rho < 1e-12:
        raise DegenerateCouplingError(
            f"drawn {n}x{n} coupling has spectral radius {rho:.3e}; "
            "cannot normalize"
        )
    entries /= rho
    return CouplingMatrix(entries=entries)


def generate_input_weights(n: int, n_in: int, rng: RngStream) -> InputWeights:
    """Input weights i.i.d. uniform [-1, 1], drawn row-major."""
    if n < 1 or n_in < 1:
        raise ParameterError("n and n_in must be >= 1")
    entries = rng.uniform_pm1(n * n_in).reshape(n, n_in)
    return InputWeights(entries=entries)


def build_topology(n: int, n_in: int = 1, seed: int = 0,
                   sr_tol: float = 1e-8) -> Topology:
    """Build a full reservoir from one seed.

    Fixed global draw order: the coupling matrix first, then the input
    weights, from a single stream. Same (n, n_in, seed) gives bit-identical
    results.
    """
    rng = RngStream(seed)
    coupling = generate_coupling(n, rng, sr_tol=sr_tol)
    weights = generate_input_weights(n, n_in, rng)
    return Topology(coupling=coupling, input_weights=weights)


def initial_state(n: int, phi0: float = PHI0_DEFAULT) -> np.ndarray:
    """Identical starting moment for every oscillator.

    m_k(0) = (sin(phi0) cos(phi0), sin(phi0) sin(phi0), cos(phi0)): a tilt of
    phi0 away from e_z with matching azimuth, unit norm by construction.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    s = math.sin(phi0)
    c = math.cos(phi0)
    return np.tile(np.array([s * c, s * s, c]), (n, 1))


def save_matrix_csv(path, entries: np.ndarray) -> None:
    """Write a matrix as CSV, one row per line, 17 significant digits.

    17 digits round-trip float64 exactly, so save followed by load is
    bit-identical.
    """
    np.savetxt(path, np.atleast_2d(entries), fmt="%.17g", delimiter=",")


def load_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)


def save_coupling(path, coupling: CouplingMatrix) -> None:
    save_matrix_csv(path, coupling.entries)


def load_coupling(path) -> CouplingMatrix:
    return CouplingMatrix(entries=load_matrix_csv(path))


def save_input_weights(path, weights: InputWeights) -> None:
    save_matrix_csv(path, weights.entries)


def load_input_weights(path) -> InputWeights:
    return InputWeights(entries=load_matrix_csv(path))
