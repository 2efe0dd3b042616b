"""Reservoir generation, spectral radius, and persistence.

The spectral-radius routine is an iterated-matvec method by design, so the
tests check it against the dense eigensolver as an independent second
route, plus analytic cases (2x2 antidiagonal, nilpotent shift) where the
answer is known in closed form.
"""

import math

import numpy as np
import pytest

from spinosc import (
    DegenerateCouplingError,
    ParameterError,
    SpectralRadiusError,
    Topology,
    build_topology,
    initial_state,
    spectral_radius,
)
from spinosc.topology import (
    PHI0_DEFAULT,
    CouplingMatrix,
    InputWeights,
    RngStream,
    generate_coupling,
    generate_input_weights,
    load_coupling,
    load_input_weights,
    save_coupling,
    save_input_weights,
)

# first four uniform_pm1 draws for seed 0, frozen against stream drift
SEED0_DRAWS = np.array([
    0.2739233746429086,
    -0.4604265724722594,
    -0.9180529521276106,
    -0.9669447289429418,
])


class TestRngStream:
    def test_frozen_draws(self) -> None:
        stream = RngStream(seed=0)
        assert np.array_equal(stream.uniform_pm1(4), SEED0_DRAWS)

    def test_draw_counter(self) -> None:
        stream = RngStream(seed=3)
        stream.uniform_pm1(5)
        stream.uniform_pm1(2)
        assert stream.draws == 7

    def test_same_seed_same_stream(self) -> None:
        a = RngStream(seed=42).uniform_pm1(100)
        b = RngStream(seed=42).uniform_pm1(100)
        assert np.array_equal(a, b)

    def test_range(self) -> None:
        draws = RngStream(seed=9).uniform_pm1(10_000)
        assert draws.min() >= -1.0 and draws.max() < 1.0

    def test_rejects_unknown_algorithm(self) -> None:
        with pytest.raises(ParameterError):
            RngStream(seed=0, algorithm="mt19937")

    def test_rejects_negative_count(self) -> None:
        with pytest.raises(ParameterError):
            RngStream(seed=0).uniform_pm1(-1)


class TestSpectralRadius:
    def test_antidiagonal_2x2(self) -> None:
        # eigenvalues of [[0, a], [b, 0]] are +-sqrt(ab)
        got = spectral_radius(np.array([[0.0, 0.7], [-0.3, 0.0]]))
        assert got == pytest.approx(math.sqrt(0.21), rel=1e-12)

    def test_one_by_one(self) -> None:
        assert spectral_radius(np.array([[-2.5]])) == 2.5

    def test_zero_matrix(self) -> None:
        assert spectral_radius(np.zeros((6, 6))) == 0.0

    def test_nilpotent_shift(self) -> None:
        w = np.zeros((8, 8))
        w[np.arange(7), np.arange(1, 8)] = 1.0
        assert spectral_radius(w) == 0.0

    def test_nilpotent_2x2(self) -> None:
        assert spectral_radius(np.array([[0.0, 2.0], [0.0, 0.0]])) == 0.0

    @pytest.mark.parametrize("seed", range(20))
    def test_against_dense_eigensolver(self, seed: int) -> None:
        gen = np.random.default_rng(seed)
        n = int(gen.integers(2, 60))
        w = gen.uniform(-1.0, 1.0, size=(n, n))
        oracle = float(np.abs(np.linalg.eigvals(w)).max())
        assert spectral_radius(w) == pytest.approx(oracle, rel=1e-8)

    def test_rejects_non_square(self) -> None:
        with pytest.raises(ParameterError):
            spectral_radius(np.ones((3, 2)))

    def test_failure_carries_last_estimate(self) -> None:
        with pytest.raises(SpectralRadiusError) as info:
            spectral_radius(np.ones((4, 4)) - np.eye(4), max_cycles=0)
        assert info.value.last_estimate == 0.0


class TestGeneration:
    def test_draw_order_reconstruction(self) -> None:
        """The documented consumption order (coupling row-major off-diagonal,
        then input weights row-major) reproduces build_topology bit-exactly."""
        n, n_in, seed = 6, 2, 5
        top = build_topology(n, n_in=n_in, seed=seed)

        stream = RngStream(seed)
        entries = np.zeros((n, n))
        entries[~np.eye(n, dtype=bool)] = stream.uniform_pm1(n * (n - 1))
        entries /= spectral_radius(entries)
        weights = stream.uniform_pm1(n * n_in).reshape(n, n_in)

        assert np.array_equal(top.coupling.entries, entries)
        assert np.array_equal(top.input_weights.entries, weights)

    def test_deterministic(self) -> None:
        a = build_topology(9, seed=21)
        b = build_topology(9, seed=21)
        assert np.array_equal(a.coupling.entries, b.coupling.entries)
        assert np.array_equal(a.input_weights.entries, b.input_weights.entries)
        c = build_topology(9, seed=22)
        assert not np.array_equal(a.coupling.entries, c.coupling.entries)

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("n", [2, 5, 17])
    def test_unit_spectral_radius_and_zero_diagonal(self, n: int, seed: int) -> None:
        coupling = generate_coupling(n, RngStream(seed))
        assert np.all(np.diagonal(coupling.entries) == 0.0)
        rho = float(np.abs(np.linalg.eigvals(coupling.entries)).max())
        assert rho == pytest.approx(1.0, abs=1e-6)

    def test_single_oscillator_has_no_coupling(self, monkeypatch: pytest.MonkeyPatch) -> None:
        # the 1x1 case must not consult the spectral radius at all
        import spinosc.topology as topo

        def boom(*args, **kwargs):
            raise AssertionError("spectral_radius must not be called for n = 1")

        monkeypatch.setattr(topo, "spectral_radius", boom)
        coupling = generate_coupling(1, RngStream(0))
        assert np.array_equal(coupling.entries, np.zeros((1, 1)))

    def test_degenerate_draw_raises(self, monkeypatch: pytest.MonkeyPatch) -> None:
        import spinosc.topology as topo

        monkeypatch.setattr(topo, "spectral_radius", lambda *a, **k: 0.0)
        with pytest.raises(DegenerateCouplingError):
            generate_coupling(4, RngStream(0))

    def test_input_weights_shape_and_range(self) -> None:
        weights = generate_input_weights(11, 3, RngStream(2))
        assert weights.entries.shape == (11, 3)
        assert np.abs(weights.entries).max() <= 1.0

    def test_rejects_bad_sizes(self) -> None:
        with pytest.raises(ParameterError):
            generate_coupling(0, RngStream(0))
        with pytest.raises(ParameterError):
            generate_input_weights(3, 0, RngStream(0))


class TestContainers:
    def test_coupling_validation(self) -> None:
        with pytest.raises(ParameterError):
            CouplingMatrix(entries=np.ones((2, 3)))
        with pytest.raises(ParameterError):
            CouplingMatrix(entries=np.ones((2, 2)))  # nonzero diagonal
        bad = np.zeros((2, 2))
        bad[0, 1] = np.nan
        with pytest.raises(ParameterError):
            CouplingMatrix(entries=bad)

    def test_input_weights_validation(self) -> None:
        with pytest.raises(ParameterError):
            InputWeights(entries=np.full((2, 1), 1.5))
        with pytest.raises(ParameterError):
            InputWeights(entries=np.ones(3))

    def test_topology_size_mismatch(self) -> None:
        with pytest.raises(ParameterError):
            Topology(coupling=CouplingMatrix.zeros(3), input_weights=InputWeights.zeros(4, 1))

    def test_decoupled(self) -> None:
        top = Topology.decoupled(5, n_in=2)
        assert top.n == 5 and top.n_in == 2
        assert not top.coupling.entries.any()
        assert not top.input_weights.entries.any()


class TestPersistence:
    def test_coupling_round_trip_is_bit_exact(self, tmp_path) -> None:
        coupling = generate_coupling(12, RngStream(17))
        path = tmp_path / "w.csv"
        save_coupling(path, coupling)
        loaded = load_coupling(path)
        assert np.array_equal(loaded.entries, coupling.entries)

    def test_weights_round_trip_is_bit_exact(self, tmp_path) -> None:
        weights = generate_input_weights(12, 4, RngStream(17))
        path = tmp_path / "win.csv"
        save_input_weights(path, weights)
        assert np.array_equal(load_input_weights(path).entries, weights.entries)

    def test_single_cell_round_trip(self, tmp_path) -> None:
        path = tmp_path / "one.csv"
        save_coupling(path, CouplingMatrix.zeros(1))
        assert load_coupling(path).entries.shape == (1, 1)


class TestInitialState:
    def test_matches_formula(self) -> None:
        m = initial_state(3)
        s, c = math.sin(PHI0_DEFAULT), math.cos(PHI0_DEFAULT)
        assert np.array_equal(m, np.tile([s * c, s * s, c], (3, 1)))

    def test_unit_norm(self) -> None:
        m = initial_state(4, phi0=0.3)
        assert np.abs(np.linalg.norm(m, axis=1) - 1.0).max() <= 1e-15

    def test_default_tilt_is_one_degree(self) -> None:
        assert PHI0_DEFAULT == pytest.approx(math.radians(1.0), rel=1e-15)

    def test_rejects_zero_n(self) -> None:
        with pytest.raises(ParameterError):
            initial_state(0)
