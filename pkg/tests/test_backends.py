"""Cross-backend equality and registry behavior.

The CPU backends promise bit-identical derivatives, not merely close ones;
every comparison here is array_equal. The torch backend reduces in library
order, so when it is importable it is checked on the CPU device against a
relative tolerance instead.
"""

import numpy as np
import pytest

from spinosc import (
    BackendUnavailableError,
    PhysicalParams,
    RunConfig,
    Topology,
    build_topology,
    integrate,
)
from spinosc.backends import (
    available_backend_ids,
    create_backend,
    list_backends,
    register_backend,
    unregister_backend,
)
from spinosc.topology import initial_state


def _scrambled_state(n: int, seed: int = 0) -> np.ndarray:
    gen = np.random.default_rng(seed)
    m = gen.standard_normal((n, 3))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


class TestRegistry:
    def test_registration_order(self) -> None:
        ids = [d.backend_id for d in list_backends()]
        assert ids == ["reference", "fused", "parallel", "gpu"]

    def test_reference_always_available(self) -> None:
        assert "reference" in available_backend_ids()

    def test_descriptor_fields(self) -> None:
        ref = list_backends()[0]
        assert ref.kind == "vectorized numpy baseline"
        assert ref.requires == "numpy"
        assert ref.available is True

    def test_unknown_id_raises_listing_alternatives(self, params: PhysicalParams) -> None:
        with pytest.raises(BackendUnavailableError) as info:
            create_backend("quantum", Topology.decoupled(1), params)
        assert info.value.requested == "quantum"
        assert "reference" in info.value.available
        assert "quantum" not in str(info.value) or "reference" in str(info.value)

    def test_register_and_unregister(self, params: PhysicalParams) -> None:
        class Stub:
            def __init__(self, topology, params, **kwargs):
                pass

            def derivative(self, m, u, out):
                out.fill(0.0)
                return out

        register_backend("stub", kind="test double", requires="nothing",
                         probe=lambda: True,
                         factory=lambda top, par, **kw: Stub(top, par, **kw))
        try:
            assert "stub" in available_backend_ids()
            backend = create_backend("stub", Topology.decoupled(1), params)
            out = np.empty((1, 3))
            backend.derivative(initial_state(1), np.zeros(1), out)
            assert not out.any()
        finally:
            unregister_backend("stub")
        assert "stub" not in available_backend_ids()

    def test_unavailable_probe_blocks_creation(self, params: PhysicalParams) -> None:
        register_backend("offline", kind="test double", requires="hardware",
                         probe=lambda: False, factory=lambda *a, **k: None)
        try:
            with pytest.raises(BackendUnavailableError):
                create_backend("offline", Topology.decoupled(1), params)
        finally:
            unregister_backend("offline")


class TestCpuBitIdentity:
    @pytest.mark.parametrize("n", [1, 2, 3, 7, 33])
    def test_single_derivative_eval(self, n: int, params: PhysicalParams) -> None:
        top = build_topology(n, seed=n)
        m = _scrambled_state(n, seed=n)
        u = np.array([0.37])
        outs = {}
        for backend_id in ("reference", "fused", "parallel"):
            backend = create_backend(backend_id, top, params)
            out = np.empty((n, 3))
            backend.derivative(m, u, out)
            outs[backend_id] = out
        assert np.array_equal(outs["reference"], outs["fused"])
        assert np.array_equal(outs["reference"], outs["parallel"])

    def test_worker_count_does_not_change_bits(self, params: PhysicalParams) -> None:
        top = build_topology(19, seed=2)
        m = _scrambled_state(19, seed=5)
        u = np.array([-0.8])
        results = []
        for workers in (1, 2, None):
            backend = create_backend("parallel", top, params, workers=workers)
            out = np.empty((19, 3))
            backend.derivative(m, u, out)
            results.append(out)
        assert np.array_equal(results[0], results[1])
        assert np.array_equal(results[0], results[2])

    def test_trajectory_equality_over_many_steps(self, params: PhysicalParams) -> None:
        top = build_topology(13, seed=7)
        base = RunConfig(n=13, steps=200, dt=1e-11, backend="reference", record_stride=20)
        ref = integrate(top, params, base)
        for backend_id in ("fused", "parallel"):
            other = integrate(top, params, base.with_overrides(backend=backend_id))
            assert np.array_equal(ref.states, other.states), backend_id

    def test_repeated_calls_have_no_hidden_state(self, params: PhysicalParams) -> None:
        top = build_topology(9, seed=1)
        m = _scrambled_state(9, seed=9)
        u = np.array([0.11])
        for backend_id in ("reference", "fused", "parallel"):
            backend = create_backend(backend_id, top, params)
            first = np.empty((9, 3))
            backend.derivative(m, u, first)
            second = np.empty((9, 3))
            backend.derivative(m, u, second)
            assert np.array_equal(first, second), backend_id

    def test_parallel_worker_clamp(self, params: PhysicalParams) -> None:
        backend = create_backend("parallel", Topology.decoupled(2), params, workers=10_000)
        assert backend.workers >= 1


class TestTorchOnCpuDevice:
    """The CUDA path cannot run here; the same kernel on the torch CPU device
    still exercises the tensor plumbing end to end."""

    torch = pytest.importorskip("torch")

    def test_matches_reference_to_tolerance(self, params: PhysicalParams) -> None:
        from spinosc.backends.gpu import TorchBackend

        n = 23
        top = build_topology(n, seed=3)
        backend = TorchBackend(top, params, device="cpu")
        m = _scrambled_state(n, seed=31)
        u = np.array([0.21])
        got = np.empty((n, 3))
        backend.derivative(m, u, got)

        ref = create_backend("reference", top, params)
        want = np.empty((n, 3))
        ref.derivative(m, u, want)
        scale = np.abs(want).max()
        assert np.abs(got - want).max() <= 1e-12 * scale

    def test_device_env_var_is_honored(self, params: PhysicalParams, monkeypatch) -> None:
        from spinosc.backends.gpu import ENV_DEVICE, TorchBackend, _resolve_device

        monkeypatch.delenv(ENV_DEVICE, raising=False)
        assert _resolve_device(None) == "cuda:0"
        monkeypatch.setenv(ENV_DEVICE, "3")
        assert _resolve_device(None) == "cuda:3"
        assert _resolve_device(1) == "cuda:1"
        # non-integer strings name the device directly; lets tests run on cpu
        monkeypatch.setenv(ENV_DEVICE, "cpu")
        assert _resolve_device(None) == "cpu"
        backend = TorchBackend(Topology.decoupled(2), params, device=None)
        assert str(backend._device) == "cpu"

    def test_cuda_request_without_cuda_raises(self, params: PhysicalParams) -> None:
        import torch

        if torch.cuda.is_available():
            pytest.skip("CUDA present; the unavailable path cannot be exercised")
        from spinosc.backends.gpu import TorchBackend

        with pytest.raises(BackendUnavailableError):
            TorchBackend(Topology.decoupled(1), params, device=None)


def test_gpu_descriptor_reflects_probe() -> None:
    from spinosc.backends.gpu import is_available

    gpu = next(d for d in list_backends() if d.backend_id == "gpu")
    assert gpu.available == is_available()
