"""Interchangeable derivative backends.

Every backend evaluates the same equation of motion through an object with a
`derivative(m, u, out)` method bound to one topology and parameter set. CPU
backends follow the package's pinned operation order and return bit-identical
derivatives; the GPU backend is allowed library-order reductions and is
compared with a tolerance instead.

The registry maps stable string ids to probe/factory pairs. Order of
registration is the presentation order everywhere (CLI listings, benchmark
tables): reference, fused, parallel, gpu.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..errors import BackendUnavailableError


@dataclass(frozen=True)
class BackendDescriptor:
    """One row of the backend listing: id, flavor, availability, dependency."""

    backend_id: str
    kind: str
    available: bool
    requires: str


@dataclass(frozen=True)
class _Entry:
    kind: str
    requires: str
    probe: Callable[[], bool]
    factory: Callable[..., object]


_REGISTRY: dict[str, _Entry] = {}


def register_backend(backend_id: str, kind: str, requires: str,
                     probe: Callable[[], bool],
                     factory: Callable[..., object]) -> None:
    """Add (or replace) a backend registration.

    The factory is called as factory(topology, params, workers=..., gpu_device=...)
    and must return an object with `derivative(m, u, out)`. Replacement is
    allowed so tests can swap in instrumented variants; use
    `unregister_backend` to clean up.
    """
    _REGISTRY[backend_id] = _Entry(kind=kind, requires=requires,
                                   probe=probe, factory=factory)


def unregister_backend(backend_id: str) -> None:
    _REGISTRY.pop(backend_id, None)


def list_backends() -> list[BackendDescriptor]:
    """Descriptors for every registered backend, in registration order."""
    return [
        BackendDescriptor(backend_id=bid, kind=e.kind,
                          available=bool(e.probe()), requires=e.requires)
        for bid, e in _REGISTRY.items()
    ]


def available_backend_ids() -> list[str]:
    return [bid for bid, e in _REGISTRY.items() if e.probe()]


def create_backend(backend_id: str, topology, params, *,
                   workers: int | None = None,
                   gpu_device=None):
    """Instantiate a registered backend for one topology and parameter set.

    Unknown or currently unavailable ids raise `BackendUnavailableError`
    listing what can be used instead.
    """
    entry = _REGISTRY.get(backend_id)
    if entry is None or not entry.probe():
        raise BackendUnavailableError(backend_id, available_backend_ids())
    return entry.factory(topology, params, workers=workers, gpu_device=gpu_device)


def _numba_importable() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _make_reference(topology, params, workers=None, gpu_device=None):
    from .reference import ReferenceBackend

    return ReferenceBackend(topology, params)


def _make_fused(topology, params, workers=None, gpu_device=None):
    from .cpu_jit import FusedBackend

    return FusedBackend(topology, params)


def _make_parallel(topology, params, workers=None, gpu_device=None):
    from .cpu_jit import ParallelBackend

    return ParallelBackend(topology, params, workers=workers)


def _make_gpu(topology, params, workers=None, gpu_device=None):
    from .gpu import TorchBackend

    return TorchBackend(topology, params, device=gpu_device)


def _gpu_available() -> bool:
    from .gpu import is_available

    return is_available()


register_backend("reference", kind="vectorized numpy baseline",
                 requires="numpy", probe=lambda: True, factory=_make_reference)
register_backend("fused", kind="compiled sequential",
                 requires="numba", probe=_numba_importable, factory=_make_fused)
register_backend("parallel", kind="compiled multicore",
                 requires="numba", probe=_numba_importable, factory=_make_parallel)
register_backend("gpu", kind="torch offload",
                 requires="torch with a CUDA device", probe=_gpu_available,
                 factory=_make_gpu)
