"""Parameter validation and derived-constant oracles.

The frozen numbers below were computed independently with decimal
arithmetic from the defaults; they pin the unit conventions (Oe, emu,
CGS gyromagnetic ratio) so a refactor cannot silently change them.
"""

import math

import pytest

from spinosc import ParameterError, PhysicalParams, derive, small_angle_frequency

# independently derived from the default parameter set
C_PREC = 17639559.011024725
C_DAMP = 88197.79505512363
H_ANISO = 416.12543922361147
H_S_PREFACTOR = 134.86812645902467
SMALL_ANGLE_HZ = 1.729767978589695e9


def test_derived_constants_frozen() -> None:
    d = derive(PhysicalParams())
    assert d.c_prec == pytest.approx(C_PREC, rel=1e-15)
    assert d.c_damp == pytest.approx(C_DAMP, rel=1e-15)
    assert d.h_aniso == pytest.approx(H_ANISO, rel=1e-15)
    assert d.h_s_prefactor == pytest.approx(H_S_PREFACTOR, rel=1e-15)


def test_damping_ratio() -> None:
    p = PhysicalParams()
    d = derive(p)
    assert d.c_damp / d.c_prec == pytest.approx(p.alpha, rel=1e-14)


def test_small_angle_frequency() -> None:
    p = PhysicalParams()
    f = small_angle_frequency(p)
    assert f == pytest.approx(SMALL_ANGLE_HZ, rel=1e-12)
    # second route: gamma * (H_appl + H_K - 4 pi M) / (2 pi)
    h_eff = p.h_appl + p.h_k - 4.0 * math.pi * p.m_sat
    assert f == pytest.approx(p.gamma * h_eff / (2.0 * math.pi), rel=1e-14)


def test_polarizer_is_unit_norm() -> None:
    d = derive(PhysicalParams())
    norm = math.sqrt(d.px**2 + d.py**2 + d.pz**2)
    assert norm == pytest.approx(1.0, abs=1e-15)


def test_zero_alpha_is_allowed() -> None:
    p = PhysicalParams(alpha=0.0)
    assert derive(p).c_damp == 0.0


def test_zero_current_kills_torque() -> None:
    assert derive(PhysicalParams(current=0.0)).h_s_prefactor == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gamma": 0.0},
        {"gamma": -1.0},
        {"alpha": -1e-3},
        {"m_sat": 0.0},
        {"volume": -1e-18},
        {"charge_e": 0.0},
        {"hbar": 0.0},
        {"lambda_stt": 1.0},
        {"lambda_stt": -1.5},
        {"h_appl": float("nan")},
        {"current": float("inf")},
        {"p_vec": (0.0, 0.0, 0.0)},
    ],
)
def test_rejects_bad_values(kwargs: dict) -> None:
    with pytest.raises(ParameterError):
        PhysicalParams(**kwargs)


def test_frozen() -> None:
    p = PhysicalParams()
    with pytest.raises(AttributeError):
        p.alpha = 0.1  # type: ignore[misc]
