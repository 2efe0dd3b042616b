"""Physical parameters of the macrospin oscillator array.

Gaussian (CGS) units throughout: fields in Oe, magnetization in emu/cm^3,
volume in cm^3, time in s. The spin-torque field prefactor mixes SI inputs
(hbar in J s, charge in C, current in A) with CGS magnetics; the conversion
is 1 J per emu of moment = 1e7 G, applied once in `derive`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ParameterError

# Free-layer disc: radius 60 nm, thickness 2 nm; 1 nm^3 = 1e-21 cm^3.
_VOLUME_CM3 = math.pi * 60.0**2 * 2.0 * 1e-21


@dataclass(frozen=True)
class PhysicalParams:
    """Material, geometry and drive constants for every oscillator.

    All oscillators in an array share one parameter set. Defaults are the
    permalloy-like free layer used for the benchmark protocol.
    """

    gamma: float = 1.764e7          # gyromagnetic ratio [rad / (Oe s)]
    alpha: float = 0.005            # Gilbert damping [-]
    m_sat: float = 1448.3           # saturation magnetization [emu / cm^3]
    h_k: float = 18.616e3           # uniaxial anisotropy field [Oe]
    h_appl: float = 200.0           # applied field along e_z [Oe]
    eta: float = 0.537              # spin polarization efficiency [-]
    lambda_stt: float = 0.288       # torque asymmetry [-]
    current: float = 2.5e-3         # drive current [A]
    volume: float = _VOLUME_CM3     # free-layer volume [cm^3]
    charge_e: float = 1.60217733e-19   # elementary charge [C]
    hbar: float = 1.05457266e-34       # reduced Planck constant [J s]
    p_vec: tuple[float, float, float] = (1.0, 0.0, 6.123234e-17)  # pinned-layer unit vector
    a_cp: float = 1.0               # coupling field amplitude [Oe]
    a_in: float = 1.0               # input field amplitude [Oe]

    def __post_init__(self) -> None:
        for name in ("gamma", "m_sat", "h_k", "eta", "volume", "charge_e", "hbar"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"{name} must be positive")
        # alpha = 0 is admitted for the undamped precession diagnostic.
        if not self.alpha >= 0.0:
            raise ParameterError("alpha must be non-negative")
        if not abs(self.lambda_stt) < 1.0:
            raise ParameterError("lambda_stt must satisfy |lambda| < 1")
        for name in ("h_appl", "current", "a_cp", "a_in"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if len(self.p_vec) != 3:
            raise ParameterError("p_vec must have three components")
        norm = math.sqrt(self.p_vec[0] ** 2 + self.p_vec[1] ** 2 + self.p_vec[2] ** 2)
        if abs(norm - 1.0) > 1e-12:
            raise ParameterError(f"p_vec must be a unit vector, |p| = {norm!r}")

    def with_overrides(self, **kwargs) -> "PhysicalParams":
        """Copy with selected fields replaced (re-validates)."""
        return replace(self, **kwargs)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants precomputed from `PhysicalParams` for the equation of motion.

    `derive` is a pure function of the parameter values: recomputing it from
    equal inputs is bit-identical, which the cross-backend equality tests
    rely on.
    """

    c_prec: float        # gamma / (1 + alpha^2)  [rad / (Oe s)]
    c_damp: float        # alpha * c_prec, in exactly that product order
    h_aniso: float       # h_k - 4 pi m_sat: anisotropy minus demagnetization [Oe]
    h_s_prefactor: float  # spin-torque field scale [Oe]
    px: float
    py: float
    pz: float


def derive(params: PhysicalParams) -> DerivedConstants:
    """Compute the derived constants used by every derivative evaluation.

    The spin-torque prefactor is hbar * eta * I / (2 e M V): the numerator is
    evaluated in J, divided by the layer moment M V in emu, then converted by
    1e7 G per (J / emu). For the default parameters this is ~134.9 Oe.
    """
    c_prec = params.gamma / (1.0 + params.alpha * params.alpha)
    c_damp = params.alpha * c_prec
    h_aniso = params.h_k - 4.0 * math.pi * params.m_sat
    moment = params.m_sat * params.volume
    h_s_prefactor = (
        params.hbar * params.eta * params.current
        / (2.0 * params.charge_e)
        / moment
        * 1.0e7
    )
    return DerivedConstants(
        c_prec=c_prec,
        c_damp=c_damp,
        h_aniso=h_aniso,
        h_s_prefactor=h_s_prefactor,
        px=params.p_vec[0],
        py=params.p_vec[1],
        pz=params.p_vec[2],
    )


def small_angle_frequency(params: PhysicalParams) -> float:
    """Linearized precession frequency about e_z, in Hz.

    f = gamma (h_appl + h_aniso) / 2 pi for small cone angles; ~1.73 GHz at
    the default parameters. Used as a sanity band for spectral checks, not in
    the equation of motion.
    """
    consts = derive(params)
    return params.gamma * (params.h_appl + consts.h_aniso) / (2.0 * math.pi)
