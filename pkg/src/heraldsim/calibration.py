"""From pump power to squeezing parameter.

The nonlinear susceptibility is carried as ``chi2_tilde = chi2 / eps0`` in
m/V throughout; a bare ``chi2`` in SI units converts by dividing by
:data:`~heraldsim.constants.VACUUM_PERMITTIVITY`.

    A    = sqrt(2 W / (pi d^2 eps0 c n))      pump field amplitude
    beta = omega_s A chi2_tilde / v_g         gain per unit length
    zeta = beta l_eff
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from heraldsim.constants import SPEED_OF_LIGHT, VACUUM_PERMITTIVITY
from heraldsim.crystal_bands import EnergyRatio
from heraldsim.errors import BandEdgeError, DegenerateError

DEFAULT_CHI2_TILDE = 25.2e-12
# below this group velocity the 1/v_g gain law is not trusted
DEFAULT_VG_FLOOR = 1e-5 * SPEED_OF_LIGHT


@dataclass(frozen=True)
class PumpSpec:
    radiant_flux: float
    beam_radius: float
    omega_s: float
    chi2_tilde: float = DEFAULT_CHI2_TILDE
    refr_index_n: float = 1.0
    pump_phase: float = 0.0

    def __post_init__(self):
        checks = (
            ("radiant_flux", self.radiant_flux >= 0),
            ("beam_radius", self.beam_radius > 0),
            ("chi2_tilde", self.chi2_tilde > 0),
            ("refr_index_n", self.refr_index_n >= 1),
            ("omega_s", self.omega_s > 0),
        )
        for name, ok in checks:
            value = getattr(self, name)
            if not (math.isfinite(value) and ok):
                raise ValueError(f"invalid {name}: {value!r}")
        if not math.isfinite(self.pump_phase):
            raise ValueError(f"invalid pump_phase: {self.pump_phase!r}")


@dataclass(frozen=True)
class SqueezeBudget:
    gain_beta: float
    zeta: float
    v_g: float
    effective_length: float

    def __post_init__(self):
        if self.zeta < 0:
            raise ValueError("zeta must be non-negative")


def pump_amplitude(pump: PumpSpec) -> float:
    """Peak pump field in V/m for a uniform beam of radius ``d``."""
    intensity = pump.radiant_flux / (math.pi * pump.beam_radius**2)
    return math.sqrt(2 * intensity / (VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * pump.refr_index_n))


def gain_coefficient(pump: PumpSpec, v_g: float, vg_floor: float = DEFAULT_VG_FLOOR) -> float:
    """``beta = omega_s A chi2_tilde / v_g`` in 1/m."""
    if not v_g > 0 or v_g < vg_floor:
        raise BandEdgeError(f"group velocity {v_g!r} m/s is below the floor {vg_floor:g} m/s")
    return pump.omega_s * pump_amplitude(pump) * pump.chi2_tilde / v_g


def required_group_velocity(pump: PumpSpec, zeta_target: float, length: float) -> float:
    """Group velocity at which a crystal of ``length`` reaches ``zeta_target``."""
    if not zeta_target > 0:
        raise ValueError(f"zeta_target must be positive, got {zeta_target!r}")
    if not length > 0:
        raise ValueError(f"length must be positive, got {length!r}")
    return pump.omega_s * pump_amplitude(pump) * pump.chi2_tilde * length / zeta_target


def effective_length(length: float, ratio: EnergyRatio) -> float:
    """Length corrected for the time the field spends in the nonlinear layer B."""
    if ratio.p_B == 0:
        raise DegenerateError("no field energy in layer B: the nonlinear layer is never visited")
    return length * (ratio.p_A + ratio.p_B) / ratio.p_B


def squeeze_db(r: float) -> float:
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r!r}")
    return 20 * r * math.log10(math.e)


def squeeze_budget(pump: PumpSpec, v_g: float, length: float, ratio: EnergyRatio,
                   vg_floor: float = DEFAULT_VG_FLOOR) -> SqueezeBudget:
    beta = gain_coefficient(pump, v_g, vg_floor)
    l_eff = effective_length(length, ratio)
    return SqueezeBudget(beta, beta * l_eff, v_g, l_eff)


@dataclass(frozen=True)
class CalibrationReport:
    pump_amplitude: float
    required_vg: float
    required_vg_over_c: float
    effective_length: float
    zeta_target: float
    squeeze_db: float

    def rows(self) -> list[tuple[str, float]]:
        return [
            ("pump_amplitude_V_per_m", self.pump_amplitude),
            ("required_vg_m_per_s", self.required_vg),
            ("required_vg_over_c", self.required_vg_over_c),
            ("effective_length_m", self.effective_length),
            ("zeta_target", self.zeta_target),
            ("squeeze_db", self.squeeze_db),
        ]


def calibrate(pump: PumpSpec, length: float, ratio: EnergyRatio, zeta_target: float = 1.0) -> CalibrationReport:
    """Pump amplitude, required v_g for ``zeta_target`` and effective length."""
    vg = required_group_velocity(pump, zeta_target, length)
    return CalibrationReport(
        pump_amplitude=pump_amplitude(pump),
        required_vg=vg,
        required_vg_over_c=vg / SPEED_OF_LIGHT,
        effective_length=effective_length(length, ratio),
        zeta_target=zeta_target,
        squeeze_db=squeeze_db(zeta_target),
    )
