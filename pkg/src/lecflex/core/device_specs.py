"""Immutable device parameter records.

Units: power kW, energy kWh, prices SEK, temperatures degC, time h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidValueError


def _in_unit(name, value, low_open=True):
    if not (0.0 < value <= 1.0) if low_open else not (0.0 <= value <= 1.0):
        raise InvalidValueError(f"{name}={value} must lie in {'(0' if low_open else '[0'}, 1]", name)


def _nonneg(name, value):
    if not value >= 0.0:
        raise InvalidValueError(f"{name}={value} must be >= 0", name)


@dataclass(frozen=True)
class ChpSpec:
    """Biomass boiler feeding district heat and a steam turbine.

    ``initial_boiler_heat`` anchors the first-hour ramp limit; without it the
    first hour is ramp-free.
    """

    name: str
    turbine_eff: float
    boiler_min: float
    boiler_max: float
    ramp: float
    p_min: float
    p_max: float
    xi_lo: float
    xi_hi: float
    fuel_cost: float
    initial_boiler_heat: float | None = None
    kind = "chp"

    def __post_init__(self):
        if not 0.0 < self.turbine_eff < 1.0:
            raise InvalidValueError(f"turbine_eff={self.turbine_eff} must lie in (0, 1)", "turbine_eff")
        if not 0.0 <= self.boiler_min <= self.boiler_max:
            raise InvalidValueError("boiler bounds must satisfy 0 <= min <= max", "boiler_min")
        if not 0.0 <= self.p_min <= self.p_max:
            raise InvalidValueError("CHP power bounds must satisfy 0 <= min <= max", "p_min")
        if self.xi_lo > self.xi_hi:
            raise InvalidValueError("xi_lo must not exceed xi_hi", "xi_lo")
        _nonneg("ramp", self.ramp)
        _nonneg("fuel_cost", self.fuel_cost)
        if self.initial_boiler_heat is not None and not (
                self.boiler_min <= self.initial_boiler_heat <= self.boiler_max):
            raise InvalidValueError("initial_boiler_heat outside boiler bounds", "initial_boiler_heat")


@dataclass(frozen=True)
class BesSpec:
    name: str
    eta_ch: float
    eta_dis: float
    p_ch_max: float
    p_dis_max: float
    soc_min: float
    soc_max: float
    soc_init: float
    deg_cost: float = 0.0
    soc_final_min: float | None = None
    kind = "bes"

    def __post_init__(self):
        _in_unit("eta_ch", self.eta_ch)
        _in_unit("eta_dis", self.eta_dis)
        _nonneg("p_ch_max", self.p_ch_max)
        _nonneg("p_dis_max", self.p_dis_max)
        _nonneg("deg_cost", self.deg_cost)
        if not 0.0 <= self.soc_min <= self.soc_init <= self.soc_max:
            raise InvalidValueError("SOC bounds must satisfy 0 <= min <= init <= max", "soc_init")
        if self.soc_final_min is not None and not self.soc_min <= self.soc_final_min <= self.soc_max:
            raise InvalidValueError("soc_final_min outside SOC bounds", "soc_final_min")


@dataclass(frozen=True)
class DrSpec:
    """Shiftable share of the LEC load, modelled as a virtual store."""

    name: str
    xi: float
    kappa: float
    energy_neutral: bool = True
    kind = "dr"

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise InvalidValueError(f"xi={self.xi} must lie in [0, 1]", "xi")
        if not self.kappa > 0.0:
            raise InvalidValueError(f"kappa={self.kappa} must be > 0", "kappa")


@dataclass(frozen=True)
class TesSpec:
    """Phase-change thermal store with electric heater and Stirling discharge.

    Temperatures obey ``t_s1 < t_s2 <= t_l1 < t_l2``. Specific heats are in
    kWh/(kg degC), latent heat in kWh/kg. ``w_*`` bound the Stirling shaft
    work and ``hr_*`` the recovered heat while discharging.
    """

    name: str
    mass: float
    c_solid: float
    c_liquid: float
    latent_heat: float
    t_offset: float
    t_s1: float
    t_s2: float
    t_l1: float
    t_l2: float
    t_init: float
    heater_eff: float
    p_in_max: float
    h_ch_max: float
    h_dis_max: float
    stirling_eff: float
    hx_eff: float
    mech_eff: float
    gen_eff: float
    h_idle: float = 0.0
    w_min: float = 0.0
    w_max: float = math.inf
    hr_min: float = 0.0
    hr_max: float = math.inf
    t_final_min: float | None = None
    kind = "tes"

    @property
    def c_latent(self) -> float:
        return self.latent_heat / (2.0 * self.t_offset)

    def __post_init__(self):
        if not self.mass > 0:
            raise InvalidValueError("mass must be > 0", "mass")
        for name in ("c_solid", "c_liquid", "latent_heat", "t_offset"):
            if not getattr(self, name) > 0:
                raise InvalidValueError(f"{name} must be > 0", name)
        if not (self.t_s1 < self.t_s2 <= self.t_l1 < self.t_l2):
            raise InvalidValueError("temperature boundaries must satisfy S1 < S2 <= L1 < L2", "t_s1")
        if not self.t_s1 <= self.t_init <= self.t_l2:
            raise InvalidValueError("t_init outside [t_s1, t_l2]", "t_init")
        for name in ("heater_eff", "stirling_eff", "hx_eff", "mech_eff", "gen_eff"):
            _in_unit(name, getattr(self, name))
        for name in ("p_in_max", "h_ch_max", "h_dis_max", "h_idle", "w_min", "hr_min"):
            _nonneg(name, getattr(self, name))
        if self.w_min > self.w_max or self.hr_min > self.hr_max:
            raise InvalidValueError("Stirling output bounds inverted", "w_min")
        if self.t_final_min is not None and not self.t_s1 <= self.t_final_min <= self.t_l2:
            raise InvalidValueError("t_final_min outside [t_s1, t_l2]", "t_final_min")


@dataclass(frozen=True)
class SbSpec:
    """Electric hot-water tank that is kept full (draws replaced by cold water).

    ``c_water`` is in kJ/(litre degC) and ``loss_coeff`` in kJ/(h degC), so the
    heater term ``3600 * H`` (kWh to kJ) and the loss term share units.
    """

    name: str
    heater_eff: float
    volume: float
    c_water: float
    loss_coeff: float
    cold_water_temp: tuple
    t_min: float
    t_max: float
    p_max: float
    t_init: float
    kind = "sb"

    def __post_init__(self):
        _in_unit("heater_eff", self.heater_eff)
        if not self.volume > 0:
            raise InvalidValueError("volume must be > 0", "volume")
        if not self.c_water > 0:
            raise InvalidValueError("c_water must be > 0", "c_water")
        _nonneg("loss_coeff", self.loss_coeff)
        _nonneg("p_max", self.p_max)
        if not self.t_min <= self.t_max:
            raise InvalidValueError("t_min must not exceed t_max", "t_min")
        if not self.t_min <= self.t_init <= self.t_max:
            raise InvalidValueError("t_init outside [t_min, t_max]", "t_init")
        object.__setattr__(self, "cold_water_temp", tuple(float(v) for v in self.cold_water_temp))


@dataclass(frozen=True)
class HpSpec:
    name: str
    cop: float
    p_max: float
    kind = "hp"

    def __post_init__(self):
        _nonneg("cop", self.cop)
        _nonneg("p_max", self.p_max)


DEVICE_TYPES = {"chp": ChpSpec, "bes": BesSpec, "dr": DrSpec, "tes": TesSpec, "sb": SbSpec, "hp": HpSpec}
