"""Device models (CHP, battery, demand response, PCM store, smart boiler, heat pump)."""

from .build import (DeviceBuild, DeviceError, build_bes, build_chp, build_device, build_dr, build_hp, build_sb,
                    build_tes, tes_enthalpy, tes_specific_heat)
from .specs import DEVICE_TYPES, BesSpec, ChpSpec, DrSpec, HpSpec, SbSpec, TesSpec

__all__ = [
    "BesSpec", "ChpSpec", "DEVICE_TYPES", "DeviceBuild", "DeviceError", "DrSpec", "HpSpec", "SbSpec", "TesSpec",
    "build_bes", "build_chp", "build_device", "build_dr", "build_hp", "build_sb", "build_tes", "tes_enthalpy",
    "tes_specific_heat",
]
