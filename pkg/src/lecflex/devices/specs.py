"""Device parameter records (defined next to the other domain types)."""

from ..core.device_specs import DEVICE_TYPES, BesSpec, ChpSpec, DrSpec, HpSpec, SbSpec, TesSpec

__all__ = ["DEVICE_TYPES", "BesSpec", "ChpSpec", "DrSpec", "HpSpec", "SbSpec", "TesSpec"]
