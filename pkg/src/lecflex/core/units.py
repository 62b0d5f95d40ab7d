"""Per-unit conversion at the power-flow boundary."""

from __future__ import annotations

from .errors import UnitError

POWER_SCALE = {"kW": 1.0, "MW": 1000.0}
PRICE_SCALE = {"SEK/kWh": 1.0, "SEK/MWh": 1e-3}


def _base(network_or_base) -> float:
    base = getattr(network_or_base, "base_power", network_or_base)
    base = float(base)
    if not base > 0.0:
        raise UnitError(f"base power must be positive, got {base}")
    return base


def to_per_unit(network_or_base, value):
    """kW / kvar / kVA -> per unit on the network power base."""
    return value / _base(network_or_base)


def from_per_unit(network_or_base, value):
    """Per unit -> kW / kvar / kVA."""
    base = _base(network_or_base)
    return value * base


def impedance_base(base_power_kva: float, base_voltage_kv: float) -> float:
    """Ohms corresponding to 1 pu."""
    if not base_power_kva > 0 or not base_voltage_kv > 0:
        raise UnitError("impedance base needs positive power and voltage bases")
    return base_voltage_kv ** 2 * 1000.0 / base_power_kva
