"""Domain records shared by every module.

All records are frozen; series are tuples of floats of length ``horizon``.
External units are kW / kvar / kVA / kWh / SEK / degC; impedances are per
unit on ``(base_power, base_voltage)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device_specs import BesSpec, ChpSpec, DrSpec, HpSpec, SbSpec, TesSpec

Series = tuple

DeviceSpec = ChpSpec | BesSpec | DrSpec | TesSpec | SbSpec | HpSpec


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str = "load"
    voltage_min: float = 0.9
    voltage_max: float = 1.1
    load_p: Series = ()
    load_q: Series = ()
    pv_p: Series = ()
    dg_p: Series = ()
    dg_q: Series = ()
    pcc_of: str | None = None

    @property
    def is_slack(self) -> bool:
        return self.kind == "slack"


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    resistance: float
    reactance: float
    rating: float
    charging_susceptance: float = 0.0
    status: str = "closed"

    @property
    def closed(self) -> bool:
        return self.status == "closed"

    @property
    def impedance(self) -> complex:
        return complex(self.resistance, self.reactance)

    @property
    def angle(self) -> float:
        """Impedance angle, derived rather than stored."""
        return math.atan2(self.reactance, self.resistance)


@dataclass(frozen=True)
class Network:
    buses: tuple
    branches: tuple
    base_power: float = 1000.0
    base_voltage: float = 11.0

    @property
    def num_buses(self) -> int:
        return len(self.buses)

    @property
    def slack(self) -> int:
        return next(b.id for b in self.buses if b.is_slack)

    def bus(self, bus_id: int) -> Bus:
        return self.buses[bus_id]

    def pcc_buses(self) -> dict:
        """LEC id -> bus id."""
        return {b.pcc_of: b.id for b in self.buses if b.pcc_of is not None}


@dataclass(frozen=True)
class TariffBook:
    energy_price: Series
    network_tariff: float
    heat_price: Series
    heat_variable_charge: float
    heat_fixed_charge: float
    load_shed_cost: float

    def energy(self) -> np.ndarray:
        return np.asarray(self.energy_price, dtype=float)

    def heat(self) -> np.ndarray:
        return np.asarray(self.heat_price, dtype=float)


@dataclass(frozen=True)
class MarketParams:
    c1: float = 0.5
    c2: float = 0.5
    c3: float = 0.5
    c4: float = 0.25
    max_iterations: int = 30
    congestion_tolerance: float = 0.1
    deviation_cap: float = 0.25
    rebound_rounds: int = 3


@dataclass(frozen=True)
class LECSpec:
    """One community behind a single connection point.

    ``pcc_rating`` (kVA) scales the deviation guard for hours with a small
    baseline exchange; ``heat_import_max`` / ``heat_export_max`` cap the
    district-heating connection (kW, unbounded when ``None``).
    """

    id: str
    pcc_bus: int
    load_p: Series
    load_q: Series
    heat_load: Series
    hot_water_draw: Series
    ambient_temp: Series
    pv_p: Series
    devices: tuple = ()
    pcc_rating: float = 0.0
    heat_import_max: float | None = None
    heat_export_max: float | None = None

    def devices_of(self, kind: str) -> list:
        return [d for d in self.devices if d.kind == kind]


@dataclass(frozen=True)
class Scenario:
    network: Network
    tariffs: TariffBook
    market: MarketParams
    lecs: tuple
    horizon: int = 24
    dt: float = 1.0
    name: str = "scenario"
    units: dict = field(default_factory=lambda: dict(CANONICAL_UNITS), compare=False, hash=False)

    def lec(self, lec_id: str) -> LECSpec:
        for spec in self.lecs:
            if spec.id == lec_id:
                return spec
        raise KeyError(lec_id)


CANONICAL_UNITS = {"power": "kW", "price": "SEK/kWh", "impedance": "pu"}
