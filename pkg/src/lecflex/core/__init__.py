"""Domain types, scenario schema, validation and unit conversion."""

from .errors import (DanglingReferenceError, DisconnectedNetworkError, DuplicatePccError,
                     InvalidValueError, NonPositiveRatingError, ScenarioError, SchemaError,
                     SelfLoopError, SeriesLengthError, UnitError)
from .scenario import SCHEMA_VERSION, dump_scenario, load_scenario, scenario_to_dict, validate_scenario
from .types import Branch, Bus, LECSpec, MarketParams, Network, Scenario, TariffBook
from .units import from_per_unit, impedance_base, to_per_unit

__all__ = [
    "Branch", "Bus", "DanglingReferenceError", "DisconnectedNetworkError", "DuplicatePccError",
    "InvalidValueError", "LECSpec", "MarketParams", "Network", "NonPositiveRatingError",
    "SCHEMA_VERSION", "Scenario", "ScenarioError", "SchemaError", "SelfLoopError", "SeriesLengthError",
    "TariffBook", "UnitError", "dump_scenario", "from_per_unit", "impedance_base", "load_scenario",
    "scenario_to_dict", "to_per_unit", "validate_scenario",
]
