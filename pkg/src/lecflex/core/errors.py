"""Named validation errors for scenario and spec data."""


class ScenarioError(ValueError):
    """Base class; ``path`` locates the offending field (dotted)."""

    kind = "invalid scenario"

    def __init__(self, message: str, path: str = ""):
        self.path = path
        prefix = f"{self.kind}: " if self.kind not in message else ""
        where = f" (at {path})" if path else ""
        super().__init__(f"{prefix}{message}{where}")


class SchemaError(ScenarioError):
    kind = "schema"


class InvalidValueError(ScenarioError):
    kind = "invalid value"


class SelfLoopError(ScenarioError):
    kind = "self-loop branch"


class SeriesLengthError(ScenarioError):
    kind = "series length"


class DanglingReferenceError(ScenarioError):
    kind = "dangling reference"


class NonPositiveRatingError(ScenarioError):
    kind = "non-positive rating"


class DuplicatePccError(ScenarioError):
    kind = "duplicate PCC"


class DisconnectedNetworkError(ScenarioError):
    kind = "disconnected network"


class UnitError(ValueError):
    """Unit conversion with an invalid base."""
