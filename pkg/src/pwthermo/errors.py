"""Exception hierarchy shared by every module."""


class PwThermoError(Exception):
    """Base class for all library errors."""


class InvalidMap(PwThermoError):
    """The map description violates the piecewise expanding hypotheses."""


class NoPiece(PwThermoError):
    """A point lies outside every closed piece."""


class WordMismatch(PwThermoError):
    """An orbit left the prescribed itinerary."""


class EmptyCylinder(PwThermoError):
    """The word does not index a nonempty cylinder."""


class DepthExplosion(PwThermoError):
    """Enumeration would exceed the configured cylinder budget."""

    def __init__(self, depth: int, count: int, budget: int):
        super().__init__(
            f"depth {depth}: cylinder count reached {count} (budget {budget})"
        )
        self.depth = depth
        self.count = count
        self.budget = budget


class UnsupportedGeometry(PwThermoError):
    """The requested operation needs geometry this build does not model."""


class ParameterOutOfRange(PwThermoError):
    """Bound parameters outside 0 <= s <= t < min(1/p, alpha), 1 < p < inf."""


class NotMarkov(PwThermoError):
    """Exact Markov structure was required but is absent."""


class NoConvergence(PwThermoError):
    """An iterative eigen-solver hit its iteration cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NoMeasures(PwThermoError):
    """A variational bound was requested with no measure candidates."""


class ConfigError(PwThermoError):
    """An experiment configuration failed validation."""
